"""
Solver services for the spectrum market.

Layered bottom-up: special and numerics, then the user game, the
provider/owner chain, the brute-force oracle, and the sweep and table
front ends.
"""

__all__ = []
