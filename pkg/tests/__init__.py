"""
Tests package for the spectrum market solver.
"""
