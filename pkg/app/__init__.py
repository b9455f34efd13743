"""
Flask application factory.
"""
import os
import logging

from flask import Flask, jsonify
from flask_cors import CORS
from flask_limiter import Limiter
from flask_limiter.util import get_remote_address
from marshmallow import ValidationError
from werkzeug.exceptions import HTTPException
from werkzeug.utils import import_string

from app.utils.errors import SpectrumTierError

# Initialize extensions (without app instance)
limiter = Limiter(
    key_func=get_remote_address,
    default_limits=["1000 per day", "200 per hour"],
)


def create_app(config_name='development'):
    """
    Application factory pattern.

    Args:
        config_name: 'development', 'production', or 'testing'

    Returns:
        Configured Flask application
    """
    app = Flask(__name__)

    # Load configuration
    config_class = import_string(f'app.config.{config_name.capitalize()}Config')
    app.config.from_object(config_class)
    config_class.init_app(app)

    # Initialize extensions
    limiter.init_app(app)

    cors_origins = os.getenv('CORS_ORIGINS', 'http://localhost:5173,http://localhost:3000').split(',')
    CORS(app, resources={
        r"/api/*": {
            "origins": cors_origins,
            "methods": ["GET", "POST", "OPTIONS"],
            "allow_headers": ["Content-Type"],
            "max_age": 3600
        }
    })

    # Configure logging
    setup_logging(app)

    # Register blueprints
    register_blueprints(app)

    # Register error handlers
    register_error_handlers(app)

    # Register CLI commands
    from app.commands import register_cli_commands
    register_cli_commands(app)

    return app


def setup_logging(app):
    """Configure application logging to stderr so CLI stdout stays machine-readable."""
    app.logger.handlers.clear()

    handler = logging.StreamHandler()
    handler.setLevel(logging.INFO if app.config['ENV'] == 'production' else logging.DEBUG)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    handler.setFormatter(formatter)

    app.logger.addHandler(handler)
    app.logger.setLevel(handler.level)

    # Also configure root logger
    logging.basicConfig(
        level=handler.level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[handler]
    )


def register_blueprints(app):
    """Register Flask blueprints."""
    from app.api.equilibrium import equilibrium_bp
    from app.api.sweeps import sweeps_bp

    app.register_blueprint(equilibrium_bp, url_prefix='/api/equilibrium')
    app.register_blueprint(sweeps_bp, url_prefix='/api/sweeps')

    # Health check endpoint (no prefix)
    @app.route('/api/health')
    def health_check():
        """Health check for load balancers."""
        return jsonify({'status': 'healthy'}), 200


def register_error_handlers(app):
    """Register global error handlers."""

    @app.errorhandler(SpectrumTierError)
    def solver_error(error):
        if error.http_status >= 500:
            app.logger.error(f'Solver error: {error.message}')
        else:
            app.logger.warning(f'Request rejected ({error.code}): {error.message}')
        return jsonify(error.to_dict()), error.http_status

    @app.errorhandler(ValidationError)
    def validation_error(error):
        return jsonify({'error': 'Invalid request body', 'code': 'invalid_param', 'fields': error.messages}), 400

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({'error': 'Resource not found'}), 404

    @app.errorhandler(429)
    def rate_limited(error):
        return jsonify({'error': 'Rate limit exceeded', 'limit': str(error.description)}), 429

    @app.errorhandler(500)
    def internal_error(error):
        app.logger.error(f'Internal server error: {error}')
        return jsonify({'error': 'Internal server error'}), 500

    @app.errorhandler(Exception)
    def handle_exception(error):
        if isinstance(error, HTTPException):
            return jsonify({'error': error.description}), error.code
        app.logger.error(f'Unhandled exception: {error}', exc_info=True)
        return jsonify({'error': 'An unexpected error occurred'}), 500
