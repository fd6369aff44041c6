"""HTTP service wrapping the verification operations."""

from .app import app, create_app

__all__ = ["app", "create_app"]
