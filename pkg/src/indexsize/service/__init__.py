"""HTTP wrapper around an engine backend and the estimators."""

from .app import create_app

__all__ = ["create_app"]
