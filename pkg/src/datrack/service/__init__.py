"""HTTP service for the tracking engine."""

from .app import app

__all__ = ["app"]
