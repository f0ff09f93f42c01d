"""HTTP service wrapping the detector."""

from .app import create_app

__all__ = ["create_app"]
