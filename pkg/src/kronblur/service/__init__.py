"""HTTP service wrapping the deblurring pipeline."""

from .app import create_app

__all__ = ["create_app"]
