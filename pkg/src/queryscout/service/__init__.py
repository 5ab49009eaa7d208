"""HTTP service and persistence."""

from .app import create_app
from .store import DataStore

__all__ = ["create_app", "DataStore"]
