"""Uvicorn factory for the UI flow test; data dir via QUERYSCOUT_DATA_DIR."""

import os

from queryscout.service import create_app


def build():
    return create_app(os.environ.get("QUERYSCOUT_DATA_DIR", ".fixture"))
