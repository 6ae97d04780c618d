"""FastAPI server for sia detection."""

from sia.server.main import create_app

__all__ = ["create_app"]
