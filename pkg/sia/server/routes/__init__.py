"""Server routes modules."""

from sia.server.routes.detect import router as detect_router

__all__ = ["detect_router"]
