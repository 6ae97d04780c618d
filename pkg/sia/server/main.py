"""FastAPI application serving a trained detector."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from sia import __version__
from sia.config.settings import Settings, get_settings
from sia.detector.detector import SiaDetector
from sia.models.vocabulary import ActionVocabulary, DescriptorBank
from sia.server.routes.detect import router as detect_router
from sia.services.inference import ensure_embedded

logger = logging.getLogger(__name__)


class HealthResponse(BaseModel):
    """Health check response."""
    status: str = "healthy"
    version: str = __version__


def create_app(
    detector: SiaDetector,
    bank: DescriptorBank,
    vocab: ActionVocabulary,
    *,
    checkpoint_hash: Optional[str] = None,
    p_act_threshold: float = 0.5,
    settings: Optional[Settings] = None,
) -> FastAPI:
    """
    Build the API around one loaded detector.

    Descriptor embeddings are computed once here; forwards run on a thread
    pool sized by ``server.inference_threads``.
    """
    settings = settings or get_settings()
    detector.eval()
    ensure_embedded(detector, bank)
    executor = ThreadPoolExecutor(max_workers=settings.server.inference_threads)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        executor.shutdown(wait=False)

    app = FastAPI(
        title="sia detection API",
        description="Open-vocabulary action detection on keyframes",
        version=__version__,
        lifespan=lifespan,
    )
    app.add_middleware(
        CORSMiddleware,
        allow_origins=settings.server.cors_origins,
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.state.detector = detector
    app.state.bank = bank
    app.state.vocabulary = vocab
    app.state.checkpoint_hash = checkpoint_hash
    app.state.p_act_threshold = p_act_threshold
    app.state.executor = executor
    app.state.data_dir = settings.data_dir

    @app.get("/health", response_model=HealthResponse)
    async def health_check() -> HealthResponse:
        """Health check endpoint."""
        return HealthResponse()

    app.include_router(detect_router)
    logger.info(f"Serving {len(vocab)} classes ({detector.config.mode.value} detector)")
    return app
