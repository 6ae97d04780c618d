"""Detection API routes."""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path
from typing import List, Optional

import torch
from fastapi import APIRouter, HTTPException, Request
from pydantic import BaseModel, Field

from sia.data.sampling import sample_clip_frames
from sia.detector.scoring import score_actions
from sia.errors import SiaError
from sia.models.annotations import FrameLocator
from sia.models.boxes import BoxXYXY
from sia.models.vocabulary import ActionVocabulary

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["detect"])


# =============================================================================
# Models
# =============================================================================

class DetectRequest(BaseModel):
    """Request body for keyframe detection."""
    source: FrameLocator
    threshold: Optional[float] = Field(None, ge=0.0, le=1.0)
    top_k: int = Field(5, ge=1)
    stride: int = Field(4, ge=1)


class ClassScore(BaseModel):
    class_id: int
    name: str
    score: float


class DetectedActor(BaseModel):
    box: BoxXYXY
    p_act: float
    actions: List[ClassScore]


class DetectResponse(BaseModel):
    detections: List[DetectedActor]
    checkpoint_hash: Optional[str] = None


# =============================================================================
# Helpers
# =============================================================================

def _confine(source: FrameLocator, data_dir: Optional[str]) -> FrameLocator:
    """
    Pin a file-backed locator inside the data directory.

    In-process (memory) sources pass through. File paths resolve against
    ``data_dir``; anything that lands outside it is rejected.
    """
    if source.kind == "memory":
        return source
    if data_dir is None:
        raise HTTPException(status_code=400, detail="file frame sources need SIA_DATA_DIR")
    root = Path(data_dir).resolve()
    target = (root / source.path).resolve()
    if not target.is_relative_to(root):
        logger.warning(f"Rejected frame source outside {root}: {source.path}")
        raise HTTPException(status_code=400, detail="frame source outside the data directory")
    return source.model_copy(update={"path": str(target)})


# =============================================================================
# Endpoints
# =============================================================================

@router.get("/vocabulary", response_model=ActionVocabulary)
async def get_vocabulary(request: Request) -> ActionVocabulary:
    """Active action vocabulary."""
    return request.app.state.vocabulary


@router.post("/detect", response_model=DetectResponse)
async def detect(request: Request, body: DetectRequest) -> DetectResponse:
    """Detect actors on a clip's keyframe and rank their actions."""
    state = request.app.state
    threshold = body.threshold if body.threshold is not None else state.p_act_threshold
    source = _confine(body.source, state.data_dir)

    def _run() -> DetectResponse:
        detector = state.detector
        clip = sample_clip_frames(source, detector.config.frames, body.stride)
        frames = torch.from_numpy(clip.frames).to(detector.logit_scale.dtype).unsqueeze(0)
        with torch.no_grad():
            output = detector(frames).clip(0)
        names = state.vocabulary.names
        scored = score_actions(output, state.bank, threshold, detector.scale(), class_names=names)
        detections = [
            DetectedActor(
                box=det.box,
                p_act=det.p_act,
                actions=[
                    ClassScore(class_id=c, name=names[c], score=s)
                    for c, s in det.top_classes(body.top_k)
                ],
            )
            for det in scored
        ]
        return DetectResponse(detections=detections, checkpoint_hash=state.checkpoint_hash)

    loop = asyncio.get_running_loop()
    try:
        return await loop.run_in_executor(state.executor, _run)
    except (OSError, ValueError, SiaError) as e:
        logger.warning(f"Could not read frame source {source.kind}:{source.path}: {e}")
        raise HTTPException(status_code=400, detail="could not read frame source")
    except Exception:
        logger.exception("Error running detection")
        raise HTTPException(status_code=500, detail="detection failed")
