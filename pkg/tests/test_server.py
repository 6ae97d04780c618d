"""Tests for the HTTP API."""

import httpx
import numpy as np
import pytest

from sia import __version__
from sia.config.settings import Settings
from sia.server import create_app
from sia.sources.raw import write_raw_frames


@pytest.fixture
def app(detector, embedded_bank, synth_dataset):
    return create_app(
        detector, embedded_bank, synth_dataset.vocabulary, checkpoint_hash="abc", p_act_threshold=0.0
    )


@pytest.fixture
async def client(app):
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, base_url="http://test") as c:
        yield c


async def test_health(client):
    response = await client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy", "version": __version__}


async def test_vocabulary(client, synth_dataset):
    response = await client.get("/api/vocabulary")
    assert response.status_code == 200
    names = [c["name"] for c in response.json()["classes"]]
    assert names == synth_dataset.vocabulary.names


async def test_detect_memory_clip(client, synth_dataset, toy_config):
    source = synth_dataset.manifest.entries[0].source.model_dump()
    response = await client.post("/api/detect", json={"source": source, "top_k": 3})
    assert response.status_code == 200
    body = response.json()
    assert body["checkpoint_hash"] == "abc"
    assert len(body["detections"]) == toy_config.n_det_tokens
    for det in body["detections"]:
        assert len(det["actions"]) == 3
        scores = [a["score"] for a in det["actions"]]
        assert scores == sorted(scores, reverse=True)
        assert all(0.0 <= s <= det["p_act"] for s in scores)


async def test_detect_threshold_filters(client, synth_dataset):
    source = synth_dataset.manifest.entries[0].source.model_dump()
    response = await client.post("/api/detect", json={"source": source, "threshold": 1.0})
    assert response.status_code == 200
    assert response.json()["detections"] == []


async def test_detect_unknown_source(client):
    response = await client.post("/api/detect", json={"source": {"kind": "memory", "path": "nowhere"}})
    assert response.status_code == 400


async def test_detect_invalid_body(client):
    response = await client.post("/api/detect", json={"source": {"kind": "raw"}})
    assert response.status_code == 422


@pytest.fixture
def data_app(tmp_path, detector, embedded_bank, synth_dataset):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    frames = np.random.default_rng(0).random((4, 32, 32, 3), dtype=np.float32)
    write_raw_frames(data_dir / "clip.raw", frames)
    write_raw_frames(tmp_path / "secret.raw", frames)
    settings = Settings(data_dir=str(data_dir))
    return create_app(detector, embedded_bank, synth_dataset.vocabulary, settings=settings)


@pytest.fixture
async def data_client(data_app):
    transport = httpx.ASGITransport(app=data_app)
    async with httpx.AsyncClient(transport=transport, base_url="http://test") as c:
        yield c


class TestFrameSourceConfinement:
    async def test_file_inside_data_dir(self, data_client):
        response = await data_client.post("/api/detect", json={"source": {"kind": "raw", "path": "clip.raw"}})
        assert response.status_code == 200

    async def test_absolute_path_outside_is_rejected(self, data_client, tmp_path):
        path = str(tmp_path / "secret.raw")
        response = await data_client.post("/api/detect", json={"source": {"kind": "raw", "path": path}})
        assert response.status_code == 400
        assert path not in response.text

    async def test_parent_traversal_is_rejected(self, data_client):
        response = await data_client.post("/api/detect", json={"source": {"kind": "raw", "path": "../secret.raw"}})
        assert response.status_code == 400

    async def test_unreadable_file_does_not_leak_path(self, data_client, tmp_path):
        (tmp_path / "data" / "short.raw").write_bytes(b"xx")
        response = await data_client.post("/api/detect", json={"source": {"kind": "raw", "path": "short.raw"}})
        assert response.status_code == 400
        assert response.json()["detail"] == "could not read frame source"
        assert str(tmp_path) not in response.text

    async def test_file_source_without_data_dir(self, client):
        response = await client.post("/api/detect", json={"source": {"kind": "raw", "path": "clip.raw"}})
        assert response.status_code == 400
