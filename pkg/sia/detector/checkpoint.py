"""
Checkpoint container.

Layout: 8-byte magic, little-endian u32 header length, JSON header, then raw
little-endian tensor data. The header carries the format version, the model
config and its hash, a tensor table (name, dtype, shape, offset, nbytes) and
an optional train-state tree whose tensors point into the same table.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import torch

from sia.detector.detector import SiaDetector
from sia.errors import CheckpointMismatchError
from sia.models.config import ModelConfig
from sia.utils import atomic_write_bytes, sha1_short

logger = logging.getLogger(__name__)

MAGIC = b"SIACKPT\x00"
FORMAT_VERSION = 1
_LEN = struct.Struct("<I")

_DTYPES = {
    torch.float32: "float32",
    torch.float64: "float64",
    torch.float16: "float16",
    torch.int64: "int64",
    torch.int32: "int32",
    torch.uint8: "uint8",
    torch.bool: "bool",
}
_TORCH_DTYPES = {v: k for k, v in _DTYPES.items()}


@dataclass
class TrainState:
    """Everything beyond the parameters needed to resume a run exactly."""

    step: int = 0
    optimizer: Optional[Dict[str, Any]] = None
    rng: Optional[Dict[str, Any]] = None
    torch_rng: Optional[torch.Tensor] = None
    running: Dict[str, float] = field(default_factory=dict)


@dataclass
class Checkpoint:
    config: ModelConfig
    state_dict: Dict[str, torch.Tensor]
    train_state: Optional[TrainState] = None
    digest: str = ""


class _TensorTable:
    def __init__(self) -> None:
        self.entries: List[Dict[str, Any]] = []
        self.blobs: List[bytes] = []
        self.offset = 0

    def add(self, name: str, tensor: torch.Tensor) -> Dict[str, str]:
        if tensor.dtype not in _DTYPES:
            raise TypeError(f"cannot store tensor {name} of dtype {tensor.dtype}")
        array = tensor.detach().cpu().contiguous().numpy()
        data = array.astype(array.dtype.newbyteorder("<"), copy=False).tobytes()
        self.entries.append(
            {
                "name": name,
                "dtype": _DTYPES[tensor.dtype],
                "shape": list(array.shape),
                "offset": self.offset,
                "nbytes": len(data),
            }
        )
        self.blobs.append(data)
        self.offset += len(data)
        return {"__tensor__": name}


def _encode_tree(obj: Any, table: _TensorTable, prefix: str) -> Any:
    if torch.is_tensor(obj):
        return table.add(prefix, obj)
    if isinstance(obj, dict):
        return {
            "__items__": [
                [k, _encode_tree(v, table, f"{prefix}/{k}")] for k, v in obj.items()
            ]
        }
    if isinstance(obj, tuple):
        return {"__tuple__": [_encode_tree(v, table, f"{prefix}/{i}") for i, v in enumerate(obj)]}
    if isinstance(obj, list):
        return [_encode_tree(v, table, f"{prefix}/{i}") for i, v in enumerate(obj)]
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return obj


def _decode_tree(obj: Any, tensors: Dict[str, torch.Tensor]) -> Any:
    if isinstance(obj, dict):
        if "__tensor__" in obj:
            return tensors[obj["__tensor__"]]
        if "__items__" in obj:
            return {k: _decode_tree(v, tensors) for k, v in obj["__items__"]}
        if "__tuple__" in obj:
            return tuple(_decode_tree(v, tensors) for v in obj["__tuple__"])
    if isinstance(obj, list):
        return [_decode_tree(v, tensors) for v in obj]
    return obj


def save_checkpoint(
    path: Union[str, Path],
    model: SiaDetector,
    train_state: Optional[TrainState] = None,
) -> str:
    """
    Write a checkpoint atomically.

    Returns:
        Short content hash of the written file
    """
    table = _TensorTable()
    for name, tensor in model.state_dict().items():
        table.add(f"model/{name}", tensor)

    state = None
    if train_state is not None:
        state = {
            "step": train_state.step,
            "optimizer": _encode_tree(train_state.optimizer, table, "optim"),
            "rng": _encode_tree(train_state.rng, table, "rng"),
            "torch_rng": (
                table.add("torch_rng", train_state.torch_rng)
                if train_state.torch_rng is not None
                else None
            ),
            "running": dict(sorted(train_state.running.items())),
        }

    header = {
        "format_version": FORMAT_VERSION,
        "config": model.config.model_dump(mode="json"),
        "config_hash": model.config.config_hash(),
        "tensors": table.entries,
        "train_state": state,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = MAGIC + _LEN.pack(len(header_bytes)) + header_bytes + b"".join(table.blobs)
    atomic_write_bytes(path, payload)
    digest = sha1_short(payload, 16)
    logger.debug(f"Saved checkpoint {path} ({len(table.entries)} tensors, {digest})")
    return digest


def read_header(data: bytes) -> Tuple[Dict[str, Any], int]:
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointMismatchError("not a sia checkpoint (bad magic)")
    start = len(MAGIC) + _LEN.size
    (length,) = _LEN.unpack(data[len(MAGIC) : start])
    header = json.loads(data[start : start + length].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointMismatchError(
            f"unsupported checkpoint format version {header.get('format_version')!r}"
        )
    return header, start + length


def load_checkpoint(
    path: Union[str, Path],
    expected: Optional[ModelConfig] = None,
) -> Checkpoint:
    """
    Read a checkpoint.

    Args:
        path: Checkpoint file
        expected: When given, the stored config hash must equal its hash

    Raises:
        CheckpointMismatchError: Bad magic, unknown format or config mismatch
    """
    data = Path(path).read_bytes()
    header, data_start = read_header(data)
    config = ModelConfig.model_validate(header["config"])
    if config.config_hash() != header["config_hash"]:
        raise CheckpointMismatchError(f"{path}: stored config does not match its hash")
    if expected is not None and expected.config_hash() != header["config_hash"]:
        raise CheckpointMismatchError(
            f"{path} was written for config {header['config_hash'][:12]}, "
            f"expected {expected.config_hash()[:12]}"
        )

    tensors: Dict[str, torch.Tensor] = {}
    for entry in header["tensors"]:
        dtype = np.dtype(entry["dtype"]).newbyteorder("<")
        start = data_start + entry["offset"]
        array = np.frombuffer(data, dtype=dtype, count=int(np.prod(entry["shape"], dtype=np.int64)), offset=start)
        array = array.astype(array.dtype.newbyteorder("="), copy=True).reshape(entry["shape"])
        tensors[entry["name"]] = torch.from_numpy(array)

    state_dict = {k[len("model/") :]: v for k, v in tensors.items() if k.startswith("model/")}
    train_state = None
    raw = header.get("train_state")
    if raw is not None:
        train_state = TrainState(
            step=int(raw["step"]),
            optimizer=_decode_tree(raw["optimizer"], tensors),
            rng=_decode_tree(raw["rng"], tensors),
            torch_rng=_decode_tree(raw["torch_rng"], tensors),
            running=dict(raw["running"]),
        )
    return Checkpoint(
        config=config,
        state_dict=state_dict,
        train_state=train_state,
        digest=sha1_short(data, 16),
    )


def load_detector(
    path: Union[str, Path],
    expected: Optional[ModelConfig] = None,
) -> Tuple[SiaDetector, Checkpoint]:
    """Rebuild a detector from a checkpoint; returns it with the checkpoint record."""
    ckpt = load_checkpoint(path, expected)
    model = SiaDetector(ckpt.config)
    model.load_state_dict(ckpt.state_dict)
    model.eval()
    return model, ckpt
