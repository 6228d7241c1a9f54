"""
Model checkpoints.

Layout (little-endian): magic b"RMDL", version u32, backbone tag u8,
layer-1 rows/cols u64, layer-2 rows/cols u64, dropout f64, then both
weight matrices as row-major f64.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .model import GcnModel, GnnError
from .operators import GCN, SAGE

logger = logging.getLogger(__name__)

MAGIC = b"RMDL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIBQQQQd")
_BACKBONE_TAGS = {GCN: 0, SAGE: 1}


class CheckpointFormatError(GnnError):
    """Custom exception for malformed model checkpoints."""
    pass


def save_model(model: GcnModel, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    w1, w2 = model.layer1_weights, model.layer2_weights
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, _BACKBONE_TAGS[model.backbone],
                              w1.shape[0], w1.shape[1], w2.shape[0], w2.shape[1],
                              model.dropout_rate))
        fh.write(np.ascontiguousarray(w1, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(w2, dtype="<f8").tobytes())
    logger.info(f"Saved {model.backbone} checkpoint to {path}")


def load_model(path: Union[str, Path]) -> GcnModel:
    path = Path(path)
    if not path.exists():
        raise CheckpointFormatError(f"Checkpoint not found: {path}")
    payload = path.read_bytes()
    if len(payload) < _HEADER.size:
        raise CheckpointFormatError(f"{path}: truncated header")

    magic, version, tag, r1, c1, r2, c2, dropout = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported format version {version}")
    backbones = {v: k for k, v in _BACKBONE_TAGS.items()}
    if tag not in backbones:
        raise CheckpointFormatError(f"{path}: unknown backbone tag {tag}")
    expected = _HEADER.size + 8 * (r1 * c1 + r2 * c2)
    if len(payload) != expected:
        raise CheckpointFormatError(f"{path}: expected {expected} bytes, found {len(payload)}")

    w1 = np.frombuffer(payload, dtype="<f8", count=r1 * c1, offset=_HEADER.size)
    w2 = np.frombuffer(payload, dtype="<f8", count=r2 * c2, offset=_HEADER.size + 8 * r1 * c1)
    return GcnModel(backbone=backbones[tag],
                    layer1_weights=w1.astype(np.float64).reshape(r1, c1),
                    layer2_weights=w2.astype(np.float64).reshape(r2, c2),
                    dropout_rate=dropout)
