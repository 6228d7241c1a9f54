"""
Binary persistence for entropy tables.

Layout (little-endian): magic b"RARE", format version u32, N u64, lambda f64,
then the feature, structural and combined matrices as row-major f64.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from .embedding import EntropyError
from .relative_entropy import EntropyTable

logger = logging.getLogger(__name__)

MAGIC = b"RARE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQd")

PathLike = Union[str, Path]


class EntropyTableFormatError(EntropyError):
    """Custom exception for malformed entropy table files."""
    pass


def save_table(table: EntropyTable, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = table.num_nodes
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, n, table.lam))
        for matrix in (table.feature, table.structural, table.combined):
            fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    logger.info(f"Saved entropy table N={n} to {path}")


def load_table(path: PathLike) -> EntropyTable:
    path = Path(path)
    if not path.exists():
        raise EntropyTableFormatError(f"Entropy table not found: {path}")
    payload = path.read_bytes()
    if len(payload) < _HEADER.size:
        raise EntropyTableFormatError(f"{path}: truncated header")

    magic, version, n, lam = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise EntropyTableFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise EntropyTableFormatError(f"{path}: unsupported format version {version}")
    expected = _HEADER.size + 3 * n * n * 8
    if len(payload) != expected:
        raise EntropyTableFormatError(f"{path}: expected {expected} bytes, found {len(payload)}")

    matrices = []
    for i in range(3):
        offset = _HEADER.size + i * n * n * 8
        block = np.frombuffer(payload, dtype="<f8", count=n * n, offset=offset)
        matrices.append(block.astype(np.float64).reshape(n, n))
    return EntropyTable(feature=matrices[0], structural=matrices[1], combined=matrices[2], lam=lam)


def export_matrix_csv(table: EntropyTable, which: str, path: PathLike) -> None:
    """Dump one matrix ("feature", "structural" or "combined") as headerless CSV."""
    if which not in ("feature", "structural", "combined"):
        raise EntropyError(f"unknown matrix '{which}'")
    pd.DataFrame(getattr(table, which)).to_csv(path, header=False, index=False, float_format="%.17g")
