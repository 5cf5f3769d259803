"""
Portable on-disk format for Galerkin operators.

Layout (little-endian):
    4s   magic b"GALK"
    u32  format version
    u32  d
    u32  K
    f64  s
    32s  sha256 of (model, measure)
    then (2K+1)^d x (2K+1)^d complex128 entries, column-major, unweighted
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp

from pipeline.core.exceptions import ConfigurationError
from pipeline.spectral.models import FourierOperator, ModeIndex

MAGIC = b"GALK"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIId32s")


def export_operator(op: FourierOperator, path: Union[str, Path]) -> Path:
    """Write ``op`` to ``path`` and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, op.index.d, op.index.K, float(op.s), op.model_hash)
    entries = np.asarray(op.matrix.toarray(), dtype="<c16")
    with path.open("wb") as f:
        f.write(header)
        f.write(entries.tobytes(order="F"))
    return path


def read_operator(path: Union[str, Path]) -> FourierOperator:
    """
    Load an operator written by ``export_operator``.

    Truncation losses are not part of the format and come back as zeros.

    Raises:
        ConfigurationError: wrong magic, unknown version or truncated payload
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigurationError(f"{path}: file too short for an operator header")
    magic, version, d, K, s, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ConfigurationError(f"{path}: not an operator file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ConfigurationError(f"{path}: unsupported format version {version}")

    index = ModeIndex(d=d, K=K)
    n = index.size
    payload = raw[_HEADER.size:]
    if len(payload) != n * n * 16:
        raise ConfigurationError(f"{path}: expected {n * n * 16} payload bytes, found {len(payload)}")
    dense = np.frombuffer(payload, dtype="<c16").reshape((n, n), order="F")
    return FourierOperator(
        index=index,
        matrix=sp.csc_matrix(dense.astype(complex)),
        s=s,
        truncation_loss=np.zeros(n),
        model_hash=digest,
    )
