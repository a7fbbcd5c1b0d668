"""Standalone reader for IEDA dataset files.

The byte layout is normative and this reader implements it from the
documented offsets alone (little-endian, no padding):

====== ======= =====================================
offset size    field
====== ======= =====================================
0      4       magic ``IEDA``
4      2       format version (u16)
6      1       dim (u8)
7      4       n, points per axis (u32)
11     8       pair count (u64)
19     8       dt (f64)
27     1       pde kind (u8)
28     1       scheme order (u8)
29     1       disc (u8)
====== ======= =====================================

The payload holds, per pair, the input then the output state as contiguous
f64 arrays (2D row-major as (y, x)). The ``.meta`` sidecar next to the file
is a flat UTF-8 key-value document carrying a SHA-256 of the payload.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["DatasetFileError", "LoadedDataset", "load_dataset", "load_many"]

_HEADER = struct.Struct("<4sHBIQdBBB")
_MAGIC = b"IEDA"
_SUPPORTED_VERSION = 1


class DatasetFileError(ValueError):
    """The file does not follow the documented layout or fails its checksum."""


@dataclass(frozen=True)
class LoadedDataset:
    """Pairs as arrays: inputs and outputs of shape (count, n, ...)."""

    inputs: np.ndarray
    outputs: np.ndarray
    dim: int
    n: int
    dt: float
    pde_kind: int
    order: int
    metadata: dict

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _read_sidecar(path: Path) -> dict:
    side = path.with_suffix(".meta")
    out: dict = {}
    if not side.exists():
        return out
    for line in side.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip().strip("'\"")
    return out


def load_dataset(path: str | Path, verify_checksum: bool = True) -> LoadedDataset:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DatasetFileError(f"{path}: shorter than the {_HEADER.size}-byte header")
    magic, version, dim, n, count, dt, kind, order, _disc = _HEADER.unpack(
        raw[: _HEADER.size]
    )
    if magic != _MAGIC:
        raise DatasetFileError(f"{path}: bad magic {magic!r}")
    if version > _SUPPORTED_VERSION:
        raise DatasetFileError(f"{path}: unsupported format version {version}")
    state_len = n**dim
    payload = raw[_HEADER.size :]
    expected = count * 2 * state_len * 8
    if len(payload) != expected:
        raise DatasetFileError(
            f"{path}: payload {len(payload)} bytes, expected {expected}"
        )
    metadata = _read_sidecar(path)
    if verify_checksum and "checksum_sha256" in metadata:
        if hashlib.sha256(payload).hexdigest() != metadata["checksum_sha256"]:
            raise DatasetFileError(f"{path}: payload checksum mismatch")

    shape = (n,) * dim
    data = np.frombuffer(payload, dtype="<f8").reshape(count, 2, *shape)
    return LoadedDataset(
        inputs=np.ascontiguousarray(data[:, 0]),
        outputs=np.ascontiguousarray(data[:, 1]),
        dim=dim,
        n=n,
        dt=dt,
        pde_kind=kind,
        order=order,
        metadata=metadata,
    )


def load_many(paths: list[str | Path]) -> LoadedDataset:
    """Concatenate several compatible dataset files into one."""
    loaded = [load_dataset(p) for p in paths]
    first = loaded[0]
    for other in loaded[1:]:
        if (other.dim, other.n) != (first.dim, first.n) or other.dt != first.dt:
            raise DatasetFileError("datasets disagree on grid or dt")
    return LoadedDataset(
        inputs=np.concatenate([d.inputs for d in loaded]),
        outputs=np.concatenate([d.outputs for d in loaded]),
        dim=first.dim,
        n=first.n,
        dt=first.dt,
        pde_kind=first.pde_kind,
        order=first.order,
        metadata={"sources": len(loaded), **first.metadata},
    )
