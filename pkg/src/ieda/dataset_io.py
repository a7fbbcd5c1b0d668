"""Binary dataset format and the text sidecar.

Layout (all little-endian, no padding):

====== ======= =====================================
offset size    field
====== ======= =====================================
0      4       magic ``IEDA``
4      2       format version (u16, currently 1)
6      1       dim (u8)
7      4       n, points per axis (u32)
11     8       pair count (u64)
19     8       dt (f64)
27     1       pde kind (u8): 0 heat, 1 burgers, 2 allen-cahn, 3 navier-stokes
28     1       scheme order (u8): 1..3, or 0 for solver-generated pairs
29     1       disc (u8): 0 finite-difference, 1 pseudo-spectral
====== ======= =====================================

The payload follows immediately: for each pair, the input then the output
state as contiguous f64 arrays, 2D data row-major as (y, x). A sidecar with
the same basename and a ``.meta`` suffix holds the full generation config,
seeds, per-pair provenance, and a SHA-256 checksum of the payload as a flat
UTF-8 key-value document. Readers in any language need nothing beyond this
description.
"""

from __future__ import annotations

import ast
import hashlib
import struct
from pathlib import Path

import numpy as np

from .grids import Disc, Field, Grid
from .operators import PdeKind, PdeSpec
from .schemes import DataPair, Dataset, PairFlags, Provenance

__all__ = [
    "CorruptionError",
    "FormatError",
    "VersionError",
    "FORMAT_VERSION",
    "MAGIC",
    "parse_kv",
    "read_dataset",
    "render_kv",
    "write_dataset",
]

MAGIC = b"IEDA"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBIQdBBB")

_KIND_CODES = {
    PdeKind.HEAT_1D: 0,
    PdeKind.BURGERS_1D: 1,
    PdeKind.ALLEN_CAHN_2D: 2,
    PdeKind.NAVIER_STOKES_2D: 3,
}
_KIND_FROM_CODE = {v: k for k, v in _KIND_CODES.items()}
_DISC_CODES = {Disc.FINITE_DIFFERENCE: 0, Disc.PSEUDO_SPECTRAL: 1}
_DISC_FROM_CODE = {v: k for k, v in _DISC_CODES.items()}


class FormatError(ValueError):
    """The file does not follow the dataset layout."""


class CorruptionError(ValueError):
    """Payload length or checksum mismatch."""


class VersionError(ValueError):
    """The file declares a format version above the supported one."""


def render_kv(items: dict) -> str:
    """Flat key-value document; values round-trip through literal parsing."""
    lines = [f"{k} = {v}" for k, v in items.items()]
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> dict:
    """Parse a key-value document; values become Python literals when possible."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise FormatError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        raw = raw.strip()
        try:
            out[key.strip()] = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            out[key.strip()] = raw
    return out


def _sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".meta")


def _spec_from_metadata(kind: PdeKind, disc: Disc, side: dict, meta: dict) -> PdeSpec:
    nu = side.get("spec_nu", meta.get("nu"))
    epsilon = side.get("spec_epsilon", meta.get("epsilon"))
    return PdeSpec(
        kind=kind,
        nu=float(nu) if nu is not None else None,
        epsilon=float(epsilon) if epsilon is not None else None,
        disc=disc,
    )


def write_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a homogeneous dataset of accepted pairs plus its sidecar."""
    if not ds.pairs:
        raise ValueError("refusing to write an empty dataset")
    first = ds.pairs[0]
    key = first.spec.key()
    for p in ds.pairs:
        if not p.flags.accepted:
            raise ValueError("write_dataset requires all pairs accepted")
        if p.spec.key() != key or p.dt != first.dt or p.order != first.order:
            raise ValueError("write_dataset requires a homogeneous dataset")

    grid = first.output.grid
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        grid.dim,
        grid.n,
        len(ds.pairs),
        first.dt,
        _KIND_CODES[first.spec.kind],
        first.order,
        _DISC_CODES[first.spec.disc],
    )
    hasher = hashlib.sha256()
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        for p in ds.pairs:
            for f in (p.input, p.output):
                chunk = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
                hasher.update(chunk)
                fh.write(chunk)

    sidecar: dict = {}
    sidecar["checksum_sha256"] = f"'{hasher.hexdigest()}'"
    sidecar["grid_length"] = grid.length
    if first.spec.nu is not None:
        sidecar["spec_nu"] = first.spec.nu
    if first.spec.epsilon is not None:
        sidecar["spec_epsilon"] = first.spec.epsilon
    for k, v in ds.metadata.items():
        sidecar[f"meta.{k}"] = repr(v) if isinstance(v, str) else v
    for i, p in enumerate(ds.pairs):
        sidecar[f"pair.{i}.provenance"] = f"'{p.provenance.to_text()}'"
    _sidecar_path(path).write_text(render_kv(sidecar), encoding="utf-8")


def read_dataset(path: str | Path) -> Dataset:
    """Read a dataset back; value-identical to what was written."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the header")
    magic, version, dim, n, count, dt, kind_code, order, disc_code = _HEADER.unpack(
        raw[: _HEADER.size]
    )
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version > FORMAT_VERSION:
        raise VersionError(f"{path}: format version {version} above supported "
                           f"{FORMAT_VERSION}")
    if kind_code not in _KIND_FROM_CODE:
        raise FormatError(f"{path}: unknown pde kind code {kind_code}")
    if disc_code not in _DISC_FROM_CODE:
        raise FormatError(f"{path}: unknown disc code {disc_code}")

    state_len = n**dim
    expected = count * 2 * state_len * 8
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )

    side_path = _sidecar_path(path)
    if not side_path.exists():
        raise FormatError(f"{path}: missing sidecar {side_path.name}")
    side = parse_kv(side_path.read_text(encoding="utf-8"))
    stored = side.get("checksum_sha256")
    actual = hashlib.sha256(payload).hexdigest()
    if stored != actual:
        raise CorruptionError(f"{path}: payload checksum mismatch")

    meta = {k[len("meta."):]: v for k, v in side.items() if k.startswith("meta.")}
    grid = Grid(dim=dim, n=n, length=float(side.get("grid_length", 1.0)))
    spec = _spec_from_metadata(
        _KIND_FROM_CODE[kind_code], _DISC_FROM_CODE[disc_code], side, meta
    )

    shape = grid.shape
    pairs: list[DataPair] = []
    data = np.frombuffer(payload, dtype="<f8")
    for i in range(count):
        base = i * 2 * state_len
        w = data[base : base + state_len].reshape(shape).copy()
        v = data[base + state_len : base + 2 * state_len].reshape(shape).copy()
        prov_text = side.get(f"pair.{i}.provenance", "original")
        pairs.append(
            DataPair(
                input=Field._wrap(grid, w),
                output=Field._wrap(grid, v),
                dt=dt,
                spec=spec,
                order=order,
                flags=PairFlags.ok(),
                provenance=Provenance.from_text(prov_text),
            )
        )
    return Dataset(pairs=pairs, metadata=meta)
