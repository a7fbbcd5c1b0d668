"""Explicit inverse-evolution steps and reversed training pairs.

A single explicit Taylor step of the reversed dynamics ``u_t = -F(u)``
produces, after swapping the two states, a pair that satisfies the matching
implicit scheme of the forward equation. For order 1 that is the backward
Euler identity ``(V_next - V)/dt = F(V_next)``, exact to rounding; the
higher orders add the ``U_tt`` and ``U_ttt`` Taylor terms.

All temporal derivatives are evaluated at the starting (later-time) state;
that choice is what makes the reversed pair satisfy the implicit forward
formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grids import Field, max_norm
from .operators import PdeSpec, apply_F, apply_F2, apply_JVP

__all__ = [
    "DataPair",
    "Dataset",
    "InstabilityError",
    "PairFlags",
    "Provenance",
    "check_order",
    "inverse_step",
    "make_pair",
    "time_derivatives",
    "BLOWUP_FACTOR",
]

SCHEME_ORDERS = (1, 2, 3)

# A pair is rejected when the inverse step grows the sup norm beyond this
# factor (relative to max(1, ||start||_inf)) or produces non-finite values.
BLOWUP_FACTOR = 20.0


class InstabilityError(RuntimeError):
    """Inverse step produced non-finite values.

    Carries the offending sup norm and, when available, the diverged field so
    callers can flag instead of throwing.
    """

    def __init__(self, norm: float, result: Field | None = None):
        super().__init__(f"inverse step diverged, sup norm {norm}")
        self.norm = norm
        self.result = result


def check_order(order: int) -> int:
    if order not in SCHEME_ORDERS:
        raise ValueError(f"scheme order must be one of {SCHEME_ORDERS}, got {order}")
    return order


@dataclass(frozen=True)
class PairFlags:
    accepted: bool
    reason: str | None = None

    @classmethod
    def ok(cls) -> "PairFlags":
        return cls(True)

    @classmethod
    def rejected(cls, reason: str) -> "PairFlags":
        return cls(False, reason)


@dataclass(frozen=True)
class Provenance:
    """Where an initialization came from: raw solver output or the mixer."""

    kind: str = "original"  # "original" | "augmented"
    seed_offset: int | None = None
    lambdas: tuple[float, ...] | None = None
    constant: float | None = None
    time_index: int | None = None
    preprocess_a: float | None = None
    preprocess_c: float | None = None

    def to_text(self) -> str:
        parts = [self.kind]
        for name in ("seed_offset", "lambdas", "constant", "time_index",
                     "preprocess_a", "preprocess_c"):
            val = getattr(self, name)
            if val is None:
                continue
            if isinstance(val, tuple):
                parts.append(f"{name}={':'.join(repr(x) for x in val)}")
            else:
                parts.append(f"{name}={val!r}")
        return " ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "Provenance":
        tokens = text.split()
        kwargs: dict = {"kind": tokens[0]}
        for tok in tokens[1:]:
            name, raw = tok.split("=", 1)
            if name == "lambdas":
                kwargs[name] = tuple(float(x) for x in raw.split(":"))
            elif name in ("seed_offset", "time_index"):
                kwargs[name] = int(raw)
            else:
                kwargs[name] = float(raw)
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class DataPair:
    """One (earlier state, later state, dt) training pair.

    ``input`` is the inverse-evolution output W (earlier time) and ``output``
    the inverse-evolution start V (later time), so forward evolution maps
    input to output.
    """

    input: Field
    output: Field
    dt: float
    spec: PdeSpec
    order: int
    flags: PairFlags = field(default_factory=PairFlags.ok)
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self) -> None:
        if self.input.grid != self.output.grid:
            raise ValueError("pair states must share one grid")
        if self.flags.accepted and not (self.input.is_finite and self.output.is_finite):
            raise ValueError("accepted pairs must contain only finite values")

    def with_flags(self, flags: PairFlags) -> "DataPair":
        return replace(self, flags=flags)


@dataclass(eq=False)
class Dataset:
    """Ordered pair collection plus generation metadata.

    Trajectory collections are stored as consecutive-save pairs; when the
    metadata carries ``series_length`` the original time series can be
    reassembled losslessly.
    """

    pairs: list[DataPair]
    metadata: dict

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def spec(self) -> PdeSpec:
        return self.pairs[0].spec


def time_derivatives(spec: PdeSpec, state: Field, order: int) -> list[Field]:
    """Temporal derivatives [U_t], [U_t, U_tt] or [U_t, U_tt, U_ttt] at state.

    U_t = F(U); U_tt = F'(U) U_t; U_ttt = F'(U) U_tt + F''(U)(U_t, U_t).
    """
    check_order(order)
    u_t = apply_F(spec, state)
    out = [u_t]
    if order >= 2:
        u_tt = apply_JVP(spec, state, u_t)
        out.append(u_tt)
    if order >= 3:
        u_ttt_values = (
            apply_JVP(spec, state, out[1]).values
            + apply_F2(spec, state, u_t).values
        )
        out.append(Field._wrap(state.grid, u_ttt_values))
    return out


_TAYLOR_SIGNS = (-1.0, 0.5, -1.0 / 6.0)


def inverse_step(spec: PdeSpec, start: Field, dt: float, order: int) -> Field:
    """One explicit Taylor step of the reversed dynamics, from start.

    W = start - dt*U_t (+ dt^2/2 * U_tt for order 2) (- dt^3/6 * U_ttt for
    order 3), every derivative evaluated at start. Raises
    :class:`InstabilityError` when the result is non-finite.
    """
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    check_order(order)
    # divergence is expected on unstable configurations and handled by
    # flagging, so arithmetic overflow is not an error here
    with np.errstate(over="ignore", invalid="ignore"):
        derivs = time_derivatives(spec, start, order)
        out = start.values.copy()
        for p, d in enumerate(derivs, start=1):
            out += (_TAYLOR_SIGNS[p - 1] * dt**p) * d.values
    result = Field._wrap(start.grid, out)
    if not result.is_finite:
        raise InstabilityError(norm=float("inf"), result=result)
    return result


def make_pair(
    spec: PdeSpec,
    start: Field,
    dt: float,
    order: int,
    blowup_factor: float = BLOWUP_FACTOR,
    provenance: Provenance | None = None,
) -> DataPair:
    """Build the reversed training pair from one inverse step.

    Instability is flagged on the pair rather than raised: non-finite results
    or sup-norm growth beyond ``blowup_factor * max(1, ||start||_inf)`` mark
    the pair rejected.
    """
    prov = provenance if provenance is not None else Provenance()
    try:
        w = inverse_step(spec, start, dt, order)
    except InstabilityError as err:
        return DataPair(
            input=err.result if err.result is not None else start,
            output=start,
            dt=dt,
            spec=spec,
            order=order,
            flags=PairFlags.rejected("non-finite"),
            provenance=prov,
        )
    limit = blowup_factor * max(1.0, max_norm(start))
    flags = PairFlags.ok() if max_norm(w) <= limit else PairFlags.rejected("blowup")
    return DataPair(
        input=w, output=start, dt=dt, spec=spec, order=order,
        flags=flags, provenance=prov,
    )
