"""Accuracy reports, empirical convergence orders, and the speed benchmark.

Pair accuracy is the relative discrete L2 distance between the reference
forward evolution of the pair's earlier state and its stored later state.
Reports aggregate those errors over a dataset (rejected pairs are counted,
never averaged) and follow the convention that a mean at or above 1.0 is
displayed as "-". The benchmark times inverse-evolution generation against a
stability-bounded explicit forward solve covering the same time gap, with
identical initializations and all I/O excluded from the timed regions.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .grids import Field, Grid, l2_norm
from .operators import PdeSpec
from .schemes import DataPair, Dataset, check_order, make_pair
from .solvers import (
    DivergenceError,
    RefConfig,
    forward_evolve,
    sample_initial_condition,
)

__all__ = [
    "AccuracyReport",
    "BenchReport",
    "accuracy_report",
    "benchmark_generation",
    "convergence_order",
    "pair_relative_error",
    "report_to_text",
    "save_error_histogram",
    "save_error_vs_dt_plot",
]


@dataclass(frozen=True)
class AccuracyReport:
    per_pair_errors: tuple[float, ...]
    mean: float
    median: float
    max: float
    rejected_count: int
    config: dict = field(default_factory=dict)

    @classmethod
    def from_errors(cls, errors: list[float], rejected_count: int,
                    config: dict | None = None) -> "AccuracyReport":
        if any(e < 0 for e in errors):
            raise ValueError("errors must be nonnegative")
        arr = np.asarray(errors, dtype=float)
        return cls(
            per_pair_errors=tuple(float(e) for e in errors),
            mean=float(arr.mean()) if arr.size else 0.0,
            median=float(np.median(arr)) if arr.size else 0.0,
            max=float(arr.max()) if arr.size else 0.0,
            rejected_count=rejected_count,
            config=dict(config or {}),
        )

    @property
    def display_mean(self) -> str:
        """Mean formatted for tables; '-' when the mean fails to reach below 1.0."""
        if not self.per_pair_errors or self.mean >= 1.0:
            return "-"
        return f"{self.mean:.6e}"


@dataclass(frozen=True)
class BenchReport:
    label: str
    pairs: int
    wall_time_s: float
    pairs_per_s: float
    environment: str

    def __post_init__(self) -> None:
        if not (self.wall_time_s > 0.0):
            raise ValueError("wall time must be positive")


def pair_relative_error(pair: DataPair, ref: RefConfig) -> float:
    """Relative L2 error of one accepted pair against the reference solver."""
    if not pair.flags.accepted:
        raise ValueError("pair_relative_error requires an accepted pair")
    try:
        evolved = forward_evolve(pair.spec, pair.input, pair.dt, ref)
    except DivergenceError as err:
        raise DivergenceError(err.time_reached) from err
    denom = l2_norm(pair.output)
    diff = l2_norm(Field._wrap(pair.output.grid, evolved.values - pair.output.values))
    return diff if denom == 0.0 else diff / denom


def accuracy_report(ds: Dataset, ref: RefConfig) -> AccuracyReport:
    """Error statistics over every accepted pair of a homogeneous dataset."""
    if not ds.pairs:
        raise ValueError("empty dataset")
    key = ds.pairs[0].spec.key()
    dt = ds.pairs[0].dt
    order = ds.pairs[0].order
    for p in ds.pairs[1:]:
        if p.spec.key() != key or p.dt != dt or p.order != order:
            raise ValueError("accuracy_report requires a single configuration")
    errors = []
    rejected = int(ds.metadata.get("rejected", 0))
    for p in ds.pairs:
        if p.flags.accepted:
            errors.append(pair_relative_error(p, ref))
        else:
            rejected += 1
    config = {
        "pde": ds.pairs[0].spec.kind.value,
        "disc": ds.pairs[0].spec.disc.value,
        "dt": dt,
        "order": order,
        "resolution": ds.pairs[0].output.grid.n,
        "pairs": len(errors),
        "dt_ref": ref.dt_ref,
        "method": ref.method.value,
    }
    return AccuracyReport.from_errors(errors, rejected, config)


def convergence_order(
    spec: PdeSpec,
    u_star: Field,
    dts: list[float],
    order: int,
    ref: RefConfig,
) -> float:
    """Least-squares slope of log(error) versus log(dt) for one scheme order."""
    check_order(order)
    if len(dts) < 3 or max(dts) / min(dts) < 4.0:
        raise ValueError("need at least 3 dt values spanning a factor of 4")
    errors = []
    for dt in dts:
        pair = make_pair(spec, u_star, dt, order)
        if not pair.flags.accepted:
            raise RuntimeError(
                f"inverse step rejected at dt={dt} ({pair.flags.reason}); "
                "convergence sweep requires accepted pairs"
            )
        errors.append(pair_relative_error(pair, ref))
    slope = np.polyfit(np.log(np.asarray(dts)), np.log(np.asarray(errors)), 1)[0]
    return float(slope)


def _environment_note() -> str:
    return (
        f"python {sys.version_info.major}.{sys.version_info.minor}, "
        f"numpy {np.__version__}, single-threaded FFTs"
    )


def benchmark_generation(
    spec: PdeSpec,
    count: int,
    dt: float,
    order: int,
    ref: RefConfig,
    initializations: list[Field] | None = None,
) -> tuple[BenchReport, BenchReport]:
    """Wall-clock comparison: inverse-evolution pairs vs explicit forward pairs.

    Both arms consume the same initial states (sampled here when not
    supplied); sampling and verification stay outside the timed regions.
    Returns (inverse report, explicit report).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    check_order(order)
    if initializations is None:
        grid = Grid(dim=spec.dim, n=256)
        initializations = [
            sample_initial_condition(spec, grid, np.random.default_rng([1234, i]))
            for i in range(count)
        ]
    if len(initializations) < count:
        raise ValueError("not enough initializations supplied")

    t0 = time.perf_counter()
    for u in initializations[:count]:
        make_pair(spec, u, dt, order)
    t_inverse = time.perf_counter() - t0

    t0 = time.perf_counter()
    for u in initializations[:count]:
        forward_evolve(spec, u, dt, ref)
    t_explicit = time.perf_counter() - t0

    env = _environment_note()
    inv = BenchReport("inverse-evolution", count, t_inverse, count / t_inverse, env)
    fwd = BenchReport("explicit-forward", count, t_explicit, count / t_explicit, env)
    return inv, fwd


def report_to_text(report: AccuracyReport | BenchReport) -> str:
    """Serialize a report as a flat key-value document."""
    lines = []
    if isinstance(report, AccuracyReport):
        for k, v in report.config.items():
            lines.append(f"config.{k} = {v}")
        lines.append(f"mean = {report.display_mean}")
        lines.append(f"median = {report.median:.6e}")
        lines.append(f"max = {report.max:.6e}")
        lines.append(f"rejected_count = {report.rejected_count}")
        lines.append(
            "per_pair_errors = "
            + ",".join(f"{e:.9e}" for e in report.per_pair_errors)
        )
    else:
        lines.append(f"label = {report.label}")
        lines.append(f"pairs = {report.pairs}")
        lines.append(f"wall_time_s = {report.wall_time_s:.6f}")
        lines.append(f"pairs_per_s = {report.pairs_per_s:.3f}")
        lines.append(f"environment = {report.environment}")
    return "\n".join(lines) + "\n"


def save_error_histogram(report: AccuracyReport, path: str) -> None:
    """Write a histogram of per-pair errors as a PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.2))
    if report.per_pair_errors:
        ax.hist(report.per_pair_errors, bins=24, color="#336699")
    ax.set_xlabel("relative L2 error")
    ax.set_ylabel("pairs")
    ax.set_title(
        f"{report.config.get('pde', '?')} dt={report.config.get('dt', '?')} "
        f"order={report.config.get('order', '?')}"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_error_vs_dt_plot(dts: list[float], errors_by_order: dict[int, list[float]],
                          path: str) -> None:
    """Write a log-log error-versus-dt line plot as a PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.6))
    for order, errs in sorted(errors_by_order.items()):
        ax.loglog(dts, errs, marker="o", label=f"order {order}")
    ax.set_xlabel("dt")
    ax.set_ylabel("relative L2 error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
