"""Command-line surface tying the pipeline together.

Subcommands: ``generate`` (original trajectories from the reference solvers),
``augment`` (inverse-evolution dataset from a source dataset, or from a
freshly generated default source), ``verify`` (accuracy report for a
dataset), ``bench`` (generation-speed comparison), ``info`` (header and
sidecar dump). Exit status: 0 success, 1 validation error, 2
generation/verification failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .augment import (
    AugmentConfig,
    GenerationError,
    MixSpec,
    PreprocessSpec,
    generate_augmented,
)
from .dataset_io import (
    CorruptionError,
    FormatError,
    VersionError,
    parse_kv,
    read_dataset,
    render_kv,
    write_dataset,
)
from .grids import Disc, Grid
from .operators import PdeKind, PdeSpec
from .schemes import DataPair, Dataset, Provenance
from .solvers import (
    ConfigurationError,
    DivergenceError,
    Method,
    RefConfig,
    sample_initial_condition,
    solve_trajectory,
    stability_bound,
)
from .verify import (
    accuracy_report,
    benchmark_generation,
    report_to_text,
    save_error_histogram,
)

__all__ = ["RunConfig", "main"]

_PDE_CHOICES = tuple(k.value for k in PdeKind)
_DISC_CHOICES = tuple(d.value for d in Disc)


@dataclass
class RunConfig:
    """Flat run configuration mirroring the pipeline dataclass field names.

    Parsing rejects unknown keys; ``parse(to_text(cfg))`` reproduces the
    config exactly.
    """

    pde: str = "heat"
    nu: float | None = None
    epsilon: float | None = None
    disc: str | None = None
    resolution: int = 256
    length: float = 1.0
    dt: float = 0.01
    order: int = 1
    seed: int = 0
    count: int = 100
    series_length: int = 5
    mix_k: int = 2
    mix_lambda_mode: str = "convex"
    mix_c_min: float = -0.1
    mix_c_max: float = 0.1
    preprocess_enabled: bool | None = None
    preprocess_a: float = 1.0
    preprocess_c_min: float = -0.1
    preprocess_c_max: float = 0.1
    dt_ref: float | None = None
    method: str | None = None
    cfl_safety: float = 0.9

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        data = parse_kv(text)
        known = set(cls.field_names())
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_text(self) -> str:
        items = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            items[f.name] = repr(v) if isinstance(v, str) else v
        return render_kv(items)

    def pde_spec(self) -> PdeSpec:
        kind = PdeKind(self.pde)
        disc = Disc(self.disc) if self.disc else (
            Disc.PSEUDO_SPECTRAL if kind is PdeKind.NAVIER_STOKES_2D
            else Disc.FINITE_DIFFERENCE
        )
        return PdeSpec(kind=kind, nu=self.nu, epsilon=self.epsilon, disc=disc)

    def grid(self) -> Grid:
        spec = self.pde_spec()
        return Grid(dim=spec.dim, n=self.resolution, length=self.length)

    def ref_config(self, spec: PdeSpec, grid: Grid) -> RefConfig:
        base = RefConfig.defaults_for(spec, grid)
        dt_ref = self.dt_ref if self.dt_ref is not None else base.dt_ref
        method = Method(self.method) if self.method else base.method
        return RefConfig(dt_ref=dt_ref, method=method, cfl_safety=self.cfl_safety)

    def augment_config(self, spec: PdeSpec) -> AugmentConfig:
        pre_default = PreprocessSpec.default_for(spec)
        enabled = (
            pre_default.enabled
            if self.preprocess_enabled is None
            else self.preprocess_enabled
        )
        return AugmentConfig(
            spec=spec,
            dt=self.dt,
            order=self.order,
            count=self.count,
            mix=MixSpec(
                k=self.mix_k,
                lambda_mode=self.mix_lambda_mode,
                c_range=(self.mix_c_min, self.mix_c_max),
                seed=self.seed,
            ),
            preprocess=PreprocessSpec(
                enabled=enabled,
                a=self.preprocess_a,
                c_range=(self.preprocess_c_min, self.preprocess_c_max),
            ),
        )


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ieda", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_shared(p: _Parser) -> None:
        p.add_argument("--pde", choices=_PDE_CHOICES)
        p.add_argument("--nu", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--resolution", type=int)
        p.add_argument("--length", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--order", type=int, choices=(1, 2, 3))
        p.add_argument("--disc", choices=_DISC_CHOICES)
        p.add_argument("--seed", type=int)
        p.add_argument("--count", type=int)
        p.add_argument("--dt-ref", dest="dt_ref", type=float)
        p.add_argument("--cfl-safety", dest="cfl_safety", type=float)
        p.add_argument("--preprocess", metavar="A,CMIN,CMAX",
                       help="enable preprocessing with rescale a and shift range")
        p.add_argument("--config", type=Path, help="key-value file overridden by flags")
        p.add_argument("--out", type=Path)

    p_gen = sub.add_parser("generate", help="solve original trajectories")
    add_shared(p_gen)
    p_gen.add_argument("--series-length", dest="series_length", type=int)

    p_aug = sub.add_parser("augment", help="inverse-evolution dataset")
    add_shared(p_aug)
    p_aug.add_argument("--source", type=Path, help="source dataset (generated when omitted)")

    p_ver = sub.add_parser("verify", help="accuracy report for a dataset")
    p_ver.add_argument("dataset", type=Path)
    p_ver.add_argument("--dt-ref", dest="dt_ref", type=float)
    p_ver.add_argument("--cfl-safety", dest="cfl_safety", type=float)
    p_ver.add_argument("--plot", type=Path, help="write an error histogram PNG")

    p_bench = sub.add_parser("bench", help="inverse vs explicit generation timing")
    add_shared(p_bench)

    p_info = sub.add_parser("info", help="print header and metadata")
    p_info.add_argument("dataset", type=Path)

    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    if getattr(args, "config", None):
        cfg = RunConfig.parse(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = RunConfig()
    for name in RunConfig.field_names():
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "preprocess", None):
        parts = args.preprocess.split(",")
        if len(parts) != 3:
            raise ValueError("--preprocess expects A,CMIN,CMAX")
        cfg.preprocess_enabled = True
        cfg.preprocess_a = float(parts[0])
        cfg.preprocess_c_min = float(parts[1])
        cfg.preprocess_c_max = float(parts[2])
    return cfg


def _trajectory_pairs(cfg: RunConfig, spec: PdeSpec, grid: Grid) -> Dataset:
    per_series = cfg.series_length - 1
    if per_series < 1:
        raise ValueError("series_length must be at least 2")
    n_series = math.ceil(cfg.count / per_series)
    ref = cfg.ref_config(spec, grid)
    pairs: list[DataPair] = []
    for s in range(n_series):
        rng = np.random.default_rng([cfg.seed, s])
        ic = sample_initial_condition(spec, grid, rng)
        traj = solve_trajectory(spec, ic, cfg.dt * per_series, cfg.dt, ref)
        for a, b in zip(traj.states[:-1], traj.states[1:]):
            pairs.append(
                DataPair(
                    input=a, output=b, dt=cfg.dt, spec=spec, order=0,
                    provenance=Provenance(kind="original"),
                )
            )
    metadata = {
        "provenance_kind": "original",
        "series_length": cfg.series_length,
        "save_every": cfg.dt,
        "seed": cfg.seed,
        "n_series": n_series,
        "dt_ref": ref.dt_ref,
        "method": ref.method.value,
    }
    return Dataset(pairs=pairs, metadata=metadata)


def _cmd_generate(cfg: RunConfig, out: Path | None) -> int:
    spec = cfg.pde_spec()
    grid = cfg.grid()
    ds = _trajectory_pairs(cfg, spec, grid)
    ds.metadata["resolved_config"] = cfg.to_text().replace("\n", ";")
    if out is None:
        raise ValueError("generate requires --out")
    write_dataset(ds, out)
    print(f"wrote {len(ds.pairs)} pairs ({ds.metadata['n_series']} series) to {out}")
    return 0


def _cmd_augment(cfg: RunConfig, source: Path | None, out: Path | None) -> int:
    spec = cfg.pde_spec()
    grid = cfg.grid()
    if source is not None:
        src = read_dataset(source)
    else:
        gen_cfg = RunConfig(**{f: getattr(cfg, f) for f in RunConfig.field_names()})
        gen_cfg.count = max(4 * (cfg.series_length - 1), 16)
        gen_cfg.seed = cfg.seed + 1_000_003  # distinct stream from the mixing draws
        src = _trajectory_pairs(gen_cfg, spec, grid)
    acfg = cfg.augment_config(spec)
    ds = generate_augmented(src, acfg, rng_seed=cfg.seed)
    ds.metadata["resolved_config"] = cfg.to_text().replace("\n", ";")
    if out is None:
        raise ValueError("augment requires --out")
    write_dataset(ds, out)
    rej = ds.metadata["rejected"]
    print(f"wrote {len(ds.pairs)} accepted pairs to {out} ({rej} rejected attempts)")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    ds = read_dataset(args.dataset)
    spec = ds.pairs[0].spec
    grid = ds.pairs[0].output.grid
    base = RefConfig.defaults_for(spec, grid)
    ref = RefConfig(
        dt_ref=args.dt_ref if args.dt_ref else base.dt_ref,
        method=base.method,
        cfl_safety=args.cfl_safety if args.cfl_safety else base.cfl_safety,
    )
    report = accuracy_report(ds, ref)
    sys.stdout.write(report_to_text(report))
    if args.plot:
        save_error_histogram(report, str(args.plot))
        print(f"plot = {args.plot}")
    return 0


def _cmd_bench(cfg: RunConfig) -> int:
    spec = cfg.pde_spec()
    grid = cfg.grid()
    ref = RefConfig(
        dt_ref=cfg.cfl_safety * stability_bound(spec, grid),
        method=Method.EXPLICIT_EULER,
        cfl_safety=cfg.cfl_safety,
    )
    inits = [
        sample_initial_condition(spec, grid, np.random.default_rng([cfg.seed, i]))
        for i in range(cfg.count)
    ]
    inv, fwd = benchmark_generation(
        spec, cfg.count, cfg.dt, cfg.order, ref, initializations=inits
    )
    sys.stdout.write(report_to_text(inv))
    sys.stdout.write(report_to_text(fwd))
    print(f"speedup = {fwd.wall_time_s / inv.wall_time_s:.2f}")
    return 0


def _cmd_info(args: argparse.Namespace) -> int:
    from .dataset_io import _HEADER, MAGIC  # header introspection only

    raw = Path(args.dataset).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file shorter than the header")
    magic, version, dim, n, count, dt, kind, order, disc = _HEADER.unpack(
        raw[: _HEADER.size]
    )
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    print(f"magic = {magic.decode('ascii')}")
    print(f"version = {version}")
    print(f"dim = {dim}")
    print(f"n = {n}")
    print(f"pair_count = {count}")
    print(f"dt = {dt!r}")
    print(f"pde_kind = {kind}")
    print(f"order = {order}")
    print(f"disc = {disc}")
    side = Path(args.dataset).with_suffix(".meta")
    if side.exists():
        sys.stdout.write(side.read_text(encoding="utf-8"))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "info":
            return _cmd_info(args)
        cfg = _merge_config(args)
        if args.command == "generate":
            return _cmd_generate(cfg, args.out)
        if args.command == "augment":
            return _cmd_augment(cfg, args.source, args.out)
        if args.command == "bench":
            return _cmd_bench(cfg)
        raise ValueError(f"unknown command {args.command}")
    except (ValueError, FormatError, CorruptionError, VersionError,
            ConfigurationError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (GenerationError, DivergenceError) as err:
        print(f"failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
