"""Inverse-evolution data augmentation for neural PDE surrogate training.

Generates, verifies, and benchmarks training-data pairs for evolution
equations (heat, Burgers, Allen-Cahn, Navier-Stokes vorticity form) on
periodic domains. One explicit Taylor step of the time-reversed dynamics
yields, after swapping the two states, a pair that satisfies the matching
implicit scheme of the forward equation, so large time gaps stay accurate
at explicit-step cost.
"""

from .augment import (
    AugmentConfig,
    GenerationError,
    MixSpec,
    PreprocessSpec,
    generate_augmented,
    mix_initializations,
    preprocess,
    stability_filter,
    trajectories_from_dataset,
)
from .dataset_io import (
    CorruptionError,
    FormatError,
    VersionError,
    read_dataset,
    write_dataset,
)
from .grids import (
    Disc,
    Field,
    Grid,
    SolvabilityError,
    SpectralWorkspace,
    dealias,
    fd_derivative,
    l2_norm,
    laplacian,
    max_norm,
    poisson_inverse,
    rel_l2,
    sp_derivative,
    workspace_for,
)
from .operators import (
    PdeKind,
    PdeSpec,
    VelocityPair,
    apply_F,
    apply_F2,
    apply_JVP,
    default_forcing,
    velocity_from_vorticity,
)
from .schemes import (
    DataPair,
    Dataset,
    InstabilityError,
    PairFlags,
    Provenance,
    inverse_step,
    make_pair,
    time_derivatives,
)
from .solvers import (
    ConfigurationError,
    DivergenceError,
    Method,
    RefConfig,
    Trajectory,
    forward_evolve,
    sample_initial_condition,
    solve_trajectory,
    stability_bound,
)
from .verify import (
    AccuracyReport,
    BenchReport,
    accuracy_report,
    benchmark_generation,
    convergence_order,
    pair_relative_error,
    report_to_text,
)

__version__ = "0.1.0"
