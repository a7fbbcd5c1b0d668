"""Ground-truth forward solvers and initial-condition sampling.

Two integrators cover every oracle and original-data need:

* ``ExplicitEuler``: sub-stepped forward Euler for the heat, Burgers and
  Allen-Cahn equations, with the diffusive stability bound enforced.
* ``SemiImplicitSpectralCN``: Navier-Stokes only. Diffusion advances with
  Crank-Nicolson in spectral space while advection and forcing advance
  explicitly with a Heun predictor-corrector; nonlinear products are
  dealiased.

Pair accuracy elsewhere in the package is always judged against these
solvers, never against another inverse scheme.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grids import Disc, Field, Grid, workspace_for
from .operators import PdeKind, PdeSpec, apply_F, default_forcing

__all__ = [
    "ConfigurationError",
    "DivergenceError",
    "Method",
    "RefConfig",
    "Trajectory",
    "diffusion_coefficient",
    "forward_evolve",
    "sample_initial_condition",
    "solve_trajectory",
    "stability_bound",
]


class ConfigurationError(ValueError):
    """Solver configuration violates a stability or applicability rule."""


class DivergenceError(RuntimeError):
    """Forward integration left the finite range."""

    def __init__(self, time_reached: float):
        super().__init__(f"forward solve diverged at t = {time_reached:.6g}")
        self.time_reached = time_reached


class Method(enum.Enum):
    EXPLICIT_EULER = "euler"
    SEMI_IMPLICIT_SPECTRAL_CN = "cn"


@dataclass(frozen=True)
class RefConfig:
    """Reference-integration settings: inner step, method, CFL safety factor."""

    dt_ref: float
    method: Method = Method.EXPLICIT_EULER
    cfl_safety: float = 0.9

    def __post_init__(self) -> None:
        if not (self.dt_ref > 0.0):
            raise ValueError(f"dt_ref must be positive, got {self.dt_ref}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")

    @classmethod
    def defaults_for(cls, spec: PdeSpec, grid: Grid) -> "RefConfig":
        """Reference-grade defaults: 1e-4 in 2D, 1e-6 in 1D, tightened to the CFL bound."""
        if spec.kind is PdeKind.NAVIER_STOKES_2D:
            return cls(dt_ref=1e-4, method=Method.SEMI_IMPLICIT_SPECTRAL_CN)
        base = 1e-4 if spec.dim == 2 else 1e-6
        safety = 0.9
        dt_ref = min(base, safety * stability_bound(spec, grid))
        return cls(dt_ref=dt_ref, method=Method.EXPLICIT_EULER, cfl_safety=safety)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States of one solve at strictly increasing, uniformly spaced times."""

    spec: PdeSpec
    times: tuple[float, ...]
    states: tuple[Field, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("times and states must align")
        if len(self.times) >= 2:
            gaps = np.diff(self.times)
            if not np.all(gaps > 0):
                raise ValueError("times must be strictly increasing")
            if not np.allclose(gaps, gaps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("save interval must be uniform")
        for s in self.states:
            if not s.is_finite:
                raise ValueError("trajectory states must be finite")


def diffusion_coefficient(spec: PdeSpec) -> float:
    if spec.kind is PdeKind.HEAT_1D:
        return 1.0
    if spec.kind is PdeKind.BURGERS_1D:
        return spec.nu / np.pi
    if spec.kind is PdeKind.ALLEN_CAHN_2D:
        return spec.epsilon**2
    return spec.nu


def stability_bound(spec: PdeSpec, grid: Grid) -> float:
    """Largest stable explicit step for the diffusive part.

    The base bound is ``h**2 / (2 * dim * D)``, the largest-eigenvalue limit
    of the second-order stencil. The pseudo-spectral operator reaches the
    full Nyquist eigenvalue ``(pi/h)**2`` per axis, a factor ``pi**2 / 4``
    above the stencil's, so its bound is tightened by ``4 / pi**2``.
    """
    base = grid.h**2 / (2.0 * grid.dim * diffusion_coefficient(spec))
    if spec.disc is Disc.PSEUDO_SPECTRAL:
        return base * 4.0 / np.pi**2
    return base


def sample_initial_condition(
    spec: PdeSpec,
    grid: Grid,
    rng: np.random.Generator,
    *,
    modes: int = 5,
    spectral_decay: float = 1.0,
    alpha: float = 2.5,
    tau: float = 7.0,
) -> Field:
    """Draw one random initial state appropriate for the equation.

    1D: a superposition of ``modes`` random sinusoids with amplitudes damped
    as ``m**-spectral_decay``, normalized to unit sup norm. 2D: a Gaussian
    random field with power spectrum ``(|k|^2 + tau^2)**(-alpha)``, zero-mean
    and normalized to unit sup norm. Allen-Cahn additionally passes the field
    through ``tanh(. / 0.5)`` to carve phase regions.
    """
    if grid.dim != spec.dim:
        raise ValueError("grid dimensionality must match the equation")
    if grid.dim == 1:
        (x,) = grid.coords()
        out = np.zeros(grid.n)
        for m in range(1, modes + 1):
            amp = rng.uniform(0.5, 1.0) * m**-spectral_decay
            phase = rng.uniform(0.0, 2.0 * np.pi)
            out += amp * np.sin(2.0 * np.pi * m * x / grid.length + phase)
        out /= np.max(np.abs(out))
        return Field(grid, out)

    ws = workspace_for(grid)
    coeff = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    power = (ws.k_squared + tau**2) ** (-alpha / 2.0)
    spec_arr = coeff * power
    spec_arr.reshape(-1)[0] = 0.0  # zero-mean
    out = np.fft.ifftn(spec_arr).real
    out /= np.max(np.abs(out))
    if spec.kind is PdeKind.ALLEN_CAHN_2D:
        out = np.tanh(out / 0.5)
    return Field(grid, out)


def _euler_steps(spec: PdeSpec, values: np.ndarray, grid: Grid,
                 steps: list[float], t0: float) -> np.ndarray:
    t = t0
    for dt in steps:
        f = apply_F(spec, Field._wrap(grid, values))
        values = values + dt * f.values
        t += dt
        if not np.isfinite(values).all():
            raise DivergenceError(time_reached=t)
    return values


class _CNStepper:
    """Navier-Stokes stepper: Crank-Nicolson diffusion, Heun advection+forcing.

    Works on half-spectrum (rfft2) arrays; the state is real so the full
    spectrum is redundant.
    """

    def __init__(self, spec: PdeSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        n = grid.n
        m = np.fft.fftfreq(n, d=1.0 / n)
        k1 = 2.0 * np.pi * m / grid.length
        nr = n // 2 + 1
        kx = k1[:nr][None, :]
        ky = k1[:, None]
        self.ikx = 1j * kx
        self.iky = 1j * ky
        k2 = kx**2 + ky**2
        k2_safe = k2.copy()
        k2_safe[0, 0] = 1.0
        self.inv_k2 = 1.0 / k2_safe
        self.inv_k2[0, 0] = 0.0
        keep = np.abs(m) <= n / 3.0
        self.mask = keep[:, None] & keep[:nr][None, :]
        self.f_hat = np.fft.rfft2(
            (spec.forcing if spec.forcing is not None else default_forcing(grid)).values
        )
        self.lin = -spec.nu * k2  # diffusion symbol
        # stream-function shortcuts: u_hat = d/dy(psi), v_hat = -d/dx(psi)
        self.u_mult = self.iky * self.inv_k2
        self.v_mult = -self.ikx * self.inv_k2
        self._dt_cache: tuple[float, tuple[np.ndarray, np.ndarray]] | None = None

    def explicit_hat(self, w_hat: np.ndarray) -> np.ndarray:
        """Half-spectrum of the explicit terms: dealiased advection plus forcing."""
        u = np.fft.irfft2(self.u_mult * w_hat)
        v = np.fft.irfft2(self.v_mult * w_hat)
        wx = np.fft.irfft2(self.ikx * w_hat)
        wy = np.fft.irfft2(self.iky * w_hat)
        adv_hat = np.fft.rfft2(u * wx + v * wy)
        adv_hat *= self.mask
        adv_hat -= self.f_hat
        return -adv_hat

    def _prepared(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        if self._dt_cache is None or self._dt_cache[0] != dt:
            half_lin = 0.5 * dt * self.lin
            self._dt_cache = (dt, (1.0 + half_lin, 1.0 / (1.0 - half_lin)))
        return self._dt_cache[1]

    def step(self, w_hat: np.ndarray, dt: float) -> np.ndarray:
        one_plus, inv_denom = self._prepared(dt)
        base = one_plus * w_hat
        n_hat = self.explicit_hat(w_hat)
        pred = (base + dt * n_hat) * inv_denom
        n_hat += self.explicit_hat(pred)
        return (base + 0.5 * dt * n_hat) * inv_denom


def _cn_steps(stepper: _CNStepper, values: np.ndarray,
              steps: list[float], t0: float) -> np.ndarray:
    w_hat = np.fft.rfft2(values)
    t = t0
    for dt in steps:
        w_hat = stepper.step(w_hat, dt)
        t += dt
        if not np.isfinite(w_hat).all():
            raise DivergenceError(time_reached=t)
    return np.fft.irfft2(w_hat)


def _ns_euler_steps(stepper: _CNStepper, values: np.ndarray,
                    steps: list[float], t0: float) -> np.ndarray:
    """Forward Euler for spectral Navier-Stokes, one transform set per step."""
    w_hat = np.fft.rfft2(values)
    t = t0
    for dt in steps:
        w_hat = w_hat + dt * (stepper.explicit_hat(w_hat) + stepper.lin * w_hat)
        t += dt
        if not np.isfinite(w_hat).all():
            raise DivergenceError(time_reached=t)
    return np.fft.irfft2(w_hat)


def _substeps(t_total: float, dt_ref: float) -> list[float]:
    """Uniform sub-steps covering t_total, last step shortened to land exactly."""
    nfull = int(np.floor(t_total / dt_ref + 1e-12))
    rem = t_total - nfull * dt_ref
    steps = [dt_ref] * nfull
    if rem > 1e-12 * dt_ref:
        steps.append(rem)
    return steps


def forward_evolve(spec: PdeSpec, u0: Field, t_total: float, ref: RefConfig) -> Field:
    """Integrate the forward equation from u0 over t_total."""
    if t_total < 0.0:
        raise ValueError("t_total must be nonnegative")
    if t_total == 0.0:
        return u0
    if ref.method is Method.SEMI_IMPLICIT_SPECTRAL_CN:
        if spec.kind is not PdeKind.NAVIER_STOKES_2D:
            raise ConfigurationError(
                "the semi-implicit spectral CN method applies to navier-stokes only"
            )
        stepper = _CNStepper(spec, u0.grid)
        out = _cn_steps(stepper, u0.values, _substeps(t_total, ref.dt_ref), 0.0)
        return Field._wrap(u0.grid, out)
    bound = ref.cfl_safety * stability_bound(spec, u0.grid)
    if ref.dt_ref > bound * (1.0 + 1e-12):
        raise ConfigurationError(
            f"dt_ref {ref.dt_ref:.3e} exceeds the explicit stability bound "
            f"{bound:.3e} (cfl_safety {ref.cfl_safety})"
        )
    steps = _substeps(t_total, ref.dt_ref)
    if (spec.kind is PdeKind.NAVIER_STOKES_2D
            and spec.disc is Disc.PSEUDO_SPECTRAL):
        stepper = _CNStepper(spec, u0.grid)
        out = _ns_euler_steps(stepper, u0.values, steps, 0.0)
    else:
        out = _euler_steps(spec, u0.values, u0.grid, steps, 0.0)
    return Field._wrap(u0.grid, out)


def solve_trajectory(
    spec: PdeSpec,
    u0: Field,
    t_final: float,
    save_every: float,
    ref: RefConfig,
) -> Trajectory:
    """Evolve u0 and record states at 0, save_every, ..., t_final."""
    n_saves = int(round(t_final / save_every))
    if abs(n_saves * save_every - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError("save_every must divide t_final within rounding")
    times = [0.0]
    states = [u0]
    current = u0
    for i in range(n_saves):
        current = forward_evolve(spec, current, save_every, ref)
        times.append((i + 1) * save_every)
        states.append(current)
    return Trajectory(spec=spec, times=tuple(times), states=tuple(states))
