"""Right-hand-side operators for the supported evolution equations.

For each equation this module provides the operator ``F`` with
``u_t = F(u)``, its Jacobian-vector product ``F'(u) v`` and the second
directional derivative ``F''(u)(v, v)``. Those three maps are everything the
high-order inverse steps need.

Supported equations (periodic boundary conditions throughout):

* Heat, 1D:           ``u_t = u_xx``
* Burgers, 1D:        ``u_t = -u u_x + (nu/pi) u_xx``
* Allen-Cahn, 2D:     ``u_t = u - u^3 + eps^2 lap(u)``
* Navier-Stokes, 2D vorticity form:
  ``w_t = -u w_x - v w_y + nu lap(w) + f`` with ``(u, v)`` the incompressible
  velocity recovered from ``w`` through the stream function.

With the pseudo-spectral backend every nonlinear product is formed pointwise
in physical space and dealiased afterward (2/3 rule). The stream-function
solve is spectral for both backends, and the vorticity is mean-removed before
it so that additive constants cannot disturb the velocity recovery.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache

import numpy as np

from .grids import (
    Disc,
    Field,
    Grid,
    dealias,
    fd_derivative,
    laplacian,
    poisson_inverse,
    sp_derivative,
)

__all__ = [
    "PdeKind",
    "PdeSpec",
    "VelocityPair",
    "apply_F",
    "apply_F2",
    "apply_JVP",
    "default_forcing",
    "velocity_from_vorticity",
]


class PdeKind(enum.Enum):
    HEAT_1D = "heat"
    BURGERS_1D = "burgers"
    ALLEN_CAHN_2D = "allen-cahn"
    NAVIER_STOKES_2D = "navier-stokes"

    @property
    def dim(self) -> int:
        return 1 if self in (PdeKind.HEAT_1D, PdeKind.BURGERS_1D) else 2


@dataclass(frozen=True, eq=False)
class PdeSpec:
    """Which equation, its physical parameters, and the spatial backend.

    ``forcing`` applies to Navier-Stokes only: ``None`` selects the default
    closed-form forcing ``0.1*(sin(2 pi (x+y)) + cos(2 pi (x+y)))``; pass an
    explicit field (possibly zero) to override it.
    """

    kind: PdeKind
    nu: float | None = None
    epsilon: float | None = None
    forcing: Field | None = None
    disc: Disc = Disc.FINITE_DIFFERENCE

    def __post_init__(self) -> None:
        if self.kind in (PdeKind.BURGERS_1D, PdeKind.NAVIER_STOKES_2D):
            if self.nu is None or not (self.nu > 0.0):
                raise ValueError(f"{self.kind.value} requires nu > 0, got {self.nu}")
        if self.kind is PdeKind.ALLEN_CAHN_2D:
            if self.epsilon is None or not (0.0 < self.epsilon < 1.0):
                raise ValueError(
                    f"allen-cahn requires 0 < epsilon < 1, got {self.epsilon}"
                )
        if self.forcing is not None and self.kind is not PdeKind.NAVIER_STOKES_2D:
            raise ValueError("forcing is only supported for navier-stokes")

    @property
    def dim(self) -> int:
        return self.kind.dim

    def key(self) -> tuple:
        """Hashable identity used for dataset homogeneity checks."""
        return (self.kind.value, self.nu, self.epsilon, self.disc.value,
                self.forcing is None)

    @classmethod
    def heat(cls, disc: Disc = Disc.FINITE_DIFFERENCE) -> "PdeSpec":
        return cls(PdeKind.HEAT_1D, disc=disc)

    @classmethod
    def burgers(cls, nu: float, disc: Disc = Disc.FINITE_DIFFERENCE) -> "PdeSpec":
        return cls(PdeKind.BURGERS_1D, nu=nu, disc=disc)

    @classmethod
    def allen_cahn(cls, epsilon: float, disc: Disc = Disc.FINITE_DIFFERENCE) -> "PdeSpec":
        return cls(PdeKind.ALLEN_CAHN_2D, epsilon=epsilon, disc=disc)

    @classmethod
    def navier_stokes(
        cls,
        nu: float,
        forcing: Field | None = None,
        disc: Disc = Disc.PSEUDO_SPECTRAL,
    ) -> "PdeSpec":
        return cls(PdeKind.NAVIER_STOKES_2D, nu=nu, forcing=forcing, disc=disc)

    def with_disc(self, disc: Disc) -> "PdeSpec":
        return replace(self, disc=disc)


@dataclass(frozen=True, eq=False)
class VelocityPair:
    """Incompressible velocity components recovered from a vorticity field."""

    u: Field
    v: Field


@lru_cache(maxsize=16)
def default_forcing(grid: Grid) -> Field:
    """Standing forcing ``0.1*(sin(2 pi (x+y)) + cos(2 pi (x+y)))``; zero mean."""
    if grid.dim != 2:
        raise ValueError("default forcing is defined on 2D grids")
    x, y = grid.coords()
    phase = 2.0 * np.pi * (x + y)
    return Field(grid, 0.1 * (np.sin(phase) + np.cos(phase)))


class _NsSpectralWorkspace:
    """Half-spectrum multipliers for the vorticity operators on one grid.

    Everything the Navier-Stokes right-hand side needs from a single rfft2
    of the (mean-removed) vorticity: gradient and velocity multipliers, the
    diffusion symbol, and the 2/3-rule mask.
    """

    def __init__(self, grid: Grid):
        n = grid.n
        m = np.fft.fftfreq(n, d=1.0 / n)
        k1 = 2.0 * np.pi * m / grid.length
        nr = n // 2 + 1
        kx = k1[:nr][None, :]
        ky = k1[:, None]
        self.ikx = 1j * kx
        self.iky = 1j * ky
        self.k2 = kx**2 + ky**2
        inv = self.k2.copy()
        inv[0, 0] = 1.0
        inv = 1.0 / inv
        inv[0, 0] = 0.0
        self.u_mult = self.iky * inv   # u_hat = d/dy(psi), psi_hat = w_hat/k2
        self.v_mult = -self.ikx * inv  # v_hat = -d/dx(psi)
        keep = np.abs(m) <= n / 3.0
        self.mask = keep[:, None] & keep[:nr][None, :]


@lru_cache(maxsize=16)
def _ns_workspace(grid: Grid) -> _NsSpectralWorkspace:
    return _NsSpectralWorkspace(grid)


class _NsSpectralState:
    """Lazily cached rfft2 view of one mean-removed vorticity-like field.

    Higher-order inverse steps revisit the same state several times; caching
    the gradient, velocity, and diffusion fields keeps each transform to one
    evaluation per state.
    """

    def __init__(self, values: np.ndarray, ws: _NsSpectralWorkspace):
        self.ws = ws
        self.hat = np.fft.rfft2(values - np.mean(values))

    @cached_property
    def grad(self) -> tuple[np.ndarray, np.ndarray]:
        ws = self.ws
        return (np.fft.irfft2(ws.ikx * self.hat), np.fft.irfft2(ws.iky * self.hat))

    @cached_property
    def velocity(self) -> tuple[np.ndarray, np.ndarray]:
        ws = self.ws
        return (np.fft.irfft2(ws.u_mult * self.hat),
                np.fft.irfft2(ws.v_mult * self.hat))

    @cached_property
    def diffusion(self) -> np.ndarray:
        return np.fft.irfft2(-self.ws.k2 * self.hat)

    def dealiased(self, product: np.ndarray) -> np.ndarray:
        """Apply the 2/3-rule mask to a physical-space product."""
        prod_hat = np.fft.rfft2(product)
        prod_hat *= self.ws.mask
        return np.fft.irfft2(prod_hat)


def _ns_state(f: Field) -> _NsSpectralState:
    cached = getattr(f, "_ns_spectral", None)
    if cached is None:
        cached = _NsSpectralState(f.values, _ns_workspace(f.grid))
        object.__setattr__(f, "_ns_spectral", cached)
    return cached


def _check_state(spec: PdeSpec, state: Field) -> None:
    if state.grid.dim != spec.dim:
        raise ValueError(
            f"{spec.kind.value} needs a {spec.dim}D field, got {state.grid.dim}D"
        )


def _dx(f: Field, spec: PdeSpec, axis: int = 0) -> Field:
    if spec.disc is Disc.PSEUDO_SPECTRAL:
        return sp_derivative(f, axis, 1)
    return fd_derivative(f, axis, 1)


def _product(spec: PdeSpec, values: np.ndarray, grid: Grid) -> Field:
    """Wrap a pointwise nonlinear product, dealiasing it on the spectral backend."""
    f = Field._wrap(grid, values)
    if spec.disc is Disc.PSEUDO_SPECTRAL:
        return dealias(f)
    return f


def _remove_mean(f: Field) -> Field:
    return Field._wrap(f.grid, f.values - np.mean(f.values))


def velocity_from_vorticity(omega: Field) -> VelocityPair:
    """Recover ``(u, v)`` with ``v_x - u_y = omega`` via the stream function.

    Solves ``lap(psi) = -omega`` spectrally and takes ``u = psi_y``,
    ``v = -psi_x``. The vorticity must satisfy the periodic solvability
    condition (zero mean within tolerance).
    """
    if omega.grid.dim != 2:
        raise ValueError("vorticity must be a 2D field")
    psi = poisson_inverse(Field._wrap(omega.grid, -omega.values))
    u = sp_derivative(psi, 1, 1)
    v = Field._wrap(omega.grid, -sp_derivative(psi, 0, 1).values)
    return VelocityPair(u=u, v=v)


def _ns_velocity(omega0: Field) -> VelocityPair:
    """Velocity recovery for internal use; input must already be mean-removed."""
    psi = poisson_inverse(Field._wrap(omega0.grid, -omega0.values))
    u = sp_derivative(psi, 1, 1)
    v = Field._wrap(omega0.grid, -sp_derivative(psi, 0, 1).values)
    return VelocityPair(u=u, v=v)


def _ns_forcing(spec: PdeSpec, grid: Grid) -> Field:
    return spec.forcing if spec.forcing is not None else default_forcing(grid)


def apply_F(spec: PdeSpec, state: Field) -> Field:
    """Evaluate the right-hand side ``F(state)`` for the given equation."""
    _check_state(spec, state)
    grid = state.grid
    kind = spec.kind

    if kind is PdeKind.HEAT_1D:
        return laplacian(state, spec.disc)

    if kind is PdeKind.BURGERS_1D:
        u = state.values
        adv = _product(spec, u * _dx(state, spec).values, grid)
        diff = laplacian(state, spec.disc)
        return Field._wrap(grid, -adv.values + (spec.nu / np.pi) * diff.values)

    if kind is PdeKind.ALLEN_CAHN_2D:
        u = state.values
        cubic = _product(spec, u**3, grid)
        diff = laplacian(state, spec.disc)
        return Field._wrap(grid, u - cubic.values + spec.epsilon**2 * diff.values)

    # Navier-Stokes vorticity form
    f = _ns_forcing(spec, grid)
    if spec.disc is Disc.PSEUDO_SPECTRAL:
        st = _ns_state(state)
        u, v = st.velocity
        gx, gy = st.grad
        adv = st.dealiased(u * gx + v * gy)
        return Field._wrap(grid, -adv + spec.nu * st.diffusion + f.values)
    w0 = _remove_mean(state)
    vel = _ns_velocity(w0)
    wx = _dx(w0, spec, 0)
    wy = _dx(w0, spec, 1)
    adv = _product(spec, vel.u.values * wx.values + vel.v.values * wy.values, grid)
    diff = laplacian(w0, spec.disc)
    return Field._wrap(grid, -adv.values + spec.nu * diff.values + f.values)


def apply_JVP(spec: PdeSpec, state: Field, dir: Field) -> Field:
    """Directional derivative ``F'(state) dir`` (linearization of apply_F)."""
    _check_state(spec, state)
    if dir.grid != state.grid:
        raise ValueError("state and direction must share one grid")
    grid = state.grid
    kind = spec.kind

    if kind is PdeKind.HEAT_1D:
        return laplacian(dir, spec.disc)

    if kind is PdeKind.BURGERS_1D:
        u, d = state.values, dir.values
        mixed = u * _dx(dir, spec).values + d * _dx(state, spec).values
        adv = _product(spec, mixed, grid)
        diff = laplacian(dir, spec.disc)
        return Field._wrap(grid, -adv.values + (spec.nu / np.pi) * diff.values)

    if kind is PdeKind.ALLEN_CAHN_2D:
        u, d = state.values, dir.values
        cubic = _product(spec, 3.0 * u**2 * d, grid)
        diff = laplacian(dir, spec.disc)
        return Field._wrap(grid, d - cubic.values + spec.epsilon**2 * diff.values)

    if spec.disc is Disc.PSEUDO_SPECTRAL:
        sw = _ns_state(state)
        sd = _ns_state(dir)
        uw, vw = sw.velocity
        ud, vd = sd.velocity
        wx, wy = sw.grad
        dx_, dy_ = sd.grad
        mixed = ud * wx + vd * wy + uw * dx_ + vw * dy_
        adv = sw.dealiased(mixed)
        return Field._wrap(grid, -adv + spec.nu * sd.diffusion)
    w0 = _remove_mean(state)
    d0 = _remove_mean(dir)
    vel = _ns_velocity(w0)
    vel_d = _ns_velocity(d0)
    wx, wy = _dx(w0, spec, 0), _dx(w0, spec, 1)
    dx_, dy_ = _dx(d0, spec, 0), _dx(d0, spec, 1)
    mixed = (
        vel_d.u.values * wx.values
        + vel_d.v.values * wy.values
        + vel.u.values * dx_.values
        + vel.v.values * dy_.values
    )
    adv = _product(spec, mixed, grid)
    diff = laplacian(d0, spec.disc)
    return Field._wrap(grid, -adv.values + spec.nu * diff.values)


def apply_F2(spec: PdeSpec, state: Field, dir: Field) -> Field:
    """Second directional derivative ``F''(state)(dir, dir)``."""
    _check_state(spec, state)
    if dir.grid != state.grid:
        raise ValueError("state and direction must share one grid")
    grid = state.grid
    kind = spec.kind

    if kind is PdeKind.HEAT_1D:
        return Field._wrap(grid, np.zeros(grid.shape))

    if kind is PdeKind.BURGERS_1D:
        d = dir.values
        prod = _product(spec, 2.0 * d * _dx(dir, spec).values, grid)
        return Field._wrap(grid, -prod.values)

    if kind is PdeKind.ALLEN_CAHN_2D:
        prod = _product(spec, 6.0 * state.values * dir.values**2, grid)
        return Field._wrap(grid, -prod.values)

    if spec.disc is Disc.PSEUDO_SPECTRAL:
        sd = _ns_state(dir)
        ud, vd = sd.velocity
        dx_, dy_ = sd.grad
        prod = sd.dealiased(2.0 * (ud * dx_ + vd * dy_))
        return Field._wrap(grid, -prod)
    d0 = _remove_mean(dir)
    vel_d = _ns_velocity(d0)
    dx_, dy_ = _dx(d0, spec, 0), _dx(d0, spec, 1)
    mixed = vel_d.u.values * dx_.values + vel_d.v.values * dy_.values
    prod = _product(spec, 2.0 * mixed, grid)
    return Field._wrap(grid, -prod.values)
