"""Periodic grids, field storage, and the two spatial-discretization backends.

Every operator in the package runs on uniform periodic meshes over
``[0, length)^dim`` (dim 1 or 2) and double-precision samples. Two
interchangeable backends provide derivatives: second-order central finite
differences with periodic wraparound, and a pseudo-spectral backend built on
the FFT.

Conventions, stated once and enforced everywhere:

* 2D values are stored row-major as ``(y, x)`` with x varying fastest, so
  ``values[j, i]`` samples the point ``(x, y) = (i*h, j*h)``.
* Derivative axes are spatial: ``axis=0`` is d/dx, ``axis=1`` is d/dy.
* Wavenumbers are angular, ``k = 2*pi*m/length`` for signed integer mode m.
* The discrete L2 norm is ``sqrt(h**dim * sum(v**2))`` and all relative
  errors in the repo use it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Disc",
    "Field",
    "Grid",
    "SolvabilityError",
    "SpectralWorkspace",
    "dealias",
    "fd_derivative",
    "l2_norm",
    "laplacian",
    "max_norm",
    "rel_l2",
    "sp_derivative",
    "workspace_for",
]


class Disc(enum.Enum):
    """Spatial discretization backend."""

    FINITE_DIFFERENCE = "fd"
    PSEUDO_SPECTRAL = "spectral"


class SolvabilityError(ValueError):
    """Raised when a periodic Poisson right-hand side has a nonzero mean."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh on ``[0, length)^dim``.

    ``n`` must be even (a well-defined Nyquist mode) and at least 8. The
    spacing ``h`` is derived as ``length / n`` rather than stored, so the
    stored representation cannot drift from ``h * n == length``.
    """

    dim: int
    n: int
    length: float = 1.0

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not (self.length > 0.0):
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def npoints(self) -> int:
        return self.n**self.dim

    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to ``shape``: (X,) in 1D, (X, Y) in 2D."""
        x = np.arange(self.n) * self.h
        if self.dim == 1:
            return (x,)
        return x[None, :], x[:, None]


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable real-valued samples of a function on a :class:`Grid`.

    Values may be non-finite only for states produced by a diverged inverse
    step; such fields are always carried inside rejected pairs, never fed
    back into operators.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.shape != self.grid.shape:
            raise ValueError(
                f"values shape {arr.shape} does not match grid shape {self.grid.shape}"
            )
        if arr is self.values:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def _wrap(cls, grid: Grid, values: np.ndarray) -> "Field":
        """No-copy constructor for freshly allocated arrays (internal hot path)."""
        f = object.__new__(cls)
        values = values.astype(np.float64, copy=False)
        values.setflags(write=False)
        object.__setattr__(f, "grid", grid)
        object.__setattr__(f, "values", values)
        return f

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())


@dataclass(frozen=True, eq=False)
class SpectralWorkspace:
    """Cached wavenumber arrays and dealias mask for one grid size.

    Instances are immutable and the FFTs themselves are stateless, so a
    workspace may be shared freely across threads.
    """

    grid: Grid
    k_axes: tuple[np.ndarray, ...]      # angular wavenumbers, broadcast shapes
    freq_axes: tuple[np.ndarray, ...]   # signed integer mode numbers, same shapes
    k_squared: np.ndarray
    dealias_mask: np.ndarray            # True where the mode is kept (2/3 rule)

    @classmethod
    def create(cls, grid: Grid) -> "SpectralWorkspace":
        m = np.fft.fftfreq(grid.n, d=1.0 / grid.n)  # signed integer modes
        k1 = 2.0 * np.pi * m / grid.length
        keep1 = np.abs(m) <= grid.n / 3.0
        if grid.dim == 1:
            k_axes = (k1,)
            freq_axes = (m,)
            k_squared = k1**2
            mask = keep1
        else:
            # numpy axis 0 is y, axis 1 is x
            k_axes = (k1[None, :], k1[:, None])
            freq_axes = (m[None, :], m[:, None])
            k_squared = k_axes[0] ** 2 + k_axes[1] ** 2
            mask = keep1[None, :] & keep1[:, None]
        for a in (*k_axes, *freq_axes, k_squared, mask):
            a.setflags(write=False)
        return cls(grid, k_axes, freq_axes, k_squared, mask)

    @property
    def nyquist_masks(self) -> tuple[np.ndarray, ...]:
        """Boolean arrays marking the Nyquist mode along each spatial axis."""
        return tuple(np.abs(f) == self.grid.n // 2 for f in self.freq_axes)


@lru_cache(maxsize=32)
def workspace_for(grid: Grid) -> SpectralWorkspace:
    return SpectralWorkspace.create(grid)


def _np_axis(grid: Grid, axis: int) -> int:
    """Map a spatial axis (0 = x, 1 = y) to the numpy storage axis."""
    if axis < 0 or axis >= grid.dim:
        raise ValueError(f"axis {axis} invalid for a {grid.dim}D grid")
    return 0 if grid.dim == 1 else (1 - axis)


def _fft(values: np.ndarray) -> np.ndarray:
    return np.fft.fftn(values)


def _ifft_real(spectrum: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(spectrum).real


def fd_derivative(f: Field, axis: int, order: int) -> Field:
    """Central second-order finite difference with periodic wraparound.

    order 1 gives ``(f[i+1] - f[i-1]) / (2h)``; order 2 gives
    ``(f[i+1] - 2 f[i] + f[i-1]) / h**2``. Non-periodic data wraps around:
    the stencil arithmetic is applied verbatim at the boundary points.
    """
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    ax = _np_axis(f.grid, axis)
    v = f.values
    up = np.roll(v, -1, axis=ax)
    dn = np.roll(v, 1, axis=ax)
    h = f.grid.h
    if order == 1:
        out = (up - dn) / (2.0 * h)
    else:
        out = (up - 2.0 * v + dn) / (h * h)
    return Field._wrap(f.grid, out)


def sp_derivative(f: Field, axis: int, order: int) -> Field:
    """Pseudo-spectral derivative: multiply the spectrum by ``(i*k)**order``.

    For odd orders the Nyquist mode is zeroed, keeping the result real and
    the differentiation operator antisymmetric.
    """
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    ws = workspace_for(f.grid)
    _np_axis(f.grid, axis)  # validate axis
    k = ws.k_axes[axis]
    spec = _fft(f.values)
    if order == 1:
        spec = spec * (1j * k)
        spec = np.where(ws.nyquist_masks[axis], 0.0, spec)
    else:
        spec = spec * -(k * k)
    return Field._wrap(f.grid, _ifft_real(spec))


def laplacian(f: Field, disc: Disc) -> Field:
    """Sum of second derivatives over all axes with the requested backend."""
    if disc is Disc.FINITE_DIFFERENCE:
        out = fd_derivative(f, 0, 2).values
        if f.grid.dim == 2:
            out = out + fd_derivative(f, 1, 2).values
        return Field._wrap(f.grid, out)
    ws = workspace_for(f.grid)
    spec = _fft(f.values) * -ws.k_squared
    return Field._wrap(f.grid, _ifft_real(spec))


def poisson_inverse(g: Field) -> Field:
    """Spectral solve of ``lap(psi) = g`` on the periodic domain.

    The right-hand side must be zero-mean (periodic solvability); the zero
    mode of the solution is pinned to 0.
    """
    gmax = float(np.max(np.abs(g.values))) if g.values.size else 0.0
    mean = float(np.mean(g.values))
    if abs(mean) > 1e-10 * max(1.0, gmax):
        raise SolvabilityError(
            f"Poisson right-hand side has mean {mean:.3e}; periodic solve needs zero mean"
        )
    ws = workspace_for(g.grid)
    spec = _fft(g.values)
    k2 = ws.k_squared.copy()
    k2.reshape(-1)[0] = 1.0  # zero mode handled separately
    psi = spec / -k2
    psi.reshape(-1)[0] = 0.0
    return Field._wrap(g.grid, _ifft_real(psi))


def dealias(f: Field) -> Field:
    """Zero all modes with ``|mode| > n/3`` on any axis (2/3 rule).

    Fields whose spectrum is already band-limited within rounding are
    returned unchanged, which makes repeated application a strict no-op.
    """
    ws = workspace_for(f.grid)
    spec = _fft(f.values)
    outside = np.abs(spec[~ws.dealias_mask])
    if outside.size == 0:
        return f
    scale = float(np.max(np.abs(spec)))
    if scale == 0.0 or float(np.max(outside)) <= 1e-13 * scale:
        return f
    spec = np.where(ws.dealias_mask, spec, 0.0)
    return Field._wrap(f.grid, _ifft_real(spec))


def l2_norm(f: Field) -> float:
    """Discrete L2 norm, ``sqrt(h**dim * sum(v**2))``."""
    return float(np.sqrt(f.grid.h**f.grid.dim * np.sum(f.values**2)))


def max_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def rel_l2(approx: Field | np.ndarray, exact: Field | np.ndarray) -> float:
    """Relative discrete L2 error ``||approx - exact|| / ||exact||``.

    Accepts fields or raw arrays; the quadrature weight cancels in the ratio.
    """
    a = approx.values if isinstance(approx, Field) else np.asarray(approx)
    b = exact.values if isinstance(exact, Field) else np.asarray(exact)
    denom = float(np.sqrt(np.sum(b**2)))
    if denom == 0.0:
        return float(np.sqrt(np.sum((a - b) ** 2)))
    return float(np.sqrt(np.sum((a - b) ** 2)) / denom)
