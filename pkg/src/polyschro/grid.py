"""Uniform periodic grids, spectral derivatives, discrete L2 geometry.

All fields live on a uniform grid over [-L, L)^d with periodic wrap; the
dual grid is the exact FFT frequency set, so differentiation is a Fourier
multiplier and the quantization rules stay exact for one-sided symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from .errors import GridError


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform periodic grid on [-L, L)^d together with its FFT dual.

    Parameters
    ----------
    d : int
        Spatial dimension, 1 or 2.
    L : float
        Half box length; nodes are x_j = -L + j * dx.
    N : int
        Nodes per axis, even (pairs the +/- frequencies symmetrically
        apart from the lone Nyquist mode).
    """

    d: int
    L: float
    N: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {self.d}")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 8):
            raise GridError(f"N must be an integer >= 8, got {self.N!r}")
        if self.N % 2 != 0:
            raise GridError(f"N must be even, got {self.N}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise GridError(f"L must be positive and finite, got {self.L!r}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return np.pi / self.L

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    @cached_property
    def axis(self) -> np.ndarray:
        """Node coordinates along one axis."""
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def dual_axis(self) -> np.ndarray:
        """Frequencies along one axis, FFT ordering."""
        return 2.0 * np.pi * sfft.fftfreq(self.N, d=self.dx)

    @cached_property
    def mesh(self) -> tuple:
        """Coordinate arrays of shape ``shape``, one per axis."""
        if self.d == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def dual_mesh(self) -> tuple:
        if self.d == 1:
            return (self.dual_axis,)
        return tuple(np.meshgrid(self.dual_axis, self.dual_axis, indexing="ij"))

    @cached_property
    def radius_sq(self) -> np.ndarray:
        """|x|^2 on the grid."""
        out = np.zeros(self.shape)
        for c in self.mesh:
            out = out + c**2
        return out

    @cached_property
    def dual_radius_sq(self) -> np.ndarray:
        """|xi|^2 on the dual grid."""
        out = np.zeros(self.shape)
        for c in self.dual_mesh:
            out = out + c**2
        return out

    def bracket_weight(self, exponent: float) -> np.ndarray:
        """(1 + |x|^2)^(exponent/2): the polynomial weight <x>^exponent."""
        return (1.0 + self.radius_sq) ** (exponent / 2.0)

    def boundary_mask(self, fraction: float = 0.1) -> np.ndarray:
        """Nodes whose distance to the box edge is below fraction * L."""
        cut = (1.0 - fraction) * self.L
        mask = np.zeros(self.shape, dtype=bool)
        for c in self.mesh:
            mask |= np.abs(c) >= cut
        return mask

    def fft(self, values: np.ndarray) -> np.ndarray:
        return sfft.fftn(values) if self.d > 1 else sfft.fft(values)

    def ifft(self, values: np.ndarray) -> np.ndarray:
        return sfft.ifftn(values) if self.d > 1 else sfft.ifft(values)


def make_grid(d: int, L: float, N: int) -> SpatialGrid:
    """Build a grid; raises GridError on unusable parameters."""
    return SpatialGrid(d=d, L=float(L), N=int(N))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """A complex field sampled on a grid.

    Values are stored read-only; arithmetic returns new instances.
    """

    grid: SpatialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.shape != self.grid.shape:
            raise GridError(
                f"values shape {arr.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(arr.view(float))):
            raise GridError("wavefunction values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def with_values(self, values: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, values)

    def norm(self) -> float:
        return l2_norm(self)

    def inner(self, other: "WaveFunction") -> complex:
        return l2_inner_product(self, other)

    def __add__(self, other):
        _check_same_grid(self, other)
        return WaveFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return WaveFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return WaveFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return WaveFunction(self.grid, self.values / scalar)


def _check_same_grid(a: WaveFunction, b: WaveFunction):
    if a.grid is not b.grid and (a.grid.d, a.grid.L, a.grid.N) != (b.grid.d, b.grid.L, b.grid.N):
        raise GridError("wavefunctions live on different grids")


def _values_of(f):
    return f.values if isinstance(f, WaveFunction) else np.asarray(f)


def l2_inner_product(f, g, grid: SpatialGrid | None = None) -> complex:
    """Riemann-sum pairing (f, g) = dx^d * sum f * conj(g).

    Linear in the first slot, conjugate-linear in the second.
    """
    if isinstance(f, WaveFunction) and isinstance(g, WaveFunction) and f.grid != g.grid:
        raise GridError(f"inner product needs one grid, got {f.grid} and {g.grid}")
    if grid is None:
        grid = f.grid if isinstance(f, WaveFunction) else g.grid
    fv, gv = _values_of(f), _values_of(g)
    # vdot conjugates its first argument, so pass g there
    return complex(grid.dx**grid.d * np.vdot(gv, fv))


def l2_norm(f, grid: SpatialGrid | None = None) -> float:
    if grid is None:
        grid = f.grid
    fv = _values_of(f)
    return float(np.sqrt(grid.dx**grid.d) * np.linalg.norm(fv.ravel()))


def spectral_derivative(f, axis: int = 0, order: int = 1):
    """Differentiate along one axis with the exact Fourier multiplier (i xi)^order.

    Accepts a WaveFunction or a bare array (then a grid keyword is not needed
    because only the dual axis enters, which WaveFunction carries).
    """
    if isinstance(f, WaveFunction):
        out = spectral_derivative_array(f.values, f.grid, axis=axis, order=order)
        return f.with_values(out)
    raise GridError("spectral_derivative needs a WaveFunction; use spectral_derivative_array for raw arrays")


def spectral_derivative_array(values: np.ndarray, grid: SpatialGrid, axis: int = 0, order: int = 1) -> np.ndarray:
    if not 0 <= axis < grid.d:
        raise GridError(f"axis {axis} out of range for d={grid.d}")
    if order < 0:
        raise GridError("derivative order must be >= 0")
    if order == 0:
        return np.asarray(values, dtype=complex).copy()
    mult = (1j * grid.dual_axis) ** order
    shape = [1] * grid.d
    shape[axis] = grid.N
    spec = sfft.fft(values, axis=axis)
    spec *= mult.reshape(shape)
    return sfft.ifft(spec, axis=axis)


def multi_indices(d: int, max_total: int):
    """All derivative multi-indices alpha with |alpha| <= max_total."""
    if d == 1:
        return [(k,) for k in range(max_total + 1)]
    return [(i, j) for i in range(max_total + 1) for j in range(max_total + 1 - i)]


def apply_multi_derivative(values: np.ndarray, grid: SpatialGrid, alpha) -> np.ndarray:
    out = np.asarray(values, dtype=complex)
    for axis, order in enumerate(alpha):
        if order:
            out = spectral_derivative_array(out, grid, axis=axis, order=order)
    return out


def gaussian_packet(grid: SpatialGrid, center=0.0, width: float = 1.0, momentum=0.0) -> WaveFunction:
    """Normalized Gaussian wave packet; the default smooth test state."""
    centers = np.broadcast_to(np.atleast_1d(center), (grid.d,))
    momenta = np.broadcast_to(np.atleast_1d(momentum), (grid.d,))
    phase = np.zeros(grid.shape)
    r2 = np.zeros(grid.shape)
    for c, x0, k0 in zip(grid.mesh, centers, momenta):
        r2 = r2 + (c - x0) ** 2
        phase = phase + k0 * c
    vals = np.exp(-r2 / (2.0 * width**2) + 1j * phase)
    wf = WaveFunction(grid, vals)
    return wf / wf.norm()


__all__ = [
    "SpatialGrid",
    "WaveFunction",
    "make_grid",
    "l2_inner_product",
    "l2_norm",
    "spectral_derivative",
    "spectral_derivative_array",
    "multi_indices",
    "apply_multi_derivative",
    "gaussian_packet",
]
