"""Matrix-free operators: Hamiltonian, its mollification, weight powers, norms.

The Hamiltonian (1/2m)|p - A|^2 + V is applied in the expanded symmetric
three-term form

    p^2 f / 2m  -  (A . p f + p . (A f)) / 2m  +  (|A|^2 / 2m + V) f,

with p realized spectrally, which is Hermitian on the periodic grid in
exact arithmetic.  The mollified operator sandwiches H between a quantized
low-energy cutoff and its exact discrete adjoint, so it is Hermitian by
construction whatever the quantization error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import SolverError
from .grid import (
    SpatialGrid,
    WaveFunction,
    apply_multi_derivative,
    l2_norm,
    multi_indices,
)
from .potentials import PotentialFamily, eval_potential, partial_rho
from .symbols import CutoffSpec, adjoint_quantize_symbol, eval_symbol, quantize_symbol

_CACHE_SLOTS = 8


class HamiltonianHandle:
    """Bound (family, grid, rho) triple exposing matrix-free applications.

    Potential samples are cached per time value, since iterative solvers
    apply the operator many times at a frozen midpoint time.
    """

    def __init__(self, fam: PotentialFamily, grid: SpatialGrid, rho: float = 0.0):
        fam.check_rho(rho)
        self.fam = fam
        self.grid = grid
        self.rho = rho
        self.mass = fam.mass
        self.has_magnetic = any(len(c.free_vars()) > 0 or c.eval({}) != 0.0 for c in fam.a)
        self._pot_cache: dict = {}
        self._rho_cache: dict = {}
        self._chi_cache: dict = {}

    @property
    def kinetic_multiplier(self) -> np.ndarray:
        """|xi|^2 / 2m on the dual grid."""
        try:
            return self._kin
        except AttributeError:
            self._kin = self.grid.dual_radius_sq / (2.0 * self.mass)
            return self._kin

    def _potentials(self, t: float):
        hit = self._pot_cache.get(t)
        if hit is None:
            V, A = eval_potential(self.fam, t, self.rho, self.grid)
            a_sq = np.zeros(self.grid.shape)
            for comp in A:
                a_sq = a_sq + comp**2
            hit = (V, A, V + a_sq / (2.0 * self.mass))
            if len(self._pot_cache) >= _CACHE_SLOTS:
                self._pot_cache.clear()
            self._pot_cache[t] = hit
        return hit

    def potential_multiplier(self, t: float) -> np.ndarray:
        """V + |A|^2/2m: the x-diagonal part of the expanded form."""
        return self._potentials(t)[2]

    def apply(self, t: float, f: np.ndarray) -> np.ndarray:
        """H(t) f for a raw complex array."""
        grid = self.grid
        V, A, w = self._potentials(t)
        F = grid.fft(f)
        out = grid.ifft(self.kinetic_multiplier * F)
        out += w * f
        if self.has_magnetic:
            inv2m = 1.0 / (2.0 * self.mass)
            for axis in range(grid.d):
                shape = [1] * grid.d
                shape[axis] = grid.N
                xi = grid.dual_axis.reshape(shape)
                pf = grid.ifft(xi * F)  # p = -i d/dx is the real multiplier xi
                p_af = grid.ifft(xi * grid.fft(A[axis] * f))
                out -= inv2m * (A[axis] * pf + p_af)
        return out

    def apply_rho_derivative(self, t: float, f: np.ndarray) -> np.ndarray:
        """(dH/drho)(t) f: the operator driving the variational equation."""
        hit = self._rho_cache.get(t)
        if hit is None:
            dV, dA = partial_rho(self.fam, t, self.rho, self.grid)
            _, A, _ = self._potentials(t)
            cross = np.zeros(self.grid.shape)
            for a_c, da_c in zip(A, dA):
                cross = cross + a_c * da_c
            hit = (dV + cross / self.mass, dA)
            if len(self._rho_cache) >= _CACHE_SLOTS:
                self._rho_cache.clear()
            self._rho_cache[t] = hit
        mult, dA = hit
        out = mult * f
        if any(np.any(c != 0.0) for c in dA):
            grid = self.grid
            inv2m = 1.0 / (2.0 * self.mass)
            F = grid.fft(f)
            for axis in range(grid.d):
                shape = [1] * grid.d
                shape[axis] = grid.N
                xi = grid.dual_axis.reshape(shape)
                pf = grid.ifft(xi * F)
                p_af = grid.ifft(xi * grid.fft(dA[axis] * f))
                out -= inv2m * (dA[axis] * pf + p_af)
        return out

    def cutoff_field(self, t: float, cutoff: CutoffSpec):
        key = (t, cutoff.eps, cutoff.mu, cutoff.profile)
        hit = self._chi_cache.get(key)
        if hit is None:
            hit = eval_symbol(
                "chi_eps", self.fam, self.grid, t=t, rho=self.rho, cutoff=cutoff
            )
            if len(self._chi_cache) >= 4:
                self._chi_cache.clear()
            self._chi_cache[key] = hit
        return hit

    def apply_mollified(self, t: float, f: np.ndarray, cutoff: CutoffSpec) -> np.ndarray:
        """X* H X f with X the quantized cutoff at the same time."""
        X = self.cutoff_field(t, cutoff)
        xf = quantize_symbol(X, f)
        hxf = self.apply(t, xf)
        return adjoint_quantize_symbol(X, hxf)

    def norm_order(self, a: int) -> "NormOrder":
        """Weighted-norm order calibrated to this family's growth."""
        return NormOrder(a=a, growth_order=self.fam.growth_order, mass=self.mass)


def apply_hamiltonian(handle: HamiltonianHandle, t: float, f: WaveFunction) -> WaveFunction:
    return f.with_values(handle.apply(t, f.values))


def apply_mollified(
    handle: HamiltonianHandle, cutoff: CutoffSpec, t: float, f: WaveFunction
) -> WaveFunction:
    return f.with_values(handle.apply_mollified(t, f.values, cutoff))


def apply_rho_derivative(handle: HamiltonianHandle, t: float, f: WaveFunction) -> WaveFunction:
    return f.with_values(handle.apply_rho_derivative(t, f.values))


# ---------------------------------------------------------------------------
# weight operator and norms


@dataclass(frozen=True)
class NormOrder:
    """Order data of the polynomially weighted norm scale.

    a is the (integer, possibly negative) order; growth_order is the M of
    the family the scale is calibrated to; mu_prime shifts the weight
    symbol so its quantization stays positive definite (resolved per grid
    when left at None).
    """

    a: int
    growth_order: int
    mass: float = 1.0
    mu_prime: float | None = None

    def __post_init__(self):
        if self.a != int(self.a):
            raise ValueError("order a must be an integer")
        if abs(self.a) > 3:
            raise ValueError(f"orders are capped at |a| <= 3, got {self.a}")
        if self.growth_order < 0:
            raise ValueError("growth_order must be >= 0")
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def weight_exponent(self) -> float:
        return 2.0 * abs(self.a) * (self.growth_order + 1)

    def norm(self, f: WaveFunction) -> float:
        return weighted_norm(self, f)


def resolve_mu_prime(order: NormOrder, grid: SpatialGrid) -> float:
    if order.mu_prime is not None:
        return order.mu_prime
    core = grid.dual_radius_sq / (2.0 * order.mass) + grid.bracket_weight(
        2.0 * (order.growth_order + 1)
    )
    # scanned minimum plus one keeps the quantized operator safely definite
    return 1.0 + max(0.0, 1.0 - float(core.min()))


def _lambda_m_parts(order: NormOrder, grid: SpatialGrid):
    mu_p = resolve_mu_prime(order, grid)
    kin = grid.dual_radius_sq / (2.0 * order.mass)
    weight = grid.bracket_weight(2.0 * (order.growth_order + 1))
    return mu_p, kin, weight


def _lambda_m_apply(mu_p, kin, weight, grid, f):
    return mu_p * f + grid.ifft(kin * grid.fft(f)) + weight * f


def solve_hermitian_cg(apply_op, b, tol: float = 1e-12, maxiter: int = 20000, x0=None):
    """Conjugate gradients for a Hermitian positive-definite operator.

    Plain complex CG on raw arrays; tolerance is relative to ||b||.
    """
    x = np.zeros_like(b) if x0 is None else x0.astype(complex).copy()
    r = b - apply_op(x) if x0 is not None else b.copy()
    p = r.copy()
    rs = np.vdot(r, r).real
    b_norm = np.linalg.norm(b.ravel())
    if b_norm == 0.0:
        return np.zeros_like(b), 0
    threshold = (tol * b_norm) ** 2
    for k in range(maxiter):
        if rs <= threshold:
            return x, k
        ap = apply_op(p)
        alpha = rs / np.vdot(p, ap).real
        x += alpha * p
        r -= alpha * ap
        rs_new = np.vdot(r, r).real
        p = r + (rs_new / rs) * p
        rs = rs_new
    if rs <= threshold:
        return x, maxiter
    raise SolverError(
        f"CG did not reach tol={tol:g} in {maxiter} iterations "
        f"(residual {np.sqrt(rs) / b_norm:.3e})"
    )


def apply_lambdaM_power(order: NormOrder, f: WaveFunction, cg_tol: float = 1e-12) -> WaveFunction:
    """Integer power of the weight operator mu' + p^2/2m + <x>^(2(M+1)).

    Negative powers invert by conjugate gradients on the (Hermitian,
    positive-definite) operator itself.
    """
    grid = f.grid
    mu_p, kin, weight = _lambda_m_parts(order, grid)
    vals = f.values.astype(complex)
    n = int(order.a)
    if n == 0:
        return f.with_values(vals)
    op = lambda g: _lambda_m_apply(mu_p, kin, weight, grid, g)
    if n > 0:
        for _ in range(n):
            vals = op(vals)
        return f.with_values(vals)
    for _ in range(-n):
        vals, _ = solve_hermitian_cg(op, vals, tol=cg_tol)
    return f.with_values(vals)


def weighted_norm(order: NormOrder, f: WaveFunction) -> float:
    """Polynomially weighted Sobolev-type norm of order a.

    a = 0 is the plain L2 norm.  For a >= 1 the norm is the sum of all
    derivative norms up to order 2a plus the norm of <x>^(2a(M+1)) f.
    Negative orders are measured through the inverse weight operator:
    ||Lambda_M^a f||.
    """
    grid = f.grid
    a = int(order.a)
    if a == 0:
        return l2_norm(f)
    if a < 0:
        return l2_norm(apply_lambdaM_power(order, f))
    total = 0.0
    for alpha in multi_indices(grid.d, 2 * a):
        total += l2_norm(apply_multi_derivative(f.values, grid, alpha), grid)
    total += l2_norm(grid.bracket_weight(order.weight_exponent) * f.values, grid)
    return float(total)


__all__ = [
    "HamiltonianHandle",
    "NormOrder",
    "apply_hamiltonian",
    "apply_mollified",
    "apply_rho_derivative",
    "apply_lambdaM_power",
    "weighted_norm",
    "resolve_mu_prime",
    "solve_hermitian_cg",
]
