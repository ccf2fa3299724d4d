"""Potential families with closed-form partials, and growth-bound validators.

A family packages the scalar potential V(t, x; rho), a vector potential
A(t, x; rho), the declared polynomial growth order M (V is sandwiched by
<x>^(2(M+1)) up to constants), the magnetic growth margin delta (|A| is
expected to stay under <x>^(M+1-delta)), the particle mass, and the open
parameter interval.  Potentials are expressions, not callbacks, so t- and
rho-partials exist in closed form and the assumption validators have
honest derivative access.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import expressions as ex
from .errors import FamilyError
from .grid import SpatialGrid

_STENCILS = {
    1: np.array([-0.5, 0.0, 0.5]),
    2: np.array([1.0, -2.0, 1.0]),
    3: np.array([-0.5, 1.0, 0.0, -1.0, 0.5]),
    4: np.array([1.0, -4.0, 6.0, -4.0, 1.0]),
}

# shell-fit tolerances for the empirical bound checks
SLOPE_TOL = 0.25
RATIO_FLOOR = 1e-6


def _as_expr(e):
    return e if isinstance(e, ex.Expr) else ex.parse(str(e))


@dataclass(frozen=True)
class PotentialFamily:
    """Electric + magnetic potential pair with declared growth data.

    Parameters
    ----------
    name : str
    v : str or Expr
        Scalar potential; variables t, rho and x (d=1) or x1, x2 (d=2).
    a : sequence of str or Expr
        Vector potential components, one per axis.
    growth_order : int
        The integer M >= 0 in the confinement sandwich
        C0 <x>^(2(M+1)) - C1 <= V <= C2 <x>^(2(M+1)).
    delta : float
        Declared margin in |A| <= C <x>^(M+1-delta); must be positive.
    mass : float
    rho_interval : (float, float) or None
        Open parameter interval; None marks a parameter-free family.
    dim : int
    """

    name: str
    v: ex.Expr
    a: tuple
    growth_order: int
    delta: float
    mass: float = 1.0
    rho_interval: tuple | None = None
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "v", _as_expr(self.v))
        object.__setattr__(self, "a", tuple(_as_expr(c) for c in self.a))
        if self.dim not in (1, 2):
            raise FamilyError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.a) != self.dim:
            raise FamilyError(
                f"vector potential needs {self.dim} components, got {len(self.a)}"
            )
        if self.growth_order < 0 or self.growth_order != int(self.growth_order):
            raise FamilyError("growth_order must be a nonnegative integer")
        if not (self.delta > 0):
            raise FamilyError("delta must be positive")
        if not (self.mass > 0):
            raise FamilyError("mass must be positive")
        if self.rho_interval is not None:
            lo, hi = self.rho_interval
            if not lo < hi:
                raise FamilyError("rho_interval must be a nonempty open interval")
        allowed = self._allowed_vars()
        for label, e in [("V", self.v)] + [(f"A{i+1}", c) for i, c in enumerate(self.a)]:
            extra = e.free_vars() - allowed
            if extra:
                raise FamilyError(f"{label} uses unknown variables {sorted(extra)}")

    def _allowed_vars(self):
        coords = {"x"} if self.dim == 1 else {"x1", "x2"}
        return coords | {"t", "rho"}

    @property
    def coord_names(self):
        return ("x",) if self.dim == 1 else ("x1", "x2")

    @cached_property
    def v_t(self):
        return self.v.diff("t")

    @cached_property
    def v_rho(self):
        return self.v.diff("rho")

    @cached_property
    def a_t(self):
        return tuple(c.diff("t") for c in self.a)

    @cached_property
    def a_rho(self):
        return tuple(c.diff("rho") for c in self.a)

    @cached_property
    def div_a(self):
        """sum_j d(A_j)/d(x_j), the divergence entering the symmetrized symbol."""
        total = ex.ZERO
        for c, name in zip(self.a, self.coord_names):
            total = ex.add(total, c.diff(name))
        return total

    @property
    def is_rho_dependent(self) -> bool:
        names = [self.v] + list(self.a)
        return any("rho" in e.free_vars() for e in names)

    @property
    def weight_exponent(self) -> float:
        """2(M+1): the polynomial degree the confinement sandwich refers to."""
        return 2.0 * (self.growth_order + 1)

    def check_rho(self, rho: float):
        if self.rho_interval is not None:
            lo, hi = self.rho_interval
            if not (lo < rho < hi):
                raise FamilyError(
                    f"rho={rho} outside the open interval ({lo}, {hi}) of family {self.name!r}"
                )

    def _env(self, t, rho, coords):
        env = {"t": t, "rho": rho}
        for name, arr in zip(self.coord_names, coords):
            env[name] = arr
        return env

    def potential_on(self, t: float, rho: float, coords) -> np.ndarray:
        return ex.evaluate(self.v, **self._env(t, rho, coords))

    def vector_potential_on(self, t: float, rho: float, coords):
        env = self._env(t, rho, coords)
        return tuple(ex.evaluate(c, **env) for c in self.a)


def eval_potential(fam: PotentialFamily, t: float, rho: float, grid: SpatialGrid):
    """Sample (V, A) on the grid; rejects non-finite values and bad rho."""
    fam.check_rho(rho)
    if grid.d != fam.dim:
        raise FamilyError(
            f"family {fam.name!r} is {fam.dim}-dimensional, grid is {grid.d}-dimensional"
        )
    shape = grid.shape
    env = fam._env(t, rho, grid.mesh)
    V = ex.evaluate(fam.v, out_shape=shape, **env)
    A = tuple(ex.evaluate(c, out_shape=shape, **env) for c in fam.a)
    return V, A


def partial_rho(fam: PotentialFamily, t: float, rho: float, grid: SpatialGrid):
    """Closed-form parameter partials (dV/drho, dA/drho) on the grid."""
    fam.check_rho(rho)
    if grid.d != fam.dim:
        raise FamilyError(
            f"family {fam.name!r} is {fam.dim}-dimensional, grid is {grid.d}-dimensional"
        )
    shape = grid.shape
    env = fam._env(t, rho, grid.mesh)
    dV = ex.evaluate(fam.v_rho, out_shape=shape, **env)
    dA = tuple(ex.evaluate(c, out_shape=shape, **env) for c in fam.a_rho)
    return dV, dA


def divergence_a(fam: PotentialFamily, t: float, rho: float, grid: SpatialGrid) -> np.ndarray:
    fam.check_rho(rho)
    env = fam._env(t, rho, grid.mesh)
    return ex.evaluate(fam.div_a, out_shape=grid.shape, **env)


@dataclass(frozen=True)
class InteractionFamily:
    """Pair interaction W(t, r; rho) of the relative coordinate r.

    growth_order is the M0 of the interacting system (the smaller of the
    particle orders); the order-zero bound carries the margin delta:
    |W| <= C <r>^(2(M0+1) - delta), derivatives lose the margin.
    """

    name: str
    w: ex.Expr
    growth_order: int
    delta: float
    rho_interval: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "w", _as_expr(self.w))
        if self.growth_order < 0:
            raise FamilyError("growth_order must be nonnegative")
        if not (self.delta > 0):
            raise FamilyError("delta must be positive")
        extra = self.w.free_vars() - {"t", "r", "rho"}
        if extra:
            raise FamilyError(f"W uses unknown variables {sorted(extra)}")

    @cached_property
    def w_t(self):
        return self.w.diff("t")

    @cached_property
    def w_rho(self):
        return self.w.diff("rho")

    def check_rho(self, rho: float):
        if self.rho_interval is not None:
            lo, hi = self.rho_interval
            if not (lo < rho < hi):
                raise FamilyError(
                    f"rho={rho} outside the open interval ({lo}, {hi}) of interaction {self.name!r}"
                )

    def on(self, t: float, rho: float, r: np.ndarray) -> np.ndarray:
        self.check_rho(rho)
        return ex.evaluate(self.w, out_shape=np.shape(r), t=t, rho=rho, r=r)

    def rho_partial_on(self, t: float, rho: float, r: np.ndarray) -> np.ndarray:
        self.check_rho(rho)
        return ex.evaluate(self.w_rho, out_shape=np.shape(r), t=t, rho=rho, r=r)


# ---------------------------------------------------------------------------
# builtin catalog


def _builtin_catalog():
    harmonic = PotentialFamily(
        name="harmonic",
        v="x^2 / 2",
        a=("0",),
        growth_order=0,
        delta=1.0,
    )
    confined_quartic = PotentialFamily(
        name="confined_quartic",
        v="(2 + sin(t)) * (1 + x^2)^2",
        a=("cos(t) * (1 + x^2)^(1/2)",),
        growth_order=1,
        delta=1.0,
    )
    parametric_quartic = PotentialFamily(
        name="parametric_quartic",
        # quartic term must dominate inside the box for the sandwich
        # certificate, hence the lower end of the interval
        v="x^2 / 2 + rho * x^4 / 4",
        a=("0",),
        growth_order=1,
        delta=1.0,
        rho_interval=(0.4, 8.0),
    )
    return {f.name: f for f in (harmonic, confined_quartic, parametric_quartic)}


BUILTIN_FAMILIES = _builtin_catalog()

BUILTIN_INTERACTIONS = {
    "soft_pair": InteractionFamily(
        name="soft_pair",
        w="rho * (1 + r^2)",
        growth_order=1,
        delta=2.0,
        rho_interval=(-4.0, 4.0),
    ),
}


def get_family(name: str) -> PotentialFamily:
    try:
        return BUILTIN_FAMILIES[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_FAMILIES))
        raise FamilyError(f"unknown family {name!r}; builtins: {known}") from None


def get_interaction(name: str) -> InteractionFamily:
    try:
        return BUILTIN_INTERACTIONS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_INTERACTIONS))
        raise FamilyError(f"unknown interaction {name!r}; builtins: {known}") from None


def ramped_quartic_family() -> PotentialFamily:
    """V = t*x^4 + x^2: quartic for t > 0 but only quadratic at t = 0.

    No single growth order fits it uniformly in time, so the validator is
    expected to fail on it whatever M is declared.  Kept out of the builtin
    catalog on purpose.
    """
    return PotentialFamily(
        name="ramped_quartic",
        v="t * x^4 + x^2",
        a=("0",),
        growth_order=1,
        delta=1.0,
    )


# ---------------------------------------------------------------------------
# assumption validation


@dataclass(frozen=True)
class BoundCheck:
    """Empirical verdict for one inequality |g| <= C * <x>^p (or the sandwich)."""

    label: str
    exponent: float
    constant: float
    slope: float
    slope_limit: float
    passed: bool
    witness: dict = field(default_factory=dict)

    def row(self):
        return {
            "check": self.label,
            "exponent": self.exponent,
            "constant": self.constant,
            "slope": self.slope,
            "slope_limit": self.slope_limit,
            "passed": self.passed,
            "witness_t": self.witness.get("t", np.nan),
            "witness_rho": self.witness.get("rho", np.nan),
            "witness_x": self.witness.get("x", np.nan),
        }


@dataclass(frozen=True)
class ValidationReport:
    family: str
    checks: tuple
    t_samples: tuple
    rho_samples: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def constant(self, label: str) -> float:
        for c in self.checks:
            if c.label == label:
                return c.constant
        raise KeyError(label)

    def rows(self):
        return [c.row() for c in self.checks]

    def summary(self) -> str:
        lines = [f"{self.family}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            lines.append(
                f"  [{mark}] {c.label:<24} C={c.constant:.6g} slope={c.slope:+.3f}"
            )
        return "\n".join(lines)


def _finite_difference(values: np.ndarray, order: int, h: float, axis: int = 0) -> np.ndarray:
    """Central difference along one axis; output is trimmed by the stencil radius."""
    # correlate does sum f[j+m] s[m], matching the left-to-right stencil layout
    stencil = _STENCILS[order] / h**order
    moved = np.moveaxis(values, axis, -1)
    out = np.apply_along_axis(lambda row: np.correlate(row, stencil, mode="valid"), -1, moved)
    return np.moveaxis(out, -1, axis)


def _fd_multi(values: np.ndarray, alpha, h: float):
    """Mixed central differences; returns (array, trim per axis)."""
    out = np.asarray(values, dtype=float)
    trims = []
    for axis, order in enumerate(alpha):
        if order == 0:
            trims.append(0)
            continue
        radius = len(_STENCILS[order]) // 2
        out = _finite_difference(out, order, h, axis=axis)
        trims.append(radius)
    return out, trims


def _trim_like(arr: np.ndarray, trims):
    slicer = tuple(slice(k, arr.shape[i] - k) if k else slice(None) for i, k in enumerate(trims))
    return arr[slicer]


def _shell_edges(bracket: np.ndarray):
    top = float(bracket.max())
    edges = [1.0]
    while edges[-1] < top:
        edges.append(edges[-1] * 2.0)
    return np.asarray(edges)


def _shell_reduce(bracket: np.ndarray, values: np.ndarray, how: str):
    """Per-dyadic-shell min or max of `values`, shells keyed by <x>."""
    edges = _shell_edges(bracket)
    centers, stats = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (bracket >= lo) & (bracket < hi)
        if not mask.any():
            continue
        block = values[mask]
        stats.append(block.min() if how == "min" else block.max())
        centers.append(np.sqrt(lo * hi))
    return np.asarray(centers), np.asarray(stats)


def _loglog_slope(centers, stats, tail: int | None = None):
    """Least-squares slope of log(stats) against log(centers)."""
    keep = stats > 0
    centers, stats = centers[keep], stats[keep]
    if tail is not None:
        centers, stats = centers[-tail:], stats[-tail:]
    if len(centers) < 2:
        return np.nan
    return float(np.polyfit(np.log(centers), np.log(stats), 1)[0])


def _argmax_witness(t, rho, coords, ratio):
    idx = np.unravel_index(np.argmax(ratio), ratio.shape)
    xs = [float(c[idx]) for c in coords]
    return {"t": t, "rho": rho, "x": xs[0] if len(xs) == 1 else tuple(xs)}


class _BoundAccumulator:
    """Tracks one inequality across (t, rho) samples."""

    def __init__(self, label: str, exponent: float, grow_limit: float = SLOPE_TOL):
        self.label = label
        self.exponent = exponent
        self.grow_limit = grow_limit
        self.constant = 0.0
        self.worst_slope = -np.inf
        self.witness = {}

    def update(self, t, rho, coords, bracket, values):
        ratio = np.abs(values) / bracket**self.exponent
        peak = float(ratio.max())
        if peak >= self.constant:
            self.constant = peak
            self.witness = _argmax_witness(t, rho, coords, ratio)
        if peak <= RATIO_FLOOR:
            return  # identically-small field: nothing to fit
        centers, stats = _shell_reduce(bracket, ratio, "max")
        # growth violations show up asymptotically, so fit the outer shells
        # (matching the lower-bound check) and skip the transition region
        slope = _loglog_slope(centers, stats, tail=3)
        if np.isfinite(slope) and slope > self.worst_slope:
            self.worst_slope = slope

    def finish(self) -> BoundCheck:
        slope = 0.0 if not np.isfinite(self.worst_slope) else self.worst_slope
        passed = np.isfinite(self.constant) and slope <= self.grow_limit
        return BoundCheck(
            label=self.label,
            exponent=self.exponent,
            constant=self.constant,
            slope=slope,
            slope_limit=self.grow_limit,
            passed=passed,
            witness=self.witness,
        )


class _LowerGrowthAccumulator:
    """Existence of C0 > 0, C1 >= 0 with V >= C0 <x>^p - C1, uniformly sampled.

    On a bounded sample the constants alone prove nothing (any C0 works with
    a huge C1), so the check is a decay test: the shell-minimum of
    V / <x>^p must not fall off toward the box edge.
    """

    def __init__(self, exponent: float, decay_limit: float = SLOPE_TOL):
        self.exponent = exponent
        self.decay_limit = decay_limit
        self.c0 = np.inf
        self.worst_slope = np.inf
        self.witness = {}
        self.min_outer_ratio = np.inf

    def update(self, t, rho, coords, bracket, values):
        ratio = values / bracket**self.exponent
        centers, stats = _shell_reduce(bracket, ratio, "min")
        outer = float(stats[-1]) if len(stats) else float(ratio.min())
        slope = _loglog_slope(centers, stats, tail=3)
        bad = outer < self.min_outer_ratio or (np.isfinite(slope) and slope < self.worst_slope)
        if outer < self.min_outer_ratio:
            self.min_outer_ratio = outer
        if np.isfinite(slope) and slope < self.worst_slope:
            self.worst_slope = slope
        if bad or not self.witness:
            idx = np.unravel_index(np.argmin(ratio), ratio.shape)
            xs = [float(c[idx]) for c in coords]
            self.witness = {"t": t, "rho": rho, "x": xs[0] if len(xs) == 1 else tuple(xs)}
        self.c0 = min(self.c0, outer)

    def finish(self) -> BoundCheck:
        slope = 0.0 if not np.isfinite(self.worst_slope) else self.worst_slope
        passed = self.min_outer_ratio > RATIO_FLOOR and slope >= -self.decay_limit
        return BoundCheck(
            label="growth_lower",
            exponent=self.exponent,
            constant=float(self.c0),
            slope=slope,
            slope_limit=-self.decay_limit,
            passed=passed,
            witness=self.witness,
        )


def _alpha_label(alpha):
    if len(alpha) == 1:
        return f"dx^{alpha[0]}"
    return "dx^" + "".join(str(k) for k in alpha)


def _default_t_samples():
    # covers a full period of the oscillatory builtins, includes t = 0
    return tuple(np.linspace(0.0, 2.0 * np.pi, 9))


def _default_rho_samples(interval):
    if interval is None:
        return (0.0,)
    lo, hi = interval
    return tuple(lo + np.array([0.25, 0.5, 0.75]) * (hi - lo))


def validate_assumption(
    fam: PotentialFamily,
    grid: SpatialGrid,
    t_samples=None,
    rho_samples=None,
    alpha_max: int = 4,
) -> ValidationReport:
    """Empirically check the growth sandwich and all derivative bounds.

    Every inequality |g| <= C <x>^p is scanned over (t, x, rho) samples;
    the reported constant is the max of |g| / <x>^p, and the check fails
    when that ratio grows toward the box edge (fitted dyadic-shell slope
    above SLOPE_TOL), i.e. when no constant can exist in the large-volume
    limit.  The lower confinement bound additionally requires the shell
    minimum of V / <x>^(2(M+1)) not to decay toward the edge.
    """
    if alpha_max < 1 or alpha_max > 4:
        raise FamilyError("alpha_max must be between 1 and 4")
    t_samples = tuple(t_samples) if t_samples is not None else _default_t_samples()
    if rho_samples is None:
        rho_samples = _default_rho_samples(fam.rho_interval)
    rho_samples = tuple(rho_samples)

    if fam.dim != grid.d:
        raise FamilyError("grid dimension does not match the family")
    coords = grid.mesh
    bracket = np.sqrt(1.0 + grid.radius_sq)
    h = grid.dx
    p_full = fam.weight_exponent  # 2(M+1)
    p_mag = fam.growth_order + 1.0  # M+1

    alphas = [a for a in _iter_alphas(fam.dim, alpha_max) if sum(a) >= 1]

    lower = _LowerGrowthAccumulator(p_full)
    upper = _BoundAccumulator("growth_upper", p_full)
    dv_checks = {a: _BoundAccumulator(f"V_{_alpha_label(a)}", p_full) for a in alphas}
    vt_checks = {
        a: _BoundAccumulator(f"Vt_{_alpha_label(a)}", p_full)
        for a in _iter_alphas(fam.dim, alpha_max)
    }
    a0_checks = [
        _BoundAccumulator(f"A{j+1}_size", p_mag - fam.delta) for j in range(fam.dim)
    ]
    da_checks = [
        {a: _BoundAccumulator(f"A{j+1}_{_alpha_label(a)}", p_mag) for a in alphas}
        for j in range(fam.dim)
    ]
    at_checks = [
        {
            a: _BoundAccumulator(f"A{j+1}t_{_alpha_label(a)}", p_mag)
            for a in _iter_alphas(fam.dim, alpha_max)
        }
        for j in range(fam.dim)
    ]
    if fam.is_rho_dependent:
        vr_checks = {
            a: _BoundAccumulator(f"Vrho_{_alpha_label(a)}", p_full)
            for a in _iter_alphas(fam.dim, alpha_max)
        }
        ar_checks = [
            {
                a: _BoundAccumulator(f"A{j+1}rho_{_alpha_label(a)}", p_mag)
                for a in _iter_alphas(fam.dim, alpha_max)
            }
            for j in range(fam.dim)
        ]
    else:
        vr_checks, ar_checks = {}, []

    for t in t_samples:
        for rho in rho_samples:
            env = fam._env(t, rho, coords)
            V = ex.evaluate(fam.v, out_shape=grid.shape, **env)
            Vt = ex.evaluate(fam.v_t, out_shape=grid.shape, **env)
            As = [ex.evaluate(c, out_shape=grid.shape, **env) for c in fam.a]
            Ats = [ex.evaluate(c, out_shape=grid.shape, **env) for c in fam.a_t]

            lower.update(t, rho, coords, bracket, V)
            upper.update(t, rho, coords, bracket, V)
            _update_fd_family(dv_checks, V, h, t, rho, coords, bracket)
            _update_fd_family(vt_checks, Vt, h, t, rho, coords, bracket)
            for j in range(fam.dim):
                a0_checks[j].update(t, rho, coords, bracket, As[j])
                _update_fd_family(da_checks[j], As[j], h, t, rho, coords, bracket)
                _update_fd_family(at_checks[j], Ats[j], h, t, rho, coords, bracket)
            if fam.is_rho_dependent:
                Vr = ex.evaluate(fam.v_rho, out_shape=grid.shape, **env)
                Ars = [ex.evaluate(c, out_shape=grid.shape, **env) for c in fam.a_rho]
                _update_fd_family(vr_checks, Vr, h, t, rho, coords, bracket)
                for j in range(fam.dim):
                    _update_fd_family(ar_checks[j], Ars[j], h, t, rho, coords, bracket)

    checks = [lower.finish(), upper.finish()]
    checks += [acc.finish() for acc in dv_checks.values()]
    checks += [acc.finish() for acc in vt_checks.values()]
    for j in range(fam.dim):
        checks.append(a0_checks[j].finish())
        checks += [acc.finish() for acc in da_checks[j].values()]
        checks += [acc.finish() for acc in at_checks[j].values()]
    checks += [acc.finish() for acc in vr_checks.values()]
    for group in ar_checks:
        checks += [acc.finish() for acc in group.values()]

    return ValidationReport(
        family=fam.name,
        checks=tuple(checks),
        t_samples=t_samples,
        rho_samples=rho_samples,
    )


def _iter_alphas(d: int, alpha_max: int):
    if d == 1:
        return [(k,) for k in range(alpha_max + 1)]
    return [
        (i, j)
        for i in range(alpha_max + 1)
        for j in range(alpha_max + 1 - i)
        if i <= 4 and j <= 4
    ]


def _update_fd_family(checks, values, h, t, rho, coords, bracket):
    for alpha, acc in checks.items():
        if sum(alpha) == 0:
            acc.update(t, rho, coords, bracket, values)
            continue
        deriv, trims = _fd_multi(values, alpha, h)
        coords_t = [_trim_like(c, trims) for c in coords]
        bracket_t = _trim_like(bracket, trims)
        acc.update(t, rho, coords_t, bracket_t, deriv)


def validate_interaction(
    inter: InteractionFamily,
    L: float,
    n: int = 512,
    t_samples=None,
    rho_samples=None,
    alpha_max: int = 2,
) -> ValidationReport:
    """Check the pair-interaction bounds on a relative-coordinate line.

    Order zero carries the margin: |W| <= C <r>^(2(M0+1)-delta); all
    r-derivatives and the t-/rho-partials only need the full exponent.
    """
    t_samples = tuple(t_samples) if t_samples is not None else _default_t_samples()
    if rho_samples is None:
        rho_samples = _default_rho_samples(inter.rho_interval)
    rho_samples = tuple(rho_samples)

    r = np.linspace(-2.0 * L, 2.0 * L, n)
    h = r[1] - r[0]
    bracket = np.sqrt(1.0 + r**2)
    p_full = 2.0 * (inter.growth_order + 1)

    size = _BoundAccumulator("W_size", p_full - inter.delta)
    dw = {
        (k,): _BoundAccumulator(f"W_dx^{k}", p_full) for k in range(1, alpha_max + 1)
    }
    wt = {
        (k,): _BoundAccumulator(f"Wt_dx^{k}", p_full) for k in range(alpha_max + 1)
    }
    wr = {
        (k,): _BoundAccumulator(f"Wrho_dx^{k}", p_full) for k in range(alpha_max + 1)
    }

    for t in t_samples:
        for rho in rho_samples:
            env = {"t": t, "rho": rho, "r": r}
            W = ex.evaluate(inter.w, out_shape=r.shape, **env)
            Wt = ex.evaluate(inter.w_t, out_shape=r.shape, **env)
            Wr = ex.evaluate(inter.w_rho, out_shape=r.shape, **env)
            size.update(t, rho, (r,), bracket, W)
            _update_fd_family(dw, W, h, t, rho, (r,), bracket)
            _update_fd_family(wt, Wt, h, t, rho, (r,), bracket)
            _update_fd_family(wr, Wr, h, t, rho, (r,), bracket)

    checks = [size.finish()]
    checks += [acc.finish() for acc in dw.values()]
    checks += [acc.finish() for acc in wt.values()]
    checks += [acc.finish() for acc in wr.values()]
    return ValidationReport(
        family=inter.name,
        checks=tuple(checks),
        t_samples=t_samples,
        rho_samples=rho_samples,
    )


__all__ = [
    "PotentialFamily",
    "InteractionFamily",
    "BoundCheck",
    "ValidationReport",
    "BUILTIN_FAMILIES",
    "BUILTIN_INTERACTIONS",
    "get_family",
    "get_interaction",
    "ramped_quartic_family",
    "eval_potential",
    "partial_rho",
    "divergence_a",
    "validate_assumption",
    "validate_interaction",
]
