"""Time steppers for the confined Schrodinger flow.

Two schemes share the record-keeping harness:

* crank_nicolson_midpoint: the Cayley step
  (I + i dt/2 H(t_mid)) u_next = (I - i dt/2 H(t_mid)) u, solved
  iteratively; exactly norm-preserving up to the solver tolerance.
* lanczos_expmid: Krylov approximation of exp(-i dt H(t_mid)) u.

The inner solve runs GMRES with a split preconditioner built from the
exact inverses of the kinetic-only and potential-only Cayley factors
(each diagonal in one basis).  A normal-equation CG fallback is kept for
operators the preconditioner does not fit (e.g. mollified flows, which
are bounded anyway).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConfigError, SolverError
from .grid import WaveFunction, l2_norm
from .operators import solve_hermitian_cg
from .symbols import CutoffSpec

SCHEMES = ("crank_nicolson_midpoint", "lanczos_expmid")


@dataclass(frozen=True)
class PropagatorConfig:
    """Stepper parameters.

    t_final must be an integer number of steps; eps switches the run to the
    mollified Hamiltonian with the given cutoff strength.
    """

    scheme: str = "crank_nicolson_midpoint"
    dt: float = 1e-3
    t_final: float = 1.0
    t0: float = 0.0
    solver_tol: float = 1e-11
    max_solver_iter: int = 4000
    krylov_dim: int = 24
    eps: float | None = None
    cutoff_mu: float = 0.0
    cutoff_profile: str = "gaussian"
    boundary_tol: float = 1e-6
    boundary_fraction: float = 0.1
    save_every: int = 1
    keep_states: bool = True
    use_preconditioner: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; known: {SCHEMES}")
        if not (self.dt > 0):
            raise ConfigError("dt must be positive")
        span = self.t_final - self.t0
        if span <= 0:
            raise ConfigError("t_final must exceed t0")
        n = span / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigError(
                f"t_final - t0 = {span} is not an integer multiple of dt = {self.dt}"
            )
        if self.save_every < 1:
            raise ConfigError("save_every must be >= 1")
        if self.eps is not None and not (0 < self.eps <= 1):
            raise ConfigError("eps must lie in (0, 1]")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_final - self.t0) / self.dt))

    def cutoff(self) -> CutoffSpec | None:
        if self.eps is None:
            return None
        return CutoffSpec(eps=self.eps, mu=self.cutoff_mu, profile=self.cutoff_profile)


@dataclass
class StepReport:
    iterations: int = 0
    residual: float = 0.0


class _Operator:
    """The time-frozen operator a single step works with."""

    def __init__(self, handle, cfg: PropagatorConfig):
        self.handle = handle
        self.grid = handle.grid
        self.cutoff = cfg.cutoff()
        self.precondition = cfg.use_preconditioner and self.cutoff is None

    def apply(self, t, f):
        if self.cutoff is None:
            return self.handle.apply(t, f)
        return self.handle.apply_mollified(t, f, self.cutoff)


def _cayley_solve(op: _Operator, t_mid: float, tau: float, rhs: np.ndarray,
                  cfg: PropagatorConfig, guess: np.ndarray | None) -> tuple:
    """Solve (I + i tau Op(t_mid)) x = rhs."""
    grid = op.grid
    shape = grid.shape
    size = grid.size

    def a_matvec(v):
        v = v.reshape(shape)
        return (v + 1j * tau * op.apply(t_mid, v)).ravel()

    b = rhs.ravel()
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros(shape, dtype=complex), StepReport()

    if op.precondition:
        kin = op.handle.kinetic_multiplier
        pot = op.handle.potential_multiplier(t_mid)
        inv_kin = 1.0 / (1.0 + 1j * tau * kin)
        inv_pot = 1.0 / (1.0 + 1j * tau * pot)

        def m_matvec(v):
            v = v.reshape(shape)
            v = grid.ifft(inv_kin * grid.fft(inv_pot * v))
            return v.ravel()

        M = LinearOperator((size, size), matvec=m_matvec, dtype=complex)
    else:
        M = None

    A = LinearOperator((size, size), matvec=a_matvec, dtype=complex)
    x0 = None if guess is None else guess.ravel()
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    x, info = gmres(
        A,
        b,
        x0=x0,
        rtol=cfg.solver_tol,
        atol=0.0,
        restart=40,
        maxiter=cfg.max_solver_iter,
        M=M,
        callback=count,
        callback_type="legacy",
    )
    true_res = np.linalg.norm(a_matvec(x) - b) / b_norm
    if info != 0 or true_res > 50 * cfg.solver_tol:
        # normal-equation CG fallback: A*A = I + tau^2 Op^2 is Hermitian PD
        def n_matvec(v):
            w = op.apply(t_mid, v)
            return v + tau * tau * op.apply(t_mid, w)

        rhs_n = rhs - 1j * tau * op.apply(t_mid, rhs)
        x_arr, cg_iters = solve_hermitian_cg(
            n_matvec, rhs_n, tol=cfg.solver_tol, maxiter=10 * cfg.max_solver_iter,
            x0=None if guess is None else guess,
        )
        x = x_arr.ravel()
        iters += cg_iters
        true_res = np.linalg.norm(a_matvec(x) - b) / b_norm
        if true_res > 100 * cfg.solver_tol:
            raise SolverError(
                f"Cayley solve stalled at relative residual {true_res:.3e} "
                f"(target {cfg.solver_tol:g}) at t_mid={t_mid}"
            )
    return x.reshape(shape), StepReport(iterations=iters, residual=float(true_res))


def _lanczos_expm(op: _Operator, t_mid: float, dt: float, u: np.ndarray, m: int):
    """Krylov exp(-i dt Op) u with full reorthogonalization."""
    norm_u = np.linalg.norm(u.ravel())
    if norm_u == 0.0:
        return u.copy(), StepReport()
    basis = [u / norm_u]
    alphas, betas = [], []
    for j in range(m):
        w = op.apply(t_mid, basis[j])
        a = np.vdot(basis[j].ravel(), w.ravel()).real
        alphas.append(a)
        w = w - a * basis[j]
        if j > 0:
            w = w - betas[-1] * basis[j - 1]
        # full reorthogonalization; Krylov dims stay small
        for v in basis:
            w = w - np.vdot(v.ravel(), w.ravel()) * v
        beta = np.linalg.norm(w.ravel())
        if beta < 1e-13 * max(1.0, abs(a)) or j == m - 1:
            break
        betas.append(beta)
        basis.append(w / beta)
    theta, S = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
    coeff = S @ (np.exp(-1j * dt * theta) * S[0, :]) * norm_u
    out = np.zeros_like(u)
    for c, v in zip(coeff, basis):
        out = out + c * v
    return out, StepReport(iterations=len(basis), residual=0.0)


def step(cfg: PropagatorConfig, handle, t: float, u: WaveFunction,
         guess: np.ndarray | None = None) -> WaveFunction:
    """Advance one step from time t; the operator is frozen at t + dt/2."""
    op = _Operator(handle, cfg)
    new_vals, _ = _advance(op, cfg, t, u.values, guess=guess)
    return u.with_values(new_vals)


def _advance(op: _Operator, cfg: PropagatorConfig, t: float, u: np.ndarray,
             source_mid: np.ndarray | None = None, guess=None):
    t_mid = t + 0.5 * cfg.dt
    tau = 0.5 * cfg.dt
    if cfg.scheme == "lanczos_expmid":
        if source_mid is not None:
            raise ConfigError("inhomogeneous runs need the crank_nicolson_midpoint scheme")
        return _lanczos_expm(op, t_mid, cfg.dt, u, cfg.krylov_dim)
    if source_mid is None:
        # u_next = 2 (I + i tau H)^{-1} u - u
        v, rep = _cayley_solve(op, t_mid, tau, u, cfg, guess)
        return 2.0 * v - u, rep
    rhs = u - 1j * tau * op.apply(t_mid, u) - 1j * cfg.dt * source_mid
    return _cayley_solve(op, t_mid, tau, rhs, cfg, guess if guess is not None else u)


@dataclass
class PropagationRun:
    """Recorded trajectory: norms, boundary mass, solver effort, states."""

    grid: object
    cfg: PropagatorConfig
    norm_orders: tuple
    times: np.ndarray = None
    data: dict = field(default_factory=dict)
    states: list = field(default_factory=list)
    final: WaveFunction = None
    flags: list = field(default_factory=list)
    wall_time: float = 0.0

    def norm_series(self, a: int) -> np.ndarray:
        key = "l2" if a == 0 else f"norm_a{a}"
        return self.data[key]

    @property
    def max_norm_drift(self) -> float:
        l2 = self.data["l2"]
        return float(np.max(np.abs(l2 - l2[0])))

    @property
    def max_boundary_mass(self) -> float:
        return float(np.max(self.data["boundary_mass"]))

    def state_at(self, index: int) -> WaveFunction:
        t, vals = self.states[index]
        return WaveFunction(self.grid, vals)

    def to_csv(self, path):
        cols = ["t", "l2"]
        cols += [f"norm_a{o.a}" for o in self.norm_orders]
        cols += ["boundary_mass", "solver_iterations", "solver_residual"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(len(self.times)):
                row = [self.data[c][i] if c != "t" else self.times[i] for c in cols]
                fh.write(",".join(_fmt(v) for v in row) + "\n")

    def summary(self) -> str:
        return (
            f"{self.cfg.scheme}: {self.cfg.n_steps} steps to t={self.cfg.t_final}, "
            f"norm drift {self.max_norm_drift:.3e}, "
            f"boundary mass {self.max_boundary_mass:.3e}"
        )


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


class _Recorder:
    def __init__(self, run: PropagationRun, handle, boundary_mask):
        self.run = run
        self.handle = handle
        self.mask = boundary_mask
        self.rows = []

    def record(self, t, u_vals, rep: StepReport):
        wf = WaveFunction(self.run.grid, u_vals)
        total = np.sum(np.abs(u_vals) ** 2)
        edge = float(np.sum(np.abs(u_vals[self.mask]) ** 2) / total) if total > 0 else 0.0
        row = {
            "t": t,
            "l2": l2_norm(wf),
            "boundary_mass": edge,
            "solver_iterations": rep.iterations,
            "solver_residual": rep.residual,
        }
        for order in self.run.norm_orders:
            row[f"norm_a{order.a}"] = order.norm(wf)
        self.rows.append(row)
        if self.run.cfg.keep_states:
            self.run.states.append((t, u_vals.copy()))
        if edge > self.run.cfg.boundary_tol:
            flag = f"boundary mass {edge:.3e} above {self.run.cfg.boundary_tol:g} at t={t:.6g}"
            self.run.flags.append(flag)

    def finalize(self):
        run = self.run
        run.times = np.array([r["t"] for r in self.rows])
        keys = [k for k in self.rows[0] if k != "t"]
        run.data = {k: np.array([r[k] for r in self.rows]) for k in keys}


def propagate(cfg: PropagatorConfig, handle, u0: WaveFunction,
              norm_orders=()) -> PropagationRun:
    """Run the homogeneous flow and record the requested norms."""
    return _propagate_impl(cfg, handle, u0, norm_orders, source=None)


def propagate_inhomogeneous(cfg: PropagatorConfig, handle, u0: WaveFunction,
                            source, norm_orders=()) -> PropagationRun:
    """Run i du/dt = H(t) u + f(t) with the midpoint-sampled source f."""
    if cfg.scheme != "crank_nicolson_midpoint":
        raise ConfigError("inhomogeneous runs need the crank_nicolson_midpoint scheme")
    return _propagate_impl(cfg, handle, u0, norm_orders, source=source)


def _propagate_impl(cfg, handle, u0, norm_orders, source):
    if u0.grid is not handle.grid and u0.grid.shape != handle.grid.shape:
        raise ConfigError("initial state and handle live on different grids")
    norm_orders = tuple(
        o if hasattr(o, "a") else handle.norm_order(int(o)) for o in norm_orders
    )
    op = _Operator(handle, cfg)
    run = PropagationRun(grid=handle.grid, cfg=cfg, norm_orders=norm_orders)
    rec = _Recorder(run, handle, handle.grid.boundary_mask(cfg.boundary_fraction))

    started = time.perf_counter()
    u = u0.values.astype(complex)
    t = cfg.t0
    rec.record(t, u, StepReport())
    for n in range(cfg.n_steps):
        t = cfg.t0 + n * cfg.dt
        src_mid = None
        if source is not None:
            sv = source(t + 0.5 * cfg.dt)
            src_mid = sv.values if isinstance(sv, WaveFunction) else np.asarray(sv)
        guess = u if cfg.scheme == "crank_nicolson_midpoint" else None
        u, rep = _advance(op, cfg, t, u, source_mid=src_mid, guess=guess)
        t = cfg.t0 + (n + 1) * cfg.dt
        if (n + 1) % cfg.save_every == 0 or n + 1 == cfg.n_steps:
            rec.record(t, u, rep)
    rec.finalize()
    run.final = WaveFunction(handle.grid, u)
    run.wall_time = time.perf_counter() - started
    return run


@dataclass(frozen=True)
class EnergyFit:
    """Smallest C with ||u(t)||_a <= e^{C t} ||u(0)||_a along the run."""

    a: int
    growth_rate: float
    passed: bool


def energy_estimate_check(run: PropagationRun, a: int = 0) -> EnergyFit:
    times = run.times
    series = run.norm_series(a)
    base = series[0]
    if base <= 0:
        raise ValueError("initial norm vanishes; no growth estimate possible")
    mask = times > run.cfg.t0
    rates = np.log(series[mask] / base) / (times[mask] - run.cfg.t0)
    c = float(np.max(rates)) if mask.any() else 0.0
    return EnergyFit(a=a, growth_rate=c, passed=bool(np.isfinite(c)))


def refine_dt(cfg: PropagatorConfig, factor: int = 2) -> PropagatorConfig:
    return replace(cfg, dt=cfg.dt / factor)


__all__ = [
    "PropagatorConfig",
    "PropagationRun",
    "StepReport",
    "EnergyFit",
    "SCHEMES",
    "step",
    "propagate",
    "propagate_inhomogeneous",
    "energy_estimate_check",
    "refine_dt",
]
