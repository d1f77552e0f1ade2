"""Solvers for ``Au = f`` built on shifted normal equations.

* :func:`tikhonov_minimizer` and :func:`tikhonov_minimizer_via_Q` -- the
  minimizer of ``||Au - g||^2 + a||u||^2`` by two independent routes.
* :func:`fixed_point_iteration` -- ``u <- a T_a^{-1} u + T_a^{-1} A* f``.
* :func:`selfadjoint_iteration` -- ``u <- ia (A + ia)^{-1} u + (A + ia)^{-1} f``
  for Hermitian ``A``.
* :func:`dsm_solve` and :func:`dsm_duhamel` -- the continuous-time flow
  ``u' = -u + T_{eps(t)}^{-1} A* f`` by RK4 and by its variation-of-constants
  formula.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from . import oracle
from .operators import (
    RegParam,
    RegularizedFactor,
    ResolventFactor,
    ShiftedFactor,
    ShiftMode,
    as_matrix,
    check_hermitian,
    cogram,
    gram,
)

__all__ = [
    "NumericalError",
    "IterationTrace",
    "DsmSchedule",
    "DsmTrace",
    "tikhonov_minimizer",
    "tikhonov_minimizer_via_Q",
    "stationarity_residual",
    "tikhonov_functional",
    "fixed_point_iteration",
    "selfadjoint_iteration",
    "dsm_solve",
    "duhamel_integral",
    "dsm_duhamel",
]

log = logging.getLogger(__name__)

ORTHOGONALITY_RTOL = 1e-8


class NumericalError(ArithmeticError):
    """A solver produced non-finite values or could not proceed."""


def _write_rows(path, header, rows):
    if hasattr(path, "write"):
        writer = csv.writer(path)
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(fh, header, rows)


def _fmt(x):
    return "" if x is None else repr(float(x))


@dataclass
class IterationTrace:
    """Recorded iterates of a stationary iteration started at ``u1``.

    ``indices[k]`` is the number of updates behind ``iterates[k]``; by
    default every step is recorded, so ``indices`` is ``0, 1, 2, ...``.
    ``errors`` is empty unless a reference solution was supplied.
    """

    iterates: np.ndarray
    residuals: np.ndarray
    errors: np.ndarray = field(default_factory=lambda: np.empty(0))
    converged: bool = False
    indices: np.ndarray | None = None

    def __post_init__(self):
        if len(self.iterates) != len(self.residuals):
            raise ValueError("iterates and residuals differ in length")
        if len(self.errors) not in (0, len(self.iterates)):
            raise ValueError("errors must be empty or match the iterates")
        if self.indices is None:
            self.indices = np.arange(len(self.iterates))
        if len(self.indices) != len(self.iterates):
            raise ValueError("indices must match the iterates")

    @property
    def steps(self) -> int:
        return int(self.indices[-1])

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def realize(self):
        """Real part of the final iterate and the norm of its imaginary part."""
        u = self.final
        return np.real(u).copy(), float(np.linalg.norm(np.imag(u)))

    def to_csv(self, path):
        errs = self.errors if len(self.errors) else [None] * len(self.residuals)
        rows = [(int(k), _fmt(e), _fmt(r))
                for k, e, r in zip(self.indices, errs, self.residuals)]
        _write_rows(path, ("step_or_time", "error", "residual"), rows)


@dataclass(frozen=True)
class DsmSchedule:
    """Regularization path ``eps(t) = eps0 (1 + t)^(-p)``.

    ``0 < p <= 1`` keeps ``eps`` decreasing to zero with a divergent integral.
    """

    eps0: float = 1.0
    p: float = 0.5

    def __post_init__(self):
        if not (self.eps0 > 0 and np.isfinite(self.eps0)):
            raise ValueError("eps0 must be positive")
        if not (0 < self.p <= 1):
            raise ValueError("p must lie in (0, 1]")

    def __call__(self, t):
        if isinstance(t, (float, int)):
            return self.eps0 * (1.0 + t) ** (-self.p)
        return self.eps0 * (1.0 + np.asarray(t, dtype=float)) ** (-self.p)


@dataclass
class DsmTrace:
    times: np.ndarray
    states: np.ndarray
    residuals: np.ndarray
    errors: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.residuals)):
            raise ValueError("times, states and residuals differ in length")
        if len(self.times) == 0 or self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: float) -> np.ndarray:
        """State at the sample nearest to ``t``."""
        return self.states[int(np.argmin(np.abs(self.times - t)))]

    def to_csv(self, path):
        errs = self.errors if len(self.errors) else [None] * len(self.residuals)
        rows = [(_fmt(t), _fmt(e), _fmt(r)) for t, e, r in zip(self.times, errs, self.residuals)]
        _write_rows(path, ("step_or_time", "error", "residual"), rows)


def _real_param(p) -> RegParam:
    p = p if isinstance(p, RegParam) else RegParam(p)
    if p.mode is not ShiftMode.REAL:
        raise ValueError("this solver needs a real shift")
    return p


def _vec(v, n, name):
    v = np.asarray(v)
    if v.shape != (n,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({n},)")
    return v


def tikhonov_functional(A, a, g, u) -> float:
    """``||Au - g||^2 + a ||u||^2``."""
    M = as_matrix(A)
    return float(np.linalg.norm(M @ u - g) ** 2 + a * np.linalg.norm(u) ** 2)


def stationarity_residual(A, a, g, z) -> float:
    """``||(A*A + aI) z - A* g||`` evaluated without forming ``A*A``."""
    M = as_matrix(A)
    return float(np.linalg.norm(M.conj().T @ (M @ z - g) + a * z))


def tikhonov_minimizer(A, p, g) -> np.ndarray:
    """Unique minimizer ``(A*A + aI)^{-1} A* g`` of ``||Au - g||^2 + a||u||^2``."""
    M = as_matrix(A)
    p = _real_param(p)
    g = _vec(g, M.shape[0], "g")
    z = RegularizedFactor(M, p).smooth(g)
    scale = np.linalg.norm(M.conj().T @ g)
    res = stationarity_residual(M, p.a, g, z)
    if res > 1e-10 * scale:
        log.warning("Tikhonov stationarity residual %.3e exceeds 1e-10 * ||A*g|| = %.3e",
                    res, 1e-10 * scale)
    return z


def tikhonov_minimizer_via_Q(A, p, g) -> np.ndarray:
    """Same minimizer computed as ``A* (AA* + aI)^{-1} g``."""
    M = as_matrix(A)
    p = _real_param(p)
    g = _vec(g, M.shape[0], "g")
    return M.conj().T @ ShiftedFactor(cogram(M), p).solve(g)


def _check_orthogonal(M, u1, tau=oracle.DEFAULT_TAU):
    leak = oracle.nullspace_component(M, u1, tau)
    if leak > ORTHOGONALITY_RTOL * max(1.0, np.linalg.norm(u1)):
        raise ValueError(f"initial guess has a null-space component of norm {leak:.3e}; "
                         "project it with oracle.project_off_nullspace first")


def _run(step, M, f, u1, max_steps, tol, y_ref, record_every):
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    recorded, indices = [u1], [0]
    converged = False
    u = u1
    k = 0
    for k in range(1, max_steps + 1):
        u_next = step(u)
        if tol > 0 and np.linalg.norm(u_next - u) <= tol * max(1.0, np.linalg.norm(u_next)):
            converged = True
        u = u_next
        if converged or k % record_every == 0 or k == max_steps:
            if not np.all(np.isfinite(u)):
                raise NumericalError(f"iteration produced non-finite values at step {k}")
            recorded.append(u)
            indices.append(k)
        if converged:
            break
    if tol > 0 and not converged:
        log.warning("no convergence to tol=%g within %d steps", tol, max_steps)
    iterates = np.array(recorded)
    residuals = np.linalg.norm(iterates @ M.T - f, axis=1)
    errors = np.empty(0) if y_ref is None else np.linalg.norm(iterates - y_ref, axis=1)
    return IterationTrace(iterates, residuals, errors, converged, np.array(indices))


def fixed_point_iteration(A, p, f, u1=None, max_steps: int = 1000, tol: float = 1e-12,
                          y_ref=None, record_every: int = 1) -> IterationTrace:
    """Iterate ``u_{n+1} = a T_a^{-1} u_n + T_a^{-1} A* f`` with ``T_a = A*A + aI``.

    For solvable ``f = Ay`` the iterates converge to the minimal-norm
    solution whenever ``u1`` is orthogonal to ``N(A)``.

    Parameters
    ----------
    A : array_like or LinearOperator
    p : RegParam or float
        Real shift ``a > 0``.
    f : (m,) array_like
        Data, exact or noisy.
    u1 : (n,) array_like, optional
        Starting point, orthogonal to ``N(A)``.  Defaults to zero.
    max_steps : int
        Upper bound on the number of updates.
    tol : float
        Stop once ``||u_{n+1} - u_n|| <= tol * max(1, ||u_{n+1}||)``.  With
        ``tol=0`` exactly ``max_steps`` updates are made.
    y_ref : (n,) array_like, optional
        Reference solution; fills ``trace.errors``.
    record_every : int
        Keep every ``record_every``-th iterate (plus the first and last).
    """
    M = as_matrix(A)
    p = _real_param(p)
    m, n = M.shape
    f = _vec(f, m, "f")
    u1 = np.zeros(n, dtype=np.result_type(M, f)) if u1 is None else _vec(u1, n, "u1")
    _check_orthogonal(M, u1)
    fac = RegularizedFactor(M, p)
    forcing = fac.smooth(f)
    return _run(lambda u: fac.contract(u) + forcing, M, f, u1, max_steps, tol, y_ref,
                record_every)


def selfadjoint_iteration(A, a: float, f, u1=None, max_steps: int = 1000, tol: float = 1e-12,
                          y_ref=None, record_every: int = 1) -> IterationTrace:
    """Iterate ``u_{n+1} = ia (A + iaI)^{-1} u_n + (A + iaI)^{-1} f`` for Hermitian ``A``.

    Iterates are complex.  For real solvable data the imaginary part dies
    out along with the error; :meth:`IterationTrace.realize` reports both.
    Arguments are as in :func:`fixed_point_iteration`.
    """
    M = check_hermitian(A)
    n = M.shape[0]
    f = _vec(f, n, "f")
    u1 = np.zeros(n, dtype=complex) if u1 is None else _vec(u1, n, "u1").astype(complex)
    _check_orthogonal(M, u1)
    fac = ResolventFactor(M, a)
    forcing = fac.solve(f)
    ia = 1j * fac.a
    return _run(lambda u: ia * fac.solve(u) + forcing, M, f, u1, max_steps, tol, y_ref,
                record_every)


class _DsmForcing:
    """``t -> (A*A + eps(t) I)^{-1} A* f`` for scalar ``t`` or a batch of times."""

    def __init__(self, M, f, schedule):
        self.T = gram(M).entries
        self.rhs = M.conj().T @ f
        self.schedule = schedule
        self.dtype = np.result_type(self.T, self.rhs)

    def __call__(self, t):
        eps = float(self.schedule(float(t)))
        return ShiftedFactor(self.T, RegParam(eps), check=False).solve(self.rhs)

    def batch(self, ts) -> np.ndarray:
        # one stacked solve per batch keeps the per-time Python overhead out of the RK loop
        eps = self.schedule(np.asarray(ts, dtype=float))
        n = self.T.shape[0]
        shifted = np.broadcast_to(self.T, (eps.size, n, n)).copy()
        idx = np.arange(n)
        shifted[:, idx, idx] += eps[:, None]
        rhs = np.broadcast_to(self.rhs.astype(self.dtype), (eps.size, n))[..., None]
        return np.linalg.solve(shifted, rhs)[..., 0]


def dsm_solve(A, f, schedule: DsmSchedule | None = None, u0=None, t_max: float = 50.0,
              h: float = 0.01, y_ref=None, record_every: int = 1,
              stop_residual: float | None = None, chunk: int = 2048) -> DsmTrace:
    """Integrate ``u' = -u + (A*A + eps(t) I)^{-1} A* f`` with fixed-step RK4.

    The forcing term does not depend on ``u``, so it is needed at ``t``,
    ``t + h/2`` and ``t + h`` only, and it is computed ahead of the time
    loop in blocks of ``chunk`` steps.  Because the right-hand side is
    ``-u`` plus forcing, the four RK4 stages collapse to one fixed linear
    combination of ``u`` and the three forcing values.

    Parameters
    ----------
    A, f : array_like
        Operator and (possibly noisy) data.
    schedule : DsmSchedule, optional
        Regularization path; defaults to ``eps0=1, p=0.5``.
    u0 : (n,) array_like, optional
        Initial state, zero by default.  Need not be orthogonal to ``N(A)``.
    t_max : float
        Final time.  ``h`` is shrunk slightly if it does not divide ``t_max``.
    h : float
        Step size, at most 0.1.
    y_ref : (n,) array_like, optional
        Reference solution; fills ``trace.errors``.
    record_every : int
        Sample every ``record_every``-th step (the first and last are always kept).
    stop_residual : float, optional
        Halt at the first step whose residual ``||Au - f||`` is at most this
        value.  That step is always recorded.
    """
    M = as_matrix(A)
    schedule = schedule or DsmSchedule()
    m, n = M.shape
    f = _vec(f, m, "f")
    if not (0 < h <= 0.1):
        raise ValueError("step h must lie in (0, 0.1]")
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    forcing = _DsmForcing(M, f, schedule)
    u = np.zeros(n) if u0 is None else _vec(u0, n, "u0")
    u = np.array(u, dtype=np.result_type(u, forcing.dtype, M, f))
    nsteps = int(np.ceil(t_max / h - 1e-9))
    h = t_max / nsteps

    # k1 = g0 - u, k2 = gm - u - h k1/2, k3 = gm - u - h k2/2, k4 = g1 - u - h k3
    c_u = (((h - 4) * h + 12) * h - 24) * h / 24 + 1
    c_0 = -h * (((h - 2) * h + 4) * h - 4) / 24
    c_m = h * ((h - 4) * h + 8) / 12
    c_1 = h / 6

    steps, states = [0], [u]
    k0 = 0
    stopped = False
    while k0 < nsteps and not stopped:
        count = min(chunk, nsteps - k0)
        g = forcing.batch(h * (k0 + 0.5 * np.arange(2 * count + 1)))
        drive = c_0 * g[0:-1:2] + c_m * g[1::2] + c_1 * g[2::2]
        block = np.empty((count, n), dtype=u.dtype)
        for j in range(count):
            u = c_u * u + drive[j]
            block[j] = u
        if not np.all(np.isfinite(block)):
            raise NumericalError(f"DSM state became non-finite before t={(k0 + count) * h:g}")
        keep = np.arange(k0 + 1, k0 + count + 1)
        if stop_residual is not None:
            hits = np.flatnonzero(np.linalg.norm(block @ M.T - f, axis=1) <= stop_residual)
            if hits.size:
                stopped = True
                count = int(hits[0]) + 1
                block, keep = block[:count], keep[:count]
        mask = (keep % record_every == 0) | (keep == nsteps)
        mask[-1] |= stopped
        steps.extend(keep[mask])
        states.extend(block[mask])
        k0 += count
        u = block[-1]
    times = h * np.array(steps, dtype=float)
    states = np.array(states)
    residuals = np.linalg.norm(states @ M.T - f, axis=1)
    errors = np.empty(0) if y_ref is None else np.linalg.norm(states - y_ref, axis=1)
    return DsmTrace(times, states, residuals, errors)


def duhamel_integral(func, t: float, quad_points: int = 2001, vectorized: bool = False):
    """Composite trapezoid rule for ``int_0^t exp(-(t - s)) func(s) ds``.

    ``func`` maps a scalar ``s`` to a scalar or a vector; with
    ``vectorized=True`` it instead takes the whole node array and returns
    one row per node.
    """
    if quad_points < 2:
        raise ValueError("need at least two quadrature nodes")
    if t == 0:
        return 0.0 * np.asarray(func(0.0))
    s = np.linspace(0.0, t, quad_points)
    w = np.full(quad_points, s[1] - s[0])
    w[0] = w[-1] = 0.5 * (s[1] - s[0])
    w *= np.exp(-(t - s))
    values = np.asarray(func(s)) if vectorized else np.array([func(si) for si in s])
    return np.tensordot(w, values, axes=1)


def dsm_duhamel(A, f, schedule: DsmSchedule | None = None, u0=None, t: float = 1.0,
                quad_points: int = 2001) -> np.ndarray:
    """Closed-form DSM state ``u0 e^{-t} + int_0^t e^{-(t-s)} T_{eps(s)}^{-1} A* f ds``."""
    M = as_matrix(A)
    schedule = schedule or DsmSchedule()
    m, n = M.shape
    f = _vec(f, m, "f")
    u0 = np.zeros(n) if u0 is None else _vec(u0, n, "u0")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return np.array(u0, dtype=np.result_type(u0, M, f))
    forcing = _DsmForcing(M, f, schedule)
    return u0 * np.exp(-t) + duhamel_integral(forcing.batch, t, quad_points, vectorized=True)
