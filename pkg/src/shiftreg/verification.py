"""Named property checks with measured margins.

Each ``check_*`` function runs one property suite over seeded inputs and
returns a :class:`CheckResult`.  :func:`run_suite` runs the quick suite
used by ``shiftreg verify``; :data:`FULL_SUITE` adds the slower solver
convergence checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import oracle, problems
from .operators import adjoint, as_matrix, gram
from .solvers import (
    DsmSchedule,
    dsm_duhamel,
    dsm_solve,
    duhamel_integral,
    fixed_point_iteration,
    selfadjoint_iteration,
    stationarity_residual,
    tikhonov_minimizer,
    tikhonov_minimizer_via_Q,
)
from .stopping import ScheduleParams, discrepancy_stop, noise_study

__all__ = [
    "CheckResult",
    "random_matrix",
    "functional_increment",
    "check_smoothing_bound",
    "check_route_identity",
    "check_minimizer_optimality",
    "check_fixed_point_convergence",
    "check_stable_approximation",
    "check_selfadjoint_iteration",
    "check_dsm_limit",
    "check_dsm_discrepancy",
    "check_duhamel_quadrature",
    "check_smoothed_identity_limit",
    "check_normal_equations",
    "QUICK_SUITE",
    "FULL_SUITE",
    "run_suite",
    "format_report",
]

A_GRID = (1e-6, 1e-4, 1e-2, 1.0, 10.0)


@dataclass
class CheckResult:
    """Outcome of one named check.

    ``margin`` is the worst observed value of the checked quantity divided
    by its tolerance, so ``margin <= 1`` means pass.
    """

    name: str
    passed: bool
    margin: float
    detail: str = ""
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name:<24} margin={self.margin:.3e} ({self.seconds:.2f}s) {self.detail}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_matrix(rng, m, n, singular_values) -> np.ndarray:
    """``U diag(s) V^T`` with Haar-like orthonormal factors."""
    s = np.asarray(singular_values, dtype=float)
    r = s.size
    if r == 0:
        return np.zeros((m, n))
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    V, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return (U * s) @ V.T


def functional_increment(A, a, g, z, h) -> float:
    """``F(z + h) - F(z)`` for ``F(u) = ||Au - g||^2 + a||u||^2``.

    Written as differences of squares, ``<Ah, 2r + Ah> + a <h, 2z + h>``
    with ``r = Az - g``, so the increment does not drown in the rounding
    of ``F`` itself.
    """
    M = as_matrix(A)
    r = M @ z - g
    Ah = M @ h
    return float(np.real(np.vdot(Ah, 2 * r + Ah)) + a * np.real(np.vdot(h, 2 * z + h)))


@_timed
def check_smoothing_bound(n_random: int = 200, seed: int = 0,
                         derivative_sizes=(8, 16, 32, 64, 128, 256, 512, 1024),
                         a_values=A_GRID) -> CheckResult:
    """Smoothing norm ``max s/(s^2+a)`` never exceeds ``1/(2 sqrt(a))``; planted ``s = sqrt(a)`` attains it."""
    rng = np.random.default_rng(seed)
    worst_bound = 0.0     # max of exact/bound - 1, must stay <= 1e-12
    worst_attain = 0.0    # max |exact/bound - 1| with a planted value, must stay <= 1e-10
    spectra = []
    for _ in range(n_random):
        m, n = rng.integers(1, 31, size=2)
        r = int(rng.integers(1, min(m, n) + 1))
        cond = 10.0 ** rng.uniform(0, 8)
        top = 10.0 ** rng.uniform(-2, 6)
        s = np.sort(top * cond ** -rng.uniform(0, 1, r))[::-1]
        s[0] = top
        s[-1] = top / cond if r > 1 else top
        spectra.append(oracle.decompose(random_matrix(rng, m, n, s)))
        for a in a_values:
            s_planted = s.copy()
            s_planted[rng.integers(r)] = math.sqrt(a)
            planted = random_matrix(rng, m, n, np.sort(s_planted)[::-1])
            ratio = oracle.smoothing_norm_exact(planted, a) * 2 * math.sqrt(a)
            worst_attain = max(worst_attain, abs(ratio - 1))
            worst_bound = max(worst_bound, ratio - 1)
    for n in derivative_sizes:
        spectra.append(oracle.decompose(problems.discretized_derivative(n).A))
    for sd in spectra:
        for a in a_values:
            ratio = oracle.smoothing_norm_exact(sd, a) * 2 * math.sqrt(a)
            worst_bound = max(worst_bound, ratio - 1)
    margin = max(worst_bound / 1e-12, worst_attain / 1e-10)
    return CheckResult(
        "theorem2_bound", margin <= 1, margin,
        f"max excess {worst_bound:.2e} (tol 1e-12), planted attainment gap {worst_attain:.2e} (tol 1e-10)",
    )


@_timed
def check_route_identity(n_cases: int = 100, seed: int = 1) -> CheckResult:
    """``(A*A + aI)^{-1} A* g`` equals ``A* (AA* + aI)^{-1} g``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_cases):
        m, n = rng.integers(1, 13, size=2)
        r = k % (min(m, n) + 1)
        s = 10.0 ** rng.uniform(-3, 0, r)
        A = random_matrix(rng, m, n, np.sort(s)[::-1])
        a = 10.0 ** rng.uniform(-2, 1)
        g = rng.standard_normal(m) * 10.0 ** rng.uniform(-2, 2)
        diff = np.linalg.norm(tikhonov_minimizer(A, a, g) - tikhonov_minimizer_via_Q(A, a, g))
        worst = max(worst, diff / (1e-9 * (1 + np.linalg.norm(g))))
    return CheckResult("eq18_identity", worst <= 1, worst,
                       f"{n_cases} cases, ranks 0..min(m,n) covered")


@_timed
def check_minimizer_optimality(n_problems: int = 20, n_perturb: int = 50, seed: int = 2) -> CheckResult:
    """The Tikhonov minimizer beats every perturbation by at least ``||Ah||^2 + a||h||^2``."""
    rng = np.random.default_rng(seed)
    worst_gap = 0.0
    worst_stat = 0.0
    for k in range(n_problems):
        m, n = rng.integers(2, 16, size=2)
        r = int(rng.integers(1, min(m, n) + 1))
        P = problems.rank_deficient(int(m), int(n), r, seed=1000 + k)
        g = problems.add_noise(P.f, 10.0 ** rng.uniform(-4, -1), seed=k).f_delta
        a = 10.0 ** rng.uniform(-3, 1)
        A = P.A.entries
        z = tikhonov_minimizer(A, a, g)
        Atg = np.linalg.norm(A.T @ g)
        worst_stat = max(worst_stat, stationarity_residual(A, a, g, z) / (1e-10 * Atg))
        for _ in range(n_perturb):
            h = rng.standard_normal(n)
            h *= 10.0 ** rng.uniform(-3, 0) / np.linalg.norm(h)
            quad = np.linalg.norm(A @ h) ** 2 + a * np.linalg.norm(h) ** 2
            inc = functional_increment(A, a, g, z, h)
            # inc >= (1 - 1e-10) quad  <=>  (quad - inc) <= 1e-10 quad
            worst_gap = max(worst_gap, (quad - inc) / (1e-10 * quad))
    margin = max(worst_gap, worst_stat)
    return CheckResult("theorem3_optimality", margin <= 1, margin,
                       f"increment margin {worst_gap:.2e}, stationarity margin {worst_stat:.2e}")


@_timed
def check_fixed_point_convergence(seed: int = 0, a: float = 0.1, samples: int = 1000) -> CheckResult:
    """Fixed-point iteration error follows the spectral law and reaches ``1e-6 ||y||`` within ``n*`` steps.

    The spectral law is checked as ``|e_n - p_n| <= 1e-10 ||u1 - y||`` at
    every recorded step.
    """
    P = problems.rank_deficient(20, 15, 8, seed)
    sd = oracle.decompose(P.A)
    s_min = sd.singular_values[-1]
    n_star = math.ceil(math.log(1e-6) / math.log(a / (a + s_min**2)))
    trace = fixed_point_iteration(P.A, a, P.f, max_steps=n_star, tol=0.0, y_ref=P.y,
                                  record_every=max(1, n_star // samples))
    w = -np.asarray(P.y)
    w_norm = np.linalg.norm(w)
    pred = oracle.spectral_iteration_error(sd, a, w, trace.indices)
    law = np.max(np.abs(trace.errors - pred)) / (1e-10 * w_norm)
    monotone = bool(np.all(np.diff(trace.errors) <= 1e-15 * w_norm))
    reach = trace.errors[-1] / (1e-6 * np.linalg.norm(P.y))
    margin = max(law, reach)
    ok = margin <= 1 and monotone
    return CheckResult(
        "theorem1_convergence", ok, margin,
        f"n*={n_star}, spectral-law margin {law:.2e}, final error {trace.errors[-1]:.2e}, "
        f"monotone={monotone}",
        data={"trace": trace, "prediction": pred, "n_star": n_star},
    )


@_timed
def check_stable_approximation(seed: int = 0) -> CheckResult:
    """Stopped noisy iteration: error shrinks with delta and stays under the envelope."""
    P = problems.diagonal([2.0, 1.0, 0.0])
    rows = noise_study(P, [1e-1, 1e-2, 1e-3, 1e-4], a=0.5,
                       params=ScheduleParams(gamma=0.5, c=1.0), seed=seed)
    errs = np.array([r["error_stopped"] for r in rows])
    env = np.array([r["envelope"] for r in rows])
    decreasing = bool(np.all(np.diff(errs) < 0))
    third = errs[-1] / (errs[0] / 3)
    dominated = float(np.max(errs / env))
    margin = max(third, dominated)
    ok = decreasing and third < 1 and dominated <= 1
    return CheckResult("stable_approximation", ok, margin,
                       f"errors {np.array2string(errs, precision=3)}, strictly decreasing={decreasing}",
                       data={"rows": rows})


@_timed
def check_selfadjoint_iteration(seed: int = 0, a: float = 0.5) -> CheckResult:
    """Per-eigenvalue contraction ``a/sqrt(lam^2 + a^2)`` and convergence to a real limit."""
    P = problems.symmetric_singular(12, seed)
    A = P.A.entries
    y = np.asarray(P.y)
    lam, W = np.linalg.eigh(A)
    trace = selfadjoint_iteration(A, a, P.f, max_steps=20000, tol=1e-13, y_ref=y)
    coords = (trace.iterates[:11] - y) @ W
    live = np.abs(lam) > 1e-12
    ratios = np.abs(coords[1:, live]) / np.abs(coords[:-1, live])
    expected = a / np.sqrt(lam[live] ** 2 + a**2)
    factor_err = np.max(np.abs(ratios - expected) / expected)
    real, imag_norm = trace.realize()
    ynorm = np.linalg.norm(y)
    real_err = np.linalg.norm(real - y)
    margin = max(factor_err / 1e-10, imag_norm / (1e-8 * ynorm), real_err / (1e-6 * ynorm))
    return CheckResult(
        "selfadjoint_iteration", margin <= 1, margin,
        f"factor error {factor_err:.2e}, imag {imag_norm:.2e}, real error {real_err:.2e}, "
        f"steps {trace.steps}",
    )


@_timed
def check_dsm_limit(seed: int = 0) -> CheckResult:
    """DSM state at ``t_max`` within 3x of transient plus smoothing error; RK4 matches the Duhamel formula."""
    P = problems.rank_deficient(12, 10, 6, seed)
    sched = DsmSchedule(eps0=1.0, p=0.5)
    t_max = 50.0
    trace = dsm_solve(P.A, P.f, sched, t_max=t_max, h=0.01, y_ref=P.y)
    ynorm = np.linalg.norm(P.y)
    bound = 3 * (ynorm * math.exp(-t_max)
                 + oracle.smoothed_identity_error(P.A, float(sched(t_max)), P.y))
    limit_margin = trace.errors[-1] / bound
    u10 = trace.states[np.argmin(np.abs(trace.times - 10.0))]
    duhamel = dsm_duhamel(P.A, P.f, sched, t=10.0, quad_points=5001)
    agree = np.linalg.norm(u10 - duhamel) / 1e-6
    margin = max(limit_margin, agree)
    return CheckResult("dsm_limit", margin <= 1, margin,
                       f"error {trace.errors[-1]:.3e} vs bound {bound:.3e}, "
                       f"RK4/Duhamel gap {agree * 1e-6:.2e}")


@_timed
def check_dsm_discrepancy(seed: int = 0, C: float = 1.5, noise_seed: int = 0) -> CheckResult:
    """Discrepancy-stopped DSM: stopping time exists, stopped error shrinks with delta.

    Uses ``eps(t) = 1/(1+t)`` and ``h = 0.1`` so that the discrepancy level is
    reached at a reachable time.
    """
    P = problems.rank_deficient(12, 10, 6, seed)
    sched = DsmSchedule(eps0=1.0, p=1.0)
    errors, stops = [], []
    for delta in (1e-2, 1e-3, 1e-4):
        data = problems.add_noise(P.f, delta, noise_seed)
        trace = dsm_solve(P.A, data.f_delta, sched, t_max=1e6, h=0.1, y_ref=P.y,
                          record_every=1000, stop_residual=C * delta)
        stop = discrepancy_stop(trace, data, C)
        stops.append(stop)
        errors.append(trace.errors[stop.index])
    errors = np.array(errors)
    reached = all(s.reached for s in stops)
    nonincreasing = bool(np.all(np.diff(errors) <= 0))
    ok = reached and nonincreasing
    times = ", ".join(f"{s.time:.4g}" for s in stops)
    return CheckResult("dsm_discrepancy", ok, 0.0 if ok else float("inf"),
                       f"t_delta = {times}; stopped errors {np.array2string(errors, precision=3)}")


@_timed
def check_duhamel_quadrature(t: float = 20.0, quad_points: int = 4001) -> CheckResult:
    """``int_0^t e^{-(t-s)} arctan(s) ds`` is within ``2e-3`` of ``pi/2``."""
    val = duhamel_integral(np.arctan, t, quad_points, vectorized=True)
    gap = abs(float(val) - math.pi / 2)
    return CheckResult("lemma2_quadrature", gap <= 2e-3, gap / 2e-3,
                       f"integral {float(val):.6f}, |integral - pi/2| = {gap:.3e} (tol 2e-3)")


@_timed
def check_smoothed_identity_limit() -> CheckResult:
    """``||(A*A + eps)^{-1} A*A y - y||`` decreases to ``1e-6 ||y||`` for ``y`` off ``N`` and equals ``||y||`` on ``N``."""
    eps_values = 10.0 ** -np.arange(1, 13)
    cases = [
        ([1.0, 0.0], [1.0, 0.0], [0.0, 1.0]),
        ([2.0, 1.0, 0.5, 0.0], [1.0, -1.0, 2.0, 0.0], [0.0, 0.0, 0.0, 3.0]),
        ([1.0, 0.1, 0.01, 0.0, 0.0], [1.0, 1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, -2.0]),
    ]
    worst_final, worst_null = 0.0, 0.0
    monotone = True
    for sig, y_off, y_null in cases:
        A = np.diag(sig)
        errs = np.array([oracle.smoothed_identity_error(A, e, y_off) for e in eps_values])
        monotone &= bool(np.all(np.diff(errs) < 0))
        worst_final = max(worst_final, errs[-1] / (1e-6 * np.linalg.norm(y_off)))
        nulls = np.array([oracle.smoothed_identity_error(A, e, y_null) for e in eps_values])
        worst_null = max(worst_null, np.max(np.abs(nulls - np.linalg.norm(y_null))) / 1e-12)
    margin = max(worst_final, worst_null)
    return CheckResult("lemma3_limit", monotone and margin <= 1, margin,
                       f"monotone={monotone}, final margin {worst_final:.2e}, null margin {worst_null:.2e}")


@_timed
def check_normal_equations(n_problems: int = 50, seed: int = 3) -> CheckResult:
    """Minimal-norm solutions of ``Au = f`` and ``A*Au = A*f`` coincide on consistent data."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_problems):
        m, n = rng.integers(1, 21, size=2)
        r = int(rng.integers(1, min(m, n) + 1))
        P = problems.rank_deficient(int(m), int(n), r, seed=2000 + k)
        y1, cons = oracle.minimal_norm_solution(P.A, P.f)
        y2, _ = oracle.minimal_norm_solution(gram(P.A), adjoint(P.A).entries @ P.f)
        worst = max(worst, np.linalg.norm(y1 - y2) / (1e-9 * np.linalg.norm(y1)))
    return CheckResult("lemma1_equiv", worst <= 1, worst, f"{n_problems} consistent problems")


QUICK_SUITE = (
    check_smoothing_bound,
    check_route_identity,
    check_minimizer_optimality,
    check_duhamel_quadrature,
    check_smoothed_identity_limit,
    check_normal_equations,
)

FULL_SUITE = QUICK_SUITE + (
    check_fixed_point_convergence,
    check_stable_approximation,
    check_selfadjoint_iteration,
    check_dsm_limit,
    check_dsm_discrepancy,
)


def run_suite(checks=QUICK_SUITE) -> list[CheckResult]:
    return [check() for check in checks]


def format_report(results) -> str:
    lines = [r.line() for r in results]
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} checks passed")
    return "\n".join(lines)
