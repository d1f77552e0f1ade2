"""Stopping rules for noisy data: a-priori iteration counts and the discrepancy principle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "NoisyData",
    "ScheduleParams",
    "stopping_index",
    "error_envelope",
    "DiscrepancyStop",
    "discrepancy_stop",
    "noise_study",
]


@dataclass(frozen=True)
class NoisyData:
    """Perturbed right-hand side with its noise level ``||f_delta - f|| <= delta``."""

    f_delta: np.ndarray
    delta: float

    def __post_init__(self):
        f = np.array(self.f_delta)
        if not np.all(np.isfinite(f)):
            raise ValueError("noisy data must be finite")
        if not self.delta >= 0:
            raise ValueError("delta must be non-negative")
        f.setflags(write=False)
        object.__setattr__(self, "f_delta", f)
        object.__setattr__(self, "delta", float(self.delta))


@dataclass(frozen=True)
class ScheduleParams:
    """Iteration count rule ``n(delta) = ceil(c * delta**(-gamma))``.

    ``0 < gamma < 1`` makes ``n(delta) -> inf`` and ``delta n(delta) -> 0``.
    """

    gamma: float = 0.5
    c: float = 1.0

    def __post_init__(self):
        if not (0 < self.gamma < 1):
            raise ValueError("gamma must lie in (0, 1)")
        if not self.c > 0:
            raise ValueError("c must be positive")


def stopping_index(delta: float, params: ScheduleParams | None = None) -> int:
    if not delta > 0:
        raise ValueError("delta must be positive; iterate to tolerance for exact data")
    params = params or ScheduleParams()
    # round before ceil so that e.g. 1e-4 ** -0.5 = 100.00000000000001 gives 100
    raw = round(params.c * delta ** (-params.gamma), 9)
    return max(1, math.ceil(raw))


def error_envelope(delta: float, n: int, a: float, eps_n: float) -> float:
    """``delta (n + 1) / (2 sqrt(a)) + eps_n``.

    Bounds the error after ``n`` updates of the fixed-point iteration run on
    noisy data; ``eps_n`` is the clean-data error after ``n`` updates.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    return delta * (n + 1) / (2.0 * math.sqrt(a)) + eps_n


class DiscrepancyStop(NamedTuple):
    index: int
    time: float | None
    reached: bool


def discrepancy_stop(trace, data: NoisyData, C: float = 1.5) -> DiscrepancyStop:
    """First sample whose residual is at most ``C * delta``.

    Works with any trace that has ``residuals`` (and, for DSM traces,
    ``times``).  If the threshold is never met the last index is returned
    with ``reached=False``.
    """
    if not C > 1:
        raise ValueError("discrepancy constant C must exceed 1")
    res = np.asarray(trace.residuals)
    if res.size == 0:
        raise ValueError("empty trace")
    hits = np.flatnonzero(res <= C * data.delta)
    reached = hits.size > 0
    idx = int(hits[0]) if reached else res.size - 1
    times = getattr(trace, "times", None)
    return DiscrepancyStop(idx, None if times is None else float(times[idx]), reached)


def noise_study(problem, deltas, a: float, params: ScheduleParams | None = None, seed: int = 0):
    """Run the fixed-point iteration on noisy data and stop after ``n(delta)`` updates.

    Returns one dict per ``delta`` with keys ``delta``, ``n_delta``,
    ``error_stopped`` and ``envelope``; the envelope uses the exact
    clean-data error from the spectral formula.
    """
    from . import oracle
    from .problems import add_noise
    from .solvers import fixed_point_iteration

    params = params or ScheduleParams()
    sd = oracle.decompose(problem.A)
    w = -np.asarray(problem.y)  # u1 = 0
    rows = []
    for delta in sorted(deltas, reverse=True):
        n = stopping_index(delta, params)
        data = add_noise(problem.f, delta, seed)
        trace = fixed_point_iteration(problem.A, a, data.f_delta, max_steps=n, tol=0.0,
                                      y_ref=problem.y)
        clean = oracle.spectral_iteration_error(sd, a, w, n)
        rows.append({
            "delta": float(delta),
            "n_delta": n,
            "error_stopped": float(trace.errors[n]),
            "envelope": error_envelope(delta, n, a, clean),
        })
    return rows
