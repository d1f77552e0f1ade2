"""SVD ground truth: minimal-norm solutions and closed-form spectral errors.

Everything in this module is computed from the singular value
decomposition of ``A`` and is kept independent of the factorizations in
:mod:`shiftreg.operators`, so it can be used to check them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .operators import RegParam, ShiftMode, as_matrix

__all__ = [
    "DEFAULT_TAU",
    "SpectralDecomposition",
    "decompose",
    "minimal_norm_solution",
    "project_off_nullspace",
    "nullspace_component",
    "spectral_iteration_error",
    "smoothed_identity_error",
    "smoothing_norm_exact",
    "brute_force_minimal_norm",
]

DEFAULT_TAU = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Thin SVD of ``A`` truncated to the numerical rank.

    Attributes
    ----------
    left_vectors : (m, r) ndarray
    singular_values : (r,) ndarray
        Positive and non-increasing.
    right_vectors : (n, r) ndarray
    tau : float
        Relative threshold used to decide the rank.
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray
    tau: float = DEFAULT_TAU

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    def coefficients(self, v) -> np.ndarray:
        """Coordinates ``<v_i, v>`` along the kept right singular vectors."""
        return self.right_vectors.conj().T @ np.asarray(v)

    def range_projection(self, v) -> np.ndarray:
        return self.right_vectors @ self.coefficients(v)

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.conj().T


def decompose(A, tau: float = DEFAULT_TAU) -> SpectralDecomposition:
    """Thin SVD keeping singular values ``s_i > tau * s_1``.

    A zero matrix yields rank 0.
    """
    M = as_matrix(A)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > tau * s[0]))
    return SpectralDecomposition(U[:, :r], s[:r], Vh[:r].conj().T, tau)


def _spectrum(A, tau) -> SpectralDecomposition:
    return A if isinstance(A, SpectralDecomposition) else decompose(A, tau)


def minimal_norm_solution(A, f, tau: float = DEFAULT_TAU):
    """Pseudoinverse solution and its consistency.

    Returns
    -------
    y : ndarray
        ``sum_i <u_i, f> / s_i v_i``; orthogonal to ``N(A)``.
    consistency : float
        ``||A y - f||``; zero (to rounding) exactly when ``Au = f`` is solvable.
    """
    M = as_matrix(A)
    f = np.asarray(f)
    sd = decompose(M, tau)
    y = sd.right_vectors @ ((sd.left_vectors.conj().T @ f) / sd.singular_values)
    if sd.rank == 0:
        y = np.zeros(M.shape[1], dtype=np.result_type(M, f))
    return y, float(np.linalg.norm(M @ y - f))


def project_off_nullspace(A, v, tau: float = DEFAULT_TAU) -> np.ndarray:
    """``v - P_N v``."""
    return _spectrum(A, tau).range_projection(v)


def nullspace_component(A, v, tau: float = DEFAULT_TAU) -> float:
    """``||P_N v||``."""
    v = np.asarray(v)
    return float(np.linalg.norm(v - project_off_nullspace(A, v, tau)))


def spectral_iteration_error(A, a, w, n, tau: float = DEFAULT_TAU):
    """Exact norm of ``B^n w`` with ``B = a (A*A + aI)^{-1}``.

    ``w`` must be orthogonal to ``N(A)``: otherwise its null-space part is
    never damped and there is no convergence to speak of.  ``n`` may be an
    integer or an array of integers.
    """
    sd = _spectrum(A, tau)
    a = float(a.a if isinstance(a, RegParam) else a)
    w = np.asarray(w)
    wnorm = np.linalg.norm(w)
    c = sd.coefficients(w)
    leak = np.linalg.norm(w - sd.right_vectors @ c)
    coef = np.abs(c) ** 2
    if leak > 1e-8 * wnorm:
        raise ValueError(f"w has a null-space component of norm {leak:.3e}")
    factors = a / (a + sd.singular_values**2)
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("step count must be non-negative")
    powers = factors[None, :] ** (2 * n_arr.reshape(-1, 1))
    out = np.sqrt(powers @ coef)
    # n = 0 is ||w|| itself, not the range part of it
    out = np.where(n_arr.reshape(-1) == 0, wnorm, out)
    return float(out[0]) if n_arr.ndim == 0 else out.reshape(n_arr.shape)


def smoothed_identity_error(A, eps: float, y, tau: float = DEFAULT_TAU) -> float:
    """``||(A*A + eps I)^{-1} A*A y - y||`` from the spectrum.

    Tends to ``||P_N y||`` as ``eps -> 0``.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    sd = _spectrum(A, tau)
    y = np.asarray(y)
    c = sd.coefficients(y)
    null_part = np.linalg.norm(y - sd.right_vectors @ c)
    damp = eps / (sd.singular_values**2 + eps)
    return float(np.sqrt(np.sum((damp * np.abs(c)) ** 2) + null_part**2))


def smoothing_norm_exact(A, p, tau: float = DEFAULT_TAU) -> float:
    """Operator norm of ``g -> (A*A + shift I)^{-1} A* g``.

    ``max s/(s^2 + a)`` for a real shift and ``max s/sqrt(s^4 + a^2)`` for
    an imaginary one.
    """
    p = p if isinstance(p, RegParam) else RegParam(p)
    s = _spectrum(A, tau).singular_values
    if s.size == 0:
        return 0.0
    if p.mode is ShiftMode.REAL:
        return float(np.max(s / (s * s + p.a)))
    return float(np.max(s / np.hypot(s * s, p.a)))


def brute_force_minimal_norm(A, f, grid_points: int = 201):
    """Minimal-norm least-squares solution by grid search over ``N(A)``.

    Independent check of :func:`minimal_norm_solution` for tiny problems
    with ``dim N(A) <= 2``.  A least-squares particular solution is shifted
    by every grid combination of null-space basis vectors and the shortest
    candidate is returned together with the grid spacing.
    """
    M = as_matrix(A)
    f = np.asarray(f)
    particular, *_ = la.lstsq(M, f, lapack_driver="gelsy")
    basis = la.null_space(M)
    k = basis.shape[1]
    if k == 0:
        return particular, 0.0
    if k > 2:
        raise ValueError(f"null space of dimension {k} is too large for grid search")
    radius = max(np.linalg.norm(particular), 1e-300)
    grid = np.linspace(-radius, radius, grid_points)
    best, best_norm = particular, np.inf
    for combo in itertools.product(grid, repeat=k):
        cand = particular + basis @ np.array(combo)
        nrm = np.linalg.norm(cand)
        if nrm < best_norm:
            best, best_norm = cand, nrm
    return best, float(grid[1] - grid[0])
