"""Test problems ``Au = f`` with a known minimal-norm solution ``y``.

Every generator is a deterministic function of its size arguments and
seed, and every returned problem is consistent (``f = Ay``).  Noise only
enters through :func:`add_noise`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle
from .operators import LinearOperator, as_matrix, check_hermitian
from .stopping import NoisyData

__all__ = [
    "TestProblem",
    "rank_deficient",
    "hilbert",
    "discretized_derivative",
    "symmetric_singular",
    "diagonal",
    "add_noise",
]


@dataclass(frozen=True)
class TestProblem:
    """Consistent linear system with its minimal-norm solution.

    Construction verifies ``||Ay - f|| <= 1e-12 ||f||`` and
    ``||P_N y|| <= 1e-10 ||y||``.
    """

    __test__ = False  # keep pytest from collecting this class

    A: LinearOperator
    f: np.ndarray
    y: np.ndarray
    label: str

    def __post_init__(self):
        A = self.A if isinstance(self.A, LinearOperator) else LinearOperator(self.A)
        object.__setattr__(self, "A", A)
        f = np.array(self.f)
        y = np.array(self.y)
        if f.shape != (A.rows,) or y.shape != (A.cols,):
            raise ValueError(f"shapes f={f.shape}, y={y.shape} do not fit A {A.shape}")
        f.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "y", y)
        fnorm, ynorm = np.linalg.norm(f), np.linalg.norm(y)
        if np.linalg.norm(A.entries @ y - f) > 1e-12 * fnorm:
            raise ValueError("f is not A @ y")
        if oracle.nullspace_component(A, y) > 1e-10 * ynorm:
            raise ValueError("y is not orthogonal to the null space of A")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


def _orthonormal(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, k)))
    return Q * np.sign(np.diag(R))


def _build(A, y, label) -> TestProblem:
    A = as_matrix(A)
    return TestProblem(A, A @ y, y, label)


def rank_deficient(m: int, n: int, r: int, seed: int = 0) -> TestProblem:
    """Random rank-``r`` ``m x n`` operator, singular values log-uniform in [1e-3, 1]."""
    if not (1 <= r <= min(m, n)):
        raise ValueError(f"need 1 <= r <= min(m, n), got m={m}, n={n}, r={r}")
    rng = np.random.default_rng(seed)
    U = _orthonormal(rng, m, r)
    V = _orthonormal(rng, n, r)
    sigma = np.sort(10.0 ** rng.uniform(-3.0, 0.0, r))[::-1]
    A = (U * sigma) @ V.T
    y = V @ rng.standard_normal(r)
    y /= np.linalg.norm(y)
    # strip the rounding-level null-space part so y is exactly the pseudoinverse solution
    y = oracle.project_off_nullspace(A, y)
    return _build(A, y, f"rank_deficient({m},{n},{r},seed={seed})")


def hilbert(n: int) -> TestProblem:
    """Hilbert matrix ``1/(i+j-1)`` with ``y`` the all-ones vector off the numerical null space."""
    if n < 1:
        raise ValueError("n must be positive")
    i = np.arange(1, n + 1)
    A = 1.0 / (i[:, None] + i[None, :] - 1)
    y = oracle.project_off_nullspace(A, np.ones(n))
    return _build(A, y, f"hilbert({n})")


def discretized_derivative(n: int) -> TestProblem:
    """Scaled forward difference ``(Au)_k = n (u_{k+1} - u_k)``, shape ``(n-1) x n``.

    ``||A||`` grows like ``2n``, which makes the family a finite stand-in for
    an unbounded derivative.  The null space is the constants.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    A = n * (np.eye(n - 1, n, k=1) - np.eye(n - 1, n))
    y = np.sin(2 * np.pi * np.arange(n) / n)
    y = y - y.mean()
    y = oracle.project_off_nullspace(A, y)
    return _build(A, y, f"discretized_derivative({n})")


def symmetric_singular(n: int, seed: int = 0, eigenvalues=None, basis=None) -> TestProblem:
    """Real symmetric ``A = W diag(lam) W^T`` with a one-dimensional kernel.

    By default ``|lam_i|`` is uniform in ``[0.1, 1]`` with random signs for
    the first ``n - 1`` eigenvalues and the last one is zero.  Passing
    ``eigenvalues`` and/or ``basis`` overrides the random draw.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    if eigenvalues is None:
        mags = rng.uniform(0.1, 1.0, n - 1)
        signs = rng.choice([-1.0, 1.0], n - 1)
        eigenvalues = np.append(mags * signs, 0.0)
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.shape != (n,):
        raise ValueError(f"need {n} eigenvalues")
    W = _orthonormal(rng, n, n) if basis is None else np.asarray(basis, dtype=float)
    A = (W * lam) @ W.T
    A = 0.5 * (A + A.T)
    check_hermitian(A, rtol=1e-14)
    coef = np.where(lam != 0, rng.standard_normal(n), 0.0)
    y = W @ coef
    y /= np.linalg.norm(y) if np.any(coef) else 1.0
    y = oracle.project_off_nullspace(A, y)
    return _build(A, y, f"symmetric_singular({n},seed={seed})")


def diagonal(sigmas, y=None) -> TestProblem:
    """``A = diag(sigmas)``; ``y`` defaults to ones on the nonzero diagonal."""
    s = np.asarray(sigmas, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("sigmas must be a non-empty 1-D sequence")
    if y is None:
        y = (s != 0).astype(float)
    y = np.asarray(y, dtype=float)
    label = "diag(" + ",".join(f"{v:g}" for v in s) + ")"
    return _build(np.diag(s), y, label)


def add_noise(f, delta: float, seed: int = 0) -> NoisyData:
    """Perturb ``f`` by ``delta`` times a seeded random unit vector."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    f = np.asarray(f)
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(f.shape)
    if np.iscomplexobj(f):
        e = e + 1j * rng.standard_normal(f.shape)
    e /= np.linalg.norm(e)
    return NoisyData(f + delta * e, float(delta))
