"""Dense-matrix operator calculus for shifted normal-equation solvers.

All routines accept either a :class:`LinearOperator` or anything
``numpy.asarray`` turns into a 2-D array.  Nothing here assumes that
``A`` is small in norm: the smoothing map ``(A*A + aI)^{-1} A*`` is
evaluated without forming ``A*A`` so its norm stays below
``1 / (2 sqrt(a))`` even for operators of norm ``1e6`` and more.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

__all__ = [
    "HERMITIAN_RTOL",
    "LinearOperator",
    "ShiftMode",
    "RegParam",
    "as_matrix",
    "adjoint",
    "gram",
    "cogram",
    "check_hermitian",
    "ShiftedFactor",
    "shifted_solve",
    "RegularizedFactor",
    "smoothing_op",
    "b_op",
    "ResolventFactor",
    "complex_shifted_resolvent",
]

HERMITIAN_RTOL = 1e-10


class LinearOperator:
    """Immutable dense ``m x n`` matrix standing in for the operator ``A``.

    Parameters
    ----------
    entries : array_like
        Two-dimensional real or complex array.  A copy is taken and marked
        read-only.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.array(entries)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"operator must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.number) or arr.dtype == np.bool_:
            raise TypeError(f"operator entries must be numeric, got {arr.dtype}")
        if not np.iscomplexobj(arr):
            arr = arr.astype(np.float64)
        else:
            arr = arr.astype(np.complex128)
        if not np.all(np.isfinite(arr)):
            raise ValueError("operator entries must be finite")
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def rows(self) -> int:
        return self._entries.shape[0]

    @property
    def cols(self) -> int:
        return self._entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._entries.shape

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self._entries)

    def adjoint(self) -> "LinearOperator":
        return LinearOperator(self._entries.conj().T)

    @property
    def H(self) -> "LinearOperator":
        return self.adjoint()

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries
        return self._entries.astype(dtype)

    def __matmul__(self, other):
        return self._entries @ np.asarray(other)

    def __eq__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._entries, other._entries)

    def __hash__(self):
        return hash((self.shape, self._entries.tobytes()))

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        return f"LinearOperator({self.rows}x{self.cols}, {kind})"


class ShiftMode(enum.Enum):
    REAL = "real"
    IMAGINARY = "imaginary"


@dataclass(frozen=True)
class RegParam:
    """Regularization shift ``a > 0``, applied as ``+a`` or ``+ia``."""

    a: float
    mode: ShiftMode = ShiftMode.REAL

    def __post_init__(self):
        a = float(self.a)
        if not np.isfinite(a) or a <= 0:
            raise ValueError(f"regularization parameter must be positive, got {self.a!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "mode", ShiftMode(self.mode))

    @property
    def shift(self) -> complex | float:
        return self.a if self.mode is ShiftMode.REAL else 1j * self.a

    @property
    def norm_bound(self) -> float:
        """Upper bound on ``||(T + shift)^{-1} A*||`` valid for every ``A``."""
        if self.mode is ShiftMode.REAL:
            return 0.5 / np.sqrt(self.a)
        return 1.0 / np.sqrt(2.0 * self.a)


def _as_param(p) -> RegParam:
    return p if isinstance(p, RegParam) else RegParam(p)


def as_matrix(A) -> np.ndarray:
    """Return the validated 2-D array behind ``A``."""
    if isinstance(A, LinearOperator):
        return A.entries
    return LinearOperator(A).entries


def _as_vector(v, length: int, name: str = "vector") -> np.ndarray:
    v = np.asarray(v)
    if v.ndim == 2 and v.shape[1] == 1:
        v = v[:, 0]
    if v.ndim != 1 or v.shape[0] != length:
        raise ValueError(f"{name} has shape {np.shape(v)}, expected ({length},)")
    return v


def adjoint(A) -> LinearOperator:
    return LinearOperator(as_matrix(A).conj().T)


def _hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def gram(A) -> LinearOperator:
    """``T = A*A``, symmetrized."""
    M = as_matrix(A)
    return LinearOperator(_hermitian_part(M.conj().T @ M))


def cogram(A) -> LinearOperator:
    """``Q = AA*``, symmetrized."""
    M = as_matrix(A)
    return LinearOperator(_hermitian_part(M @ M.conj().T))


def check_hermitian(M, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return ``M`` as an array, raising ``ValueError`` if it is not Hermitian.

    The test is ``||M - M*||_F <= rtol * ||M||_F``.
    """
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = np.linalg.norm(M)
    skew = np.linalg.norm(M - M.conj().T)
    if skew > rtol * scale:
        raise ValueError(f"matrix is not Hermitian (relative skew {skew / scale:.3e})")
    return M


class ShiftedFactor:
    """Factorization of ``T + shift*I`` for a Hermitian PSD ``T``.

    Cholesky for a real shift, complex LU for an imaginary one.  The
    factorization is computed once and reused by :meth:`solve`.
    """

    def __init__(self, T, p, check: bool = True):
        T = check_hermitian(T) if check else as_matrix(T)
        p = _as_param(p)
        self.n = T.shape[0]
        self.param = p
        shifted = T + p.shift * np.eye(self.n)
        self._chol = None
        if p.mode is ShiftMode.REAL:
            potrf, self._potrs = la.get_lapack_funcs(("potrf", "potrs"), (shifted,))
            c, info = potrf(shifted, lower=False, clean=False)
            if info == 0:
                self._chol = c
        if self._chol is None:
            # imaginary shift, or T slightly indefinite from rounding while a is tiny
            self._lu, self._piv = la.lu_factor(shifted, check_finite=False)
            self._getrs = la.get_lapack_funcs("getrs", (self._lu,))

    def solve(self, v) -> np.ndarray:
        v = _as_vector(v, self.n)
        if self._chol is not None:
            if np.iscomplexobj(v) and not np.iscomplexobj(self._chol):
                return self.solve(v.real) + 1j * self.solve(v.imag)
            x, info = self._potrs(self._chol, v.astype(self._chol.dtype, copy=False), lower=False)
        else:
            x, info = self._getrs(self._lu, self._piv, v.astype(self._lu.dtype, copy=False))
        if info != 0:
            raise la.LinAlgError(f"shifted solve failed (info={info})")
        return x


def shifted_solve(T, p, v) -> np.ndarray:
    """Solve ``(T + aI) x = v`` or ``(T + iaI) x = v`` depending on ``p.mode``.

    Parameters
    ----------
    T : (n, n) array_like or LinearOperator
        Hermitian positive semidefinite matrix.
    p : RegParam or float
        Shift; a bare float means a real shift.
    v : (n,) array_like
        Right-hand side.
    """
    return ShiftedFactor(T, p).solve(v)


class RegularizedFactor:
    """Stable factorization of ``T_a = A*A + aI`` built from ``A`` itself.

    The thin QR of the stacked matrix ``[A; sqrt(a) I] = [Q1; Q2] R`` gives
    ``R*R = T_a`` without ever forming ``A*A``, and ``R^{-1} Q1* g`` is
    ``T_a^{-1} A* g``.  Only real shifts are handled here.
    """

    def __init__(self, A, a):
        M = as_matrix(A)
        p = _as_param(a)
        if p.mode is not ShiftMode.REAL:
            raise ValueError("RegularizedFactor needs a real shift")
        self.A = M
        self.a = p.a
        m, n = M.shape
        self.m, self.n = m, n
        stacked = np.vstack([M, np.sqrt(p.a) * np.eye(n, dtype=M.dtype)])
        Q, R = np.linalg.qr(stacked, mode="reduced")
        self._Q1 = Q[:m]
        self._R = np.asfortranarray(R)
        # raw LAPACK call: these solves sit in tight iteration loops
        self._trtrs = la.get_lapack_funcs("trtrs", (self._R,))

    def _tri(self, v, trans):
        if np.iscomplexobj(v) and not np.iscomplexobj(self._R):
            return self._tri(v.real, trans) + 1j * self._tri(v.imag, trans)
        x, info = self._trtrs(self._R, v.astype(self._R.dtype, copy=False), trans=trans)
        if info != 0:
            raise la.LinAlgError(f"triangular solve failed (info={info})")
        return x

    def solve(self, v) -> np.ndarray:
        """``T_a^{-1} v``."""
        v = _as_vector(v, self.n)
        return self._tri(self._tri(v, 2), 0)

    def smooth(self, g) -> np.ndarray:
        """``T_a^{-1} A* g``, norm at most ``||g|| / (2 sqrt(a))``."""
        g = _as_vector(g, self.m)
        return self._tri(self._Q1.conj().T @ g, 0)

    def contract(self, v) -> np.ndarray:
        """``a T_a^{-1} v``."""
        return self.a * self.solve(v)


class _ImaginarySmoother:
    # (A*A + iaI) x = A* g  <=>  [[I, A], [A*, -iaI]] [r; x] = [g; 0]
    def __init__(self, A, a):
        M = as_matrix(A)
        m, n = M.shape
        self.m, self.n = m, n
        K = np.block([
            [np.eye(m, dtype=complex), M.astype(complex)],
            [M.conj().T.astype(complex), -1j * a * np.eye(n)],
        ])
        self._lu = la.lu_factor(K, check_finite=False)

    def smooth(self, g) -> np.ndarray:
        g = _as_vector(g, self.m)
        rhs = np.concatenate([g.astype(complex), np.zeros(self.n, dtype=complex)])
        return la.lu_solve(self._lu, rhs, check_finite=False)[self.m:]


def smoothing_op(A, p, g) -> np.ndarray:
    """Apply the smoothing operator ``S g = (A*A + shift I)^{-1} A* g``.

    For a real shift ``a`` the result satisfies
    ``||S g|| <= ||g|| / (2 sqrt(a))`` regardless of ``||A||``; for the
    imaginary shift ``ia`` the sharp bound is ``||g|| / sqrt(2a)``.
    """
    p = _as_param(p)
    if p.mode is ShiftMode.REAL:
        return RegularizedFactor(A, p).smooth(g)
    return _ImaginarySmoother(A, p.a).smooth(g)


def b_op(A, p, v) -> np.ndarray:
    """``B v = a (A*A + aI)^{-1} v``; a contraction, identity on ``N(A)``."""
    p = _as_param(p)
    if p.mode is not ShiftMode.REAL:
        raise ValueError("b_op is defined for a real shift only")
    return RegularizedFactor(A, p).contract(v)


class ResolventFactor:
    """LU factorization of ``A + iaI`` for Hermitian ``A``."""

    def __init__(self, A, a):
        M = check_hermitian(A)
        a = float(a)
        if not np.isfinite(a) or a <= 0:
            raise ValueError(f"shift must be positive, got {a!r}")
        self.n = M.shape[0]
        self.a = a
        self._lu, self._piv = la.lu_factor(M.astype(complex) + 1j * a * np.eye(self.n),
                                           check_finite=False)
        self._getrs = la.get_lapack_funcs("getrs", (self._lu,))

    def solve(self, v) -> np.ndarray:
        v = _as_vector(v, self.n).astype(complex)
        x, info = self._getrs(self._lu, self._piv, v)
        if info != 0:
            raise la.LinAlgError(f"resolvent solve failed (info={info})")
        return x


def complex_shifted_resolvent(A, a, v) -> np.ndarray:
    """``(A + iaI)^{-1} v`` for Hermitian ``A``; always well defined."""
    return ResolventFactor(A, a).solve(v)
