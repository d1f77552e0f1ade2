import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shiftreg import oracle
from shiftreg.operators import (
    LinearOperator,
    RegParam,
    ShiftMode,
    adjoint,
    b_op,
    cogram,
    complex_shifted_resolvent,
    gram,
    shifted_solve,
    smoothing_op,
)

from conftest import random_matrix

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def matrices(max_side=6):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite))


def smoothing_matrix(A, p):
    m = np.asarray(A).shape[0]
    return np.column_stack([smoothing_op(A, p, e) for e in np.eye(m)])


# --- types -------------------------------------------------------------------

def test_linear_operator_validates():
    with pytest.raises(ValueError):
        LinearOperator([[np.nan]])
    with pytest.raises(ValueError):
        LinearOperator([1.0, 2.0])
    with pytest.raises(ValueError):
        LinearOperator(np.zeros((0, 3)))
    A = LinearOperator([[1, 2], [3, 4]])
    assert A.shape == (2, 2) and A.rows == 2 and A.cols == 2
    assert not A.entries.flags.writeable


@pytest.mark.parametrize("a", [0.0, -1.0, np.inf, np.nan])
def test_regparam_rejects_nonpositive(a):
    with pytest.raises(ValueError):
        RegParam(a)


def test_regparam_modes():
    assert RegParam(2.0).shift == 2.0
    assert RegParam(2.0, ShiftMode.IMAGINARY).shift == 2j
    assert RegParam(0.25).norm_bound == pytest.approx(1.0)


# --- adjoint / gram / cogram ---------------------------------------------------

def test_adjoint_examples():
    np.testing.assert_array_equal(adjoint([[1, 2], [3, 4]]).entries, [[1, 3], [2, 4]])
    np.testing.assert_array_equal(adjoint([[1j]]).entries, [[-1j]])
    np.testing.assert_array_equal(adjoint(np.eye(3)).entries, np.eye(3))
    assert adjoint(np.ones((2, 5))).shape == (5, 2)


@given(matrices())
def test_adjoint_is_an_involution(M):
    A = LinearOperator(M + 1j * M[::-1])
    assert adjoint(adjoint(A)) == A


def test_gram_examples():
    np.testing.assert_array_equal(gram([[2]]).entries, [[4]])
    np.testing.assert_array_equal(gram([[1, 0], [0, 0]]).entries, [[1, 0], [0, 0]])
    np.testing.assert_array_equal(gram([[1, 1]]).entries, [[1, 1], [1, 1]])


def test_cogram_examples():
    np.testing.assert_array_equal(cogram([[1, 1]]).entries, [[2]])
    np.testing.assert_array_equal(cogram(np.eye(2)).entries, np.eye(2))
    np.testing.assert_array_equal(cogram([[1, 0], [0, 0]]).entries, [[1, 0], [0, 0]])


@given(matrices())
def test_gram_and_cogram_are_hermitian_psd(M):
    for G in (gram(M).entries, cogram(M).entries):
        np.testing.assert_array_equal(G, G.conj().T)
        scale = max(np.linalg.norm(G, 2), 1e-300)
        assert np.linalg.eigvalsh(G).min() >= -1e-10 * scale


# --- shifted_solve -------------------------------------------------------------

def test_shifted_solve_examples():
    np.testing.assert_allclose(shifted_solve(np.eye(2), 1.0, [2, 2]), [1, 1], rtol=1e-15)
    np.testing.assert_allclose(shifted_solve([[0.0]], 0.5, [3]), [6], rtol=1e-15)
    p = RegParam(1.0, ShiftMode.IMAGINARY)
    np.testing.assert_allclose(shifted_solve(np.diag([3.0, 0.0]), p, [1, 1]),
                               [(3 - 1j) / 10, -1j], rtol=1e-15)


def test_shifted_solve_rejects_bad_input():
    with pytest.raises(ValueError):
        shifted_solve(np.eye(2), 1.0, [1, 2, 3])
    with pytest.raises(ValueError):
        shifted_solve([[1.0, 2.0], [0.0, 1.0]], 1.0, [1, 1])
    with pytest.raises(ValueError):
        shifted_solve(np.ones((2, 3)), 1.0, [1, 1])


@settings(max_examples=60)
@given(matrices(), st.floats(1e-6, 1e2), st.sampled_from(list(ShiftMode)))
def test_shifted_solve_residual(M, a, mode):
    T = gram(M).entries
    p = RegParam(a, mode)
    v = np.cos(np.arange(T.shape[0]) + 1.0)
    x = shifted_solve(T, p, v)
    res = np.linalg.norm(T @ x + p.shift * x - v)
    assert res <= 1e-12 * (np.linalg.norm(T, 2) + a) * np.linalg.norm(x) + 1e-300


# --- smoothing operator ------------------------------------------------------------

def test_smoothing_op_examples():
    np.testing.assert_allclose(smoothing_op([[1.0]], 1.0, [2.0]), [1.0], rtol=1e-15)
    out = smoothing_op(np.diag([1000.0, 1.0]), 1.0, [1.0, 0.0])
    np.testing.assert_allclose(out, [1000 / 1000001, 0.0], rtol=1e-12, atol=1e-18)
    assert np.linalg.norm(out) <= 0.5


def test_smoothing_op_dimension_mismatch():
    with pytest.raises(ValueError):
        smoothing_op(np.ones((3, 2)), 1.0, [1.0, 2.0])


@pytest.mark.parametrize("a", [1e-6, 1e-4, 1e-2, 1.0, 10.0])
def test_smoothing_bound_independent_of_operator_norm(a):
    rng = np.random.default_rng(int(round(-np.log10(a) * 10)) + 20)
    bound = 0.5 / np.sqrt(a)
    for top in (1.0, 1e2, 1e4, 1e6):
        for planted in (False, True):
            m, n = rng.integers(2, 12, size=2)
            r = min(m, n)
            s = np.sort(top * 10.0 ** rng.uniform(-8, 0, r))[::-1]
            if planted:
                s[rng.integers(r)] = np.sqrt(a)
            A = random_matrix(rng, m, n, np.sort(s)[::-1])
            S = smoothing_matrix(A, a)
            assert np.linalg.norm(S, 2) <= bound * (1 + 1e-10)


def test_smoothing_norm_matches_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m, n = rng.integers(1, 10, size=2)
        r = int(rng.integers(1, min(m, n) + 1))
        A = random_matrix(rng, m, n, np.sort(10.0 ** rng.uniform(-2, 1, r))[::-1])
        a = 10.0 ** rng.uniform(-2, 1)
        measured = np.linalg.norm(smoothing_matrix(A, a), 2)
        assert measured == pytest.approx(oracle.smoothing_norm_exact(A, a), rel=1e-10)


def test_imaginary_smoothing_norm():
    rng = np.random.default_rng(4)
    for _ in range(20):
        m, n = rng.integers(1, 10, size=2)
        r = int(rng.integers(1, min(m, n) + 1))
        A = random_matrix(rng, m, n, np.sort(10.0 ** rng.uniform(-2, 2, r))[::-1])
        p = RegParam(10.0 ** rng.uniform(-2, 1), ShiftMode.IMAGINARY)
        measured = np.linalg.norm(smoothing_matrix(A, p), 2)
        assert measured <= np.sqrt(2) / (2 * np.sqrt(p.a)) * (1 + 1e-10)
        assert measured == pytest.approx(oracle.smoothing_norm_exact(A, p), rel=1e-9)
        # dense reference: (T + ia)^{-1} A^T
        T = A.T @ A
        ref = np.linalg.solve(T + 1j * p.a * np.eye(n), A.T)
        np.testing.assert_allclose(smoothing_matrix(A, p), ref, atol=1e-10 * np.abs(ref).max())


# --- B operator --------------------------------------------------------------------

def test_b_op_examples():
    np.testing.assert_allclose(b_op(np.eye(2), 1.0, [1, 1]), [0.5, 0.5], rtol=1e-15)
    np.testing.assert_allclose(b_op([[0.0]], 3.7, [1.0]), [1.0], rtol=1e-15)
    np.testing.assert_allclose(b_op([[3.0]], 1.0, [1.0]), [0.1], rtol=1e-14)


def test_b_op_needs_real_shift():
    with pytest.raises(ValueError):
        b_op(np.eye(2), RegParam(1.0, ShiftMode.IMAGINARY), [1, 1])


@settings(max_examples=60)
@given(matrices(), st.floats(1e-4, 1e2))
def test_b_op_is_a_contraction(M, a):
    v = np.sin(np.arange(M.shape[1]) + 0.5)
    assert np.linalg.norm(b_op(M, a, v)) <= np.linalg.norm(v) * (1 + 1e-12)


def test_b_op_identity_exactly_on_nullspace():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    null = np.array([1.0, -1.0, 1.0])
    np.testing.assert_allclose(b_op(A, 0.3, null), null, rtol=1e-13)
    off = np.array([1.0, 1.0, 0.0])
    assert np.linalg.norm(b_op(A, 0.3, off)) < np.linalg.norm(off)


# --- complex resolvent ---------------------------------------------------------------

def test_complex_shifted_resolvent_examples():
    np.testing.assert_allclose(complex_shifted_resolvent(np.diag([1.0, 0.0]), 1.0, [1, 1]),
                               [(1 - 1j) / 2, -1j], rtol=1e-15)
    np.testing.assert_allclose(complex_shifted_resolvent([[0.0]], 2.0, [2.0]), [-1j], rtol=1e-15)
    np.testing.assert_allclose(complex_shifted_resolvent([[-1.0]], 1.0, [1.0]),
                               [(-1 - 1j) / 2], rtol=1e-15)


def test_complex_shifted_resolvent_rejects_non_hermitian():
    with pytest.raises(ValueError):
        complex_shifted_resolvent([[0.0, 1.0], [0.0, 0.0]], 1.0, [1, 1])
    with pytest.raises(ValueError):
        complex_shifted_resolvent(np.eye(2), 0.0, [1, 1])
