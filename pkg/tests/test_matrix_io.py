import json

import numpy as np
import pytest

from shiftreg import matrix_io, problems


def test_real_round_trip_is_exact(tmp_path, rng):
    M = rng.standard_normal((4, 3)) * 10.0 ** rng.uniform(-300, 300, (4, 3))
    matrix_io.write_matrix(tmp_path / "M.txt", M)
    np.testing.assert_array_equal(matrix_io.read_matrix(tmp_path / "M.txt"), M)
    assert (tmp_path / "M.txt").read_text().splitlines()[0] == "4 3 real"


def test_complex_round_trip_is_exact(tmp_path, rng):
    M = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    M[0, 0] = 1.5 - 2j
    matrix_io.write_matrix(tmp_path / "M.txt", M)
    text = (tmp_path / "M.txt").read_text()
    assert text.splitlines()[0] == "2 2 complex" and "1.5-2j" in text
    np.testing.assert_array_equal(matrix_io.read_matrix(tmp_path / "M.txt"), M)


def test_vector_round_trip(tmp_path):
    v = np.array([1.0, -0.1, 3e-20])
    matrix_io.write_vector(tmp_path / "v.txt", v)
    np.testing.assert_array_equal(matrix_io.read_vector(tmp_path / "v.txt"), v)
    with pytest.raises(ValueError):
        matrix_io.write_matrix(tmp_path / "bad.txt", [np.nan])


@pytest.mark.parametrize("text", [
    "",
    "2 2\n1 2\n3 4\n",
    "2 2 real\n1 2\n",
    "2 2 real\n1 2\n3\n",
    "1 1 real\nabc\n",
    "1 1 real\nnan\n",
    "0 1 real\n",
])
def test_malformed_files_are_rejected(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValueError):
        matrix_io.read_matrix(path)


def test_read_vector_needs_one_column(tmp_path):
    matrix_io.write_matrix(tmp_path / "M.txt", np.eye(2))
    with pytest.raises(ValueError):
        matrix_io.read_vector(tmp_path / "M.txt")


def test_write_problem_sidecar(tmp_path):
    P = problems.hilbert(3)
    meta = matrix_io.write_problem(tmp_path / "hilb", P, delta=1e-3)
    assert json.loads((tmp_path / "hilb.json").read_text()) == meta
    assert meta == {"label": "hilbert(3)", "m": 3, "n": 3, "delta": 1e-3}
    np.testing.assert_array_equal(matrix_io.read_matrix(tmp_path / "hilb_A.txt"), P.A.entries)
    np.testing.assert_array_equal(matrix_io.read_vector(tmp_path / "hilb_f.txt"), P.f)
