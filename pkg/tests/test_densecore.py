import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridopt.densecore import (Matrix, SingularMatrixError, format_number, invert, lu_factor,
                               lu_solve, lu_solve_transpose, matrix_to_csv)


def well_conditioned(rng, n, complex_=False):
    a = rng.normal(size=(n, n))
    if complex_:
        a = a + 1j * rng.normal(size=(n, n))
    return a + n * np.eye(n)


def test_identity_factors():
    f = lu_factor(np.eye(3))
    np.testing.assert_array_equal(f.lower, np.eye(3))
    np.testing.assert_array_equal(f.upper, np.eye(3))
    np.testing.assert_array_equal(f.perm, [0, 1, 2])


def test_forced_pivot():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    f = lu_factor(a)
    np.testing.assert_array_equal(f.perm, [1, 0])
    assert f.parity == -1
    np.testing.assert_allclose(f.permutation_matrix() @ a, f.lower @ f.upper)


def test_singular_b_bus_detected(net3):
    from gridopt.sysmatrices import build_b_bus
    with pytest.raises(SingularMatrixError):
        lu_factor(build_b_bus(net3))


def test_relative_singularity_threshold():
    # a tiny but perfectly conditioned matrix is not singular
    lu_factor(1e-20 * np.eye(3))
    with pytest.raises(SingularMatrixError) as err:
        lu_factor(np.array([[1.0, 2.0], [2.0, 4.0 + 1e-14]]))
    assert err.value.column == 1


def test_solve_two_by_two():
    x = lu_solve(lu_factor([[2.0, -1.0], [-1.0, 2.0]]), [1.0, 0.0])
    np.testing.assert_allclose(x, [2 / 3, 1 / 3], rtol=0, atol=1e-15)


def test_solve_identity():
    b = np.array([3.0, -1.0, 7.5])
    np.testing.assert_array_equal(lu_solve(lu_factor(np.eye(3)), b), b)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        lu_solve(lu_factor(np.eye(3)), np.ones(2))


def test_construct_then_solve_6x6():
    rng = np.random.default_rng(3)
    a = well_conditioned(rng, 6)
    x = rng.normal(size=6)
    np.testing.assert_allclose(lu_solve(lu_factor(a), a @ x), x, atol=1e-9)


def test_invert_examples():
    np.testing.assert_allclose(invert(np.array([[2.0, -1.0], [-1.0, 2.0]])),
                               np.array([[2.0, 1.0], [1.0, 2.0]]) / 3, atol=1e-15)
    np.testing.assert_array_equal(invert(np.eye(4)), np.eye(4))
    np.testing.assert_array_equal(invert(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))


def test_invert_keeps_labels():
    m = Matrix(np.diag([2.0, 4.0]), ("a", "b"), ("c", "d"))
    inv = invert(m)
    assert inv.row_labels == ("c", "d") and inv.col_labels == ("a", "b")


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.booleans())
def test_inverse_and_solve_agree(n, seed, complex_):
    rng = np.random.default_rng(seed)
    a = well_conditioned(rng, n, complex_)
    inv = invert(a)
    assert np.max(np.abs(a @ inv - np.eye(n))) <= 1e-9
    f = lu_factor(a)
    assert np.max(np.abs(f.permutation_matrix() @ a - f.lower @ f.upper)) <= 1e-10 * np.max(np.abs(a))
    b = rng.normal(size=n)
    x = lu_solve(f, b)
    np.testing.assert_allclose(x, inv @ b, atol=1e-9)
    resid = np.max(np.abs(a @ x - b))
    assert resid <= 1e-9 * (np.max(np.sum(np.abs(a), axis=1)) * np.max(np.abs(x)) + np.max(np.abs(b)))
    np.testing.assert_allclose(lu_solve_transpose(f, b), np.linalg.solve(a.T, b), atol=1e-9)


def test_csv_format():
    m = Matrix(np.array([[1 / 3, -0.0], [1234567.0, 2e-9]]), (1, 2), ("a", "b"))
    assert matrix_to_csv(m) == ",a,b\n1,0.333333,0\n2,1.23457e+06,2e-09\n"
    assert format_number(complex(0, -9.9)) == "0-9.9j"
