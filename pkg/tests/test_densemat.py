import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lurefts import densemat
from lurefts.errors import DimensionError, SingularMatrixError, SymmetryError

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def sym(n):
    return arrays(float, (n, n), elements=finite).map(lambda m: 0.5 * (m + m.T))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7).flatmap(sym))
def test_eigenvalues_match_lapack(S):
    w, V = densemat.sym_eig(S)
    ref = np.linalg.eigvalsh(S)
    scale = max(1.0, np.max(np.abs(ref)))
    assert np.allclose(w, ref, atol=1e-10 * scale)
    assert np.allclose(V.T @ V, np.eye(len(w)), atol=1e-10)
    assert np.allclose(S @ V, V * w, atol=1e-9 * scale)


def test_eigen_small_known():
    w = densemat.sym_eigenvalues([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(w, [1.0, 3.0], atol=1e-14)
    assert densemat.lambda_max(np.diag([3.0, -1.0, 2.0])) == 3.0
    assert densemat.lambda_min(np.diag([3.0, -1.0, 2.0])) == -1.0


def test_asymmetric_rejected():
    with pytest.raises(SymmetryError):
        densemat.sym_eig([[1.0, 2.0], [0.0, 1.0]])


def test_non_square_rejected():
    with pytest.raises(DimensionError):
        densemat.sym_eig(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=finite), arrays(float, (4,), elements=finite))
def test_solve_matches_numpy(A, b):
    A = A + 25.0 * np.eye(4)  # diagonally dominant, well conditioned
    x = densemat.solve(A, b)
    assert np.allclose(x, np.linalg.solve(A, b), atol=1e-10)


def test_solve_needs_pivoting():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(densemat.solve(A, [2.0, 3.0]), [3.0, 2.0])


def test_singular_detected():
    with pytest.raises(SingularMatrixError):
        densemat.solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])
    with pytest.raises(SingularMatrixError):
        densemat.inverse(np.zeros((3, 3)))


def test_inverse_and_norm(rng):
    A = rng.normal(size=(5, 5)) + 5 * np.eye(5)
    assert np.allclose(densemat.inverse(A) @ A, np.eye(5), atol=1e-10)
    R = rng.normal(size=(3, 6))
    assert densemat.spectral_norm(R) == pytest.approx(np.linalg.norm(R, 2), rel=1e-10)


def test_definiteness():
    assert densemat.is_neg_semidef(np.diag([-1.0, 0.0]))
    assert not densemat.is_neg_semidef(np.diag([-1.0, 1e-3]))
    assert densemat.is_pos_def(np.eye(3))
    assert not densemat.is_pos_def(np.diag([1.0, 0.0]))
    assert densemat.is_diagonal(np.diag([1.0, 2.0]))
    assert not densemat.is_diagonal([[1.0, 1.0], [0.0, 1.0]])
