"""Small dense linear-algebra kernels.

Matrices are plain ``numpy`` float arrays. The eigen- and linear solvers are
written out here (cyclic Jacobi, Gaussian elimination with partial pivoting)
because every definiteness verdict in the package goes through them and the
dimensions involved are tiny.
"""

import math

import numpy as np

from .errors import DimensionError, SingularMatrixError, SymmetryError

SYMMETRY_TOL = 1e-10
PIVOT_TOL = 1e-12
MAX_SWEEPS = 100


def as_matrix(a, name="matrix"):
    m = np.array(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    return m


def _check_square(m, name):
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def _check_symmetric(m, name):
    _check_square(m, name)
    asym = np.max(np.abs(m - m.T))
    if asym > SYMMETRY_TOL:
        raise SymmetryError(f"{name} is not symmetric (max |S - S^T| = {asym:.3e})")


def sym_eig(S):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ``w`` ascending and ``S = V diag(w) V^T``.
    """
    a = as_matrix(S, "S")
    _check_symmetric(a, "S")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    thresh = 1e-14 * math.sqrt(float(np.sum(a * a)))
    for _ in range(MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)) * 2.0)
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- R^T A R with R the (p, q) plane rotation
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sym_eigenvalues(S):
    """Ascending eigenvalues of a symmetric matrix."""
    return sym_eig(S)[0]


def lambda_max(S):
    return float(sym_eigenvalues(S)[-1])


def lambda_min(S):
    return float(sym_eigenvalues(S)[0])


def solve(A, b):
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides. Raises
    :class:`SingularMatrixError` when a pivot falls below
    ``PIVOT_TOL * max|A|``.
    """
    a = as_matrix(A, "A")
    _check_square(a, "A")
    rhs = np.array(b, dtype=float)
    vector = rhs.ndim == 1
    if vector:
        rhs = rhs.reshape(-1, 1)
    if rhs.shape[0] != a.shape[0]:
        raise DimensionError(f"right-hand side has {rhs.shape[0]} rows, expected {a.shape[0]}")
    n = a.shape[0]
    scale = float(np.max(np.abs(a)))
    tol = PIVOT_TOL * scale
    aug = np.hstack([a, rhs])
    for k in range(n):
        piv = k + int(np.argmax(np.abs(aug[k:, k])))
        if scale == 0.0 or abs(aug[piv, k]) <= tol:
            raise SingularMatrixError(f"matrix is singular (pivot {aug[piv, k]:.3e} at column {k})")
        if piv != k:
            aug[[k, piv]] = aug[[piv, k]]
        aug[k] /= aug[k, k]
        for i in range(n):
            if i != k and aug[i, k] != 0.0:
                aug[i] -= aug[i, k] * aug[k]
    x = aug[:, n:]
    return x[:, 0] if vector else x


def inverse(A):
    a = as_matrix(A, "A")
    _check_square(a, "A")
    return solve(a, np.eye(a.shape[0]))


def spectral_norm(A):
    """Largest singular value, from the eigenvalues of the smaller Gram matrix."""
    a = as_matrix(A, "A")
    g = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    return math.sqrt(max(lambda_max(0.5 * (g + g.T)), 0.0))


def default_eps(S):
    """Definiteness tolerance ``1e-8 * max(1, |S|)``."""
    w = sym_eigenvalues(S)
    return 1e-8 * max(1.0, float(np.max(np.abs(w))))


def is_neg_semidef(S, eps=None):
    w = sym_eigenvalues(S)
    if eps is None:
        eps = 1e-8 * max(1.0, float(np.max(np.abs(w))))
    return bool(w[-1] <= eps)


def is_pos_def(S, eps=None):
    w = sym_eigenvalues(S)
    if eps is None:
        eps = 1e-8 * max(1.0, float(np.max(np.abs(w))))
    return bool(w[0] > eps)


def is_diagonal(M, tol=0.0):
    m = as_matrix(M)
    return m.shape[0] == m.shape[1] and bool(np.all(np.abs(m - np.diag(np.diag(m))) <= tol))
