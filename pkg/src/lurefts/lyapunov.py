"""Lur'e-Postnikov Lyapunov function and its nonsmooth derivatives.

``V(x) = 1/2 x'Px + sum_i gamma_i int_0^{C_i x} psi_i``. Where a channel sits
on a discontinuity of its nonlinearity, ``V`` is not differentiable and the
Clarke gradient becomes the affine image of the Krasovskii box. All suprema
below are quadratic (or bilinear) over boxes and are evaluated exactly.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import densemat
from .errors import HypothesisError, NonlinearityError, ParameterError, SingularMatrixError, SizeError
from .luresys import as_diagonal
from .pwfun import Box

MAX_BOX_DIM = 12


@dataclass(frozen=True, eq=False)
class LyapunovData:
    P: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        P = densemat.as_matrix(self.P, "P")
        if not densemat.is_pos_def(P):
            raise ParameterError("P must be symmetric positive definite")
        G = np.array(self.Gamma, dtype=float)
        p = G.shape[0] if G.ndim == 2 else (G.size if G.ndim == 1 else 1)
        G = as_diagonal(G, p)
        if np.any(np.diag(G) <= 0):
            raise ParameterError("Gamma must have positive diagonal entries")
        object.__setattr__(self, "P", 0.5 * (P + P.T))
        object.__setattr__(self, "Gamma", G)

    def check(self, sys):
        if self.P.shape != (sys.n, sys.n) or self.Gamma.shape != (sys.p, sys.p):
            raise ParameterError("Lyapunov data dimensions do not match the system")


@dataclass(frozen=True, eq=False)
class GradientSet:
    """Clarke gradient ``{base + spread psi : psi in box}``."""

    base: np.ndarray
    spread: np.ndarray
    box: Box


@dataclass(frozen=True)
class LieSet:
    """Set-valued Lie derivative: empty, a singleton or a closed interval."""

    kind: str
    lo: float = math.nan
    hi: float = math.nan

    @property
    def empty(self):
        return self.kind == "empty"

    @property
    def sup(self):
        return -math.inf if self.kind == "empty" else self.hi

    def __str__(self):
        if self.kind == "empty":
            return "empty"
        if self.kind == "unresolved":
            return "unresolved"
        if self.kind == "singleton":
            return f"{{{self.lo:.12g}}}"
        return f"[{self.lo:.12g}, {self.hi:.12g}]"


def _check_size(box):
    if len(box.free) > MAX_BOX_DIM:
        raise SizeError(f"box has {len(box.free)} free coordinates, limit is {MAX_BOX_DIM}")


def V(sys, lyap, x):
    x = sys.check_dims(x)
    y = sys.output(x)
    gam = np.diag(lyap.Gamma)
    return float(0.5 * x @ lyap.P @ x + sum(g * f.integral(yi) for g, f, yi in zip(gam, sys.psi, y)))


def clarke_gradient(sys, lyap, x):
    x = sys.check_dims(x)
    return GradientSet(lyap.P @ x, sys.C.T @ lyap.Gamma, sys.psi_box(x))


def _vertices(box):
    """Vertices of a box, enumerating only its nondegenerate coordinates."""
    free = box.free
    base = np.array(box.lo)
    if free.size == 0:
        yield base
        return
    for choice in itertools.product((0, 1), repeat=free.size):
        v = base.copy()
        for j, c in zip(free, choice):
            v[j] = box.hi[j] if c else box.lo[j]
        yield v


def clarke_sup_directional(sys, lyap, x):
    """``max <v, f>`` over Clarke gradients ``v`` and inclusion directions ``f``.

    The objective is bilinear in the gradient selection and the input, so for
    each vertex of the gradient box the best input is chosen coordinatewise.
    """
    x = sys.check_dims(x)
    psi_box = sys.psi_box(x)
    _check_size(psi_box)
    u_box = -psi_box
    GC = lyap.Gamma @ sys.C
    Px = lyap.P @ x
    Ax = sys.A @ x
    const = Px @ Ax
    lin_psi = GC @ Ax
    best = -math.inf
    for psi in _vertices(psi_box):
        g = sys.B.T @ Px + (GC @ sys.B).T @ psi
        val = const + psi @ lin_psi + float(np.sum(np.maximum(g * u_box.lo, g * u_box.hi)))
        best = max(best, val)
    return float(best)


def box_quad_max(Q, b, c0, box):
    """Exact maximum of ``u'Qu + b'u + c0`` over a box.

    Every face of the box is visited: coordinates are pinned to a bound or
    left free, and the stationary point of the restriction is kept when it
    lies in the box. Faces with singular restricted Hessian are skipped; their
    supremum is attained on a lower-dimensional face. Returns
    ``(value, argmax)``.
    """
    if not isinstance(box, Box):
        box = Box(*box)
    Q = np.atleast_2d(np.array(Q, dtype=float))
    Q = 0.5 * (Q + Q.T)
    b = np.atleast_1d(np.array(b, dtype=float))
    p = len(box)
    if Q.shape != (p, p) or b.shape != (p,):
        raise ParameterError("Q, b and box dimensions disagree")
    _check_size(box)

    def f(u):
        return float(u @ Q @ u + b @ u + c0)

    free = box.free
    tol = 1e-12 * (1.0 + float(np.max(np.abs(np.concatenate([box.lo, box.hi])))))
    best_val, best_u = -math.inf, None
    for choice in itertools.product((0, 1, 2), repeat=free.size):
        u = np.array(box.lo)
        open_idx = []
        for j, c in zip(free, choice):
            if c == 1:
                u[j] = box.hi[j]
            elif c == 2:
                open_idx.append(j)
        if open_idx:
            S = np.array(open_idx)
            X = np.setdiff1d(np.arange(p), S)
            rhs = -(0.5 * b[S] + Q[np.ix_(S, X)] @ u[X])
            try:
                uS = densemat.solve(Q[np.ix_(S, S)], rhs)
            except SingularMatrixError:
                continue
            if np.any(uS < box.lo[S] - tol) or np.any(uS > box.hi[S] + tol):
                continue
            u[S] = np.clip(uS, box.lo[S], box.hi[S])
        val = f(u)
        if val > best_val:
            best_val, best_u = val, u
    return best_val, best_u


def lie_quadratic(sys, lyap, x):
    """Coefficients ``(Q, b, c0)`` of ``(x'P - u'Gamma C)(Ax + Bu)`` in ``u``."""
    GC = lyap.Gamma @ sys.C
    GCB = GC @ sys.B
    Q = -0.5 * (GCB + GCB.T)
    b = sys.B.T @ lyap.P @ x - GC @ sys.A @ x
    c0 = float(x @ lyap.P @ sys.A @ x)
    return Q, b, c0


def lie_sup_bound(sys, lyap, x):
    """Upper bound on the supremum of the set-valued Lie derivative."""
    x = sys.check_dims(x)
    Q, b, c0 = lie_quadratic(sys, lyap, x)
    return box_quad_max(Q, b, c0, -sys.psi_box(x))[0]


def lie_derivative_set(sys, lyap, x):
    """Values ``a`` with some ``f in F(x)`` giving ``<v, f> = a`` for every Clarke gradient ``v``.

    On the channels ``I`` where the Krasovskii interval is nondegenerate this
    forces ``(C f)_I = 0``. The admissible inputs are found by solving for
    ``u_I`` (unique when ``(CB)_II`` is invertible); otherwise the value range
    over the feasible polytope is obtained by two linear programs.
    """
    x = sys.check_dims(x)
    psi_box = sys.psi_box(x)
    _check_size(psi_box)
    u_box = -psi_box
    I = psi_box.free
    N = np.setdiff1d(np.arange(sys.p), I)
    Ax = sys.A @ x
    CB = sys.C @ sys.B
    # psi_I is irrelevant on the feasible set; take 0 so the value is linear in u
    psi = np.array(psi_box.lo)
    psi[I] = 0.0
    grad = lyap.P @ x + sys.C.T @ lyap.Gamma @ psi

    def value(u):
        return float(grad @ (Ax + sys.B @ u))

    u = np.array(u_box.lo)
    if I.size == 0:
        v = value(u)
        return LieSet("singleton", v, v)
    rhs = -(sys.C @ Ax)[I] - CB[np.ix_(I, N)] @ u[N]
    M = CB[np.ix_(I, I)]
    tol = 1e-12 * (1.0 + float(np.max(np.abs(np.concatenate([u_box.lo, u_box.hi])))))
    try:
        uI = densemat.solve(M, rhs)
    except SingularMatrixError:
        return _lie_set_lp(grad, Ax, sys.B, M, rhs, u, u_box, I)
    if np.any(uI < u_box.lo[I] - tol) or np.any(uI > u_box.hi[I] + tol):
        return LieSet("empty")
    u[I] = uI
    v = value(u)
    return LieSet("singleton", v, v)


def _lie_set_lp(grad, Ax, B, M, rhs, u, u_box, I):
    c = B[:, I].T @ grad
    base = float(grad @ (Ax + B @ u)) - float(c @ u[I])
    bounds = list(zip(u_box.lo[I], u_box.hi[I]))
    lo = linprog(c, A_eq=M, b_eq=rhs, bounds=bounds, method="highs")
    hi = linprog(-c, A_eq=M, b_eq=rhs, bounds=bounds, method="highs")
    if lo.status == 2 or hi.status == 2:
        return LieSet("empty")
    if not (lo.success and hi.success):
        return LieSet("unresolved")
    a, b = base + lo.fun, base - hi.fun
    if abs(b - a) <= 1e-12 * (1.0 + abs(a)):
        return LieSet("singleton", a, a)
    return LieSet("interval", a, b)


def W(sys, GammaBar, x):
    """Auxiliary output function ``2 sum_i gbar_i int_0^{C_i x} psi_i``."""
    x = sys.check_dims(x)
    gb = np.diag(as_diagonal(GammaBar, sys.p, "GammaBar"))
    y = sys.output(x)
    return float(2.0 * sum(g * f.integral(yi) for g, f, yi in zip(gb, sys.psi, y)))


def w_dot_sup(sys, GammaBar, x):
    """``sup -2 u' Gbar C (Ax + Bu)`` over ``u in -Psi(Cx)``."""
    x = sys.check_dims(x)
    G = as_diagonal(GammaBar, sys.p, "GammaBar")
    GCB = G @ sys.C @ sys.B
    Q = -(GCB + GCB.T)
    b = -2.0 * G @ sys.C @ sys.A @ x
    return box_quad_max(Q, b, 0.0, -sys.psi_box(x))[0]


@dataclass(frozen=True)
class FiniteTimeConstants:
    c: float
    nu: float
    mu: float
    lambda1: float
    lambda2: float
    omega: float


def _radius_ok(sys, c, nu, samples):
    s = nu * np.arange(1, samples + 1) / samples
    for f in sys.psi:
        for si in s:
            if abs(f.eval(si)) < c or abs(f.eval(-si)) < c:
                return False
    return True


def finite_time_constants(sys, GammaBar, nu_cap=1.0, samples=1000):
    """Constants of the finite-time output decrease near the origin.

    ``c`` is half the smallest one-sided limit magnitude at 0; ``nu`` the
    largest sampled radius (bisection on ``[1e-6, nu_cap]``) on which every
    ``|psi_i|`` stays above ``c``; ``mu`` takes a 0.9 safety factor on
    ``c lambda1 / (2 lambda2)``.
    """
    G = as_diagonal(GammaBar, sys.p, "GammaBar")
    if np.any(np.diag(G) <= 0):
        raise ParameterError("GammaBar must have positive diagonal entries")
    for i, f in enumerate(sys.psi):
        if not f.discontinuous_at_origin():
            raise NonlinearityError(f"psi_{i + 1} is not discontinuous at the origin with nonzero limits")
    c = 0.5 * min(min(abs(l) for l in f.one_sided_limits(0.0)) for f in sys.psi)
    CB = sys.C @ sys.B
    lam1 = densemat.lambda_min(G @ CB + CB.T @ G)
    if lam1 <= 0:
        raise HypothesisError(f"GammaBar CB + (CB)' GammaBar is not positive definite (lambda_min = {lam1:.3e})")
    lam2 = densemat.spectral_norm(G @ sys.C @ sys.A)
    lo = 1e-6
    if _radius_ok(sys, c, nu_cap, samples):
        nu = nu_cap
    elif not _radius_ok(sys, c, lo, samples):
        raise NonlinearityError("no radius found on which |psi_i| >= c")
    else:
        hi = nu_cap
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _radius_ok(sys, c, mid, samples):
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-9 * hi:
                break
        nu = lo
    mu = nu if lam2 == 0 else min(nu, 0.9 * c * lam1 / (2.0 * lam2))
    omega = lam1 * (c - 2.0 * mu * lam2 / lam1)
    return FiniteTimeConstants(c, nu, mu, lam1, lam2, omega)
