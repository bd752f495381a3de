"""Hypothesis checks, certificate construction and stability classification."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import densemat, lyapunov, pwfun
from .errors import DimensionError, HypothesisError, LureError, ParameterError, SingularMatrixError
from .luresys import as_diagonal

EQ8 = "eq8"
EQ15H = "eq15+H"


@dataclass(frozen=True, eq=False)
class Certificate:
    """Candidate ``(P, Gamma, eta)``; ``kind`` selects the matrix inequality.

    ``kind == "eq8"`` targets the strict-passivity inequality with the
    loop-transformed output; ``"eq15+H"`` the alternative inequality together
    with the diagonal ``H`` satisfying ``Gamma C A = H C``.
    """

    P: np.ndarray
    Gamma: np.ndarray
    eta: float
    kind: str = EQ8
    H: np.ndarray = None

    def __post_init__(self):
        P = densemat.as_matrix(self.P, "P")
        G = np.array(self.Gamma, dtype=float)
        p = G.shape[0] if G.ndim == 2 else max(G.size, 1)
        object.__setattr__(self, "P", 0.5 * (P + P.T))
        object.__setattr__(self, "Gamma", as_diagonal(G, p))
        object.__setattr__(self, "eta", float(self.eta))
        if self.kind not in (EQ8, EQ15H):
            raise ParameterError(f"unknown certificate kind {self.kind!r}")
        if self.H is not None:
            object.__setattr__(self, "H", as_diagonal(self.H, p, "H"))
        if self.eta <= 0:
            raise ParameterError("eta must be positive")

    def lyapunov_data(self):
        return lyapunov.LyapunovData(self.P, self.Gamma)


@dataclass(frozen=True)
class MatrixVerdict:
    ok: bool
    lambda_max: float
    eps: float
    norm: float
    P_lambda_min: float
    detail: str = ""


def _check_cert_dims(sys, cert):
    if cert.P.shape != (sys.n, sys.n):
        raise DimensionError(f"P must be {sys.n}x{sys.n}, got {cert.P.shape}")
    if cert.Gamma.shape != (sys.p, sys.p):
        raise DimensionError(f"Gamma must be {sys.p}x{sys.p}, got {cert.Gamma.shape}")


def passivity_matrix(sys, P, Gamma, eta):
    """The block matrix whose negative semidefiniteness certifies strict passivity."""
    G = as_diagonal(Gamma, sys.p)
    A, B, C = sys.A, sys.B, sys.C
    Cbar = C + G @ C @ A
    GCB = G @ C @ B
    top = P @ A + A.T @ P + eta * np.eye(sys.n)
    off = P @ B - Cbar.T
    bot = -2.0 * sys.Z - GCB - GCB.T
    M = np.block([[top, off], [off.T, bot]])
    return 0.5 * (M + M.T)


def alternative_matrix(sys, P, Gamma, eta):
    """Same as :func:`passivity_matrix` without the output coupling in the off-diagonal block."""
    G = as_diagonal(Gamma, sys.p)
    A, B, C = sys.A, sys.B, sys.C
    GCB = G @ C @ B
    top = P @ A + A.T @ P + eta * np.eye(sys.n)
    off = P @ B
    bot = -2.0 * sys.Z - GCB - GCB.T
    M = np.block([[top, off], [off.T, bot]])
    return 0.5 * (M + M.T)


def _matrix_verdict(M, P, eps, rel_eps):
    w = densemat.sym_eigenvalues(M)
    norm = float(np.max(np.abs(w)))
    if eps is None:
        eps = (rel_eps * norm) if rel_eps is not None else 1e-8 * max(1.0, norm)
    p_w = densemat.sym_eigenvalues(P)
    p_ok = p_w[0] > 1e-8 * max(1.0, float(np.max(np.abs(p_w))))
    ok = bool(w[-1] <= eps and p_ok)
    detail = "" if p_ok else "P is not positive definite"
    return MatrixVerdict(ok, float(w[-1]), float(eps), norm, float(p_w[0]), detail)


def check_assumption2(sys, cert, eps=None, rel_eps=None):
    """``lambda_max(M) <= eps`` with ``P > 0``.

    ``eps`` defaults to ``1e-8 max(1, |M|)``; ``rel_eps`` switches to the
    relative threshold ``rel_eps |M|`` (used for certificates rounded to
    few digits).
    """
    _check_cert_dims(sys, cert)
    if cert.kind != EQ8:
        raise ParameterError("check_assumption2 needs an eq8 certificate")
    M = passivity_matrix(sys, cert.P, cert.Gamma, cert.eta)
    return _matrix_verdict(M, cert.P, eps, rel_eps)


@dataclass(frozen=True)
class Property1Verdict:
    ok: bool
    matrix: MatrixVerdict
    commutes: bool
    h_ok: bool
    detail: str = ""


def check_property1(sys, cert, H=None, eps=None):
    """Alternative inequality, ``Gamma C A = H C`` and the sign conditions on ``H``."""
    _check_cert_dims(sys, cert)
    H = cert.H if H is None else as_diagonal(H, sys.p, "H")
    if H is None:
        raise ParameterError("the alternative inequality needs a diagonal H")
    Mbar = alternative_matrix(sys, cert.P, cert.Gamma, cert.eta)
    mv = _matrix_verdict(Mbar, cert.P, eps, None)
    commutes = bool(np.max(np.abs(cert.Gamma @ sys.C @ sys.A - H @ sys.C)) <= 1e-9)
    z_zero = bool(np.all(sys.Z == 0))
    h = np.diag(H)
    h_ok = bool(all(hi <= -1 or (hi <= 0 and z_zero) for hi in h))
    notes = []
    if not mv.ok:
        notes.append(f"lambda_max = {mv.lambda_max:.3e} > {mv.eps:.1e}")
    if not commutes:
        notes.append("Gamma C A != H C")
    if not h_ok:
        notes.append("H sign condition fails")
    return Property1Verdict(mv.ok and commutes and h_ok, mv, commutes, h_ok, "; ".join(notes))


@dataclass(frozen=True)
class LDSVerdict:
    ok: bool
    GammaBar: np.ndarray  # diagonal entries
    margin: float  # lambda_min(Gbar M + M' Gbar)


def _lds_objective(M, g):
    G = np.diag(g)
    return densemat.lambda_min(G @ M + M.T @ G)


def check_lds(Mx, seed=0, starts=50, iters=200, eps_pd=1e-8):
    """Search a positive diagonal ``Gbar`` making ``Gbar M + M' Gbar`` positive definite.

    Coordinate ascent in log-coordinates on ``lambda_min``, trace normalized to
    ``p``, from the identity and up to ``starts - 1`` random points (stopping
    at the first start that certifies). Failure is a
    "not certified" verdict; the search is heuristic beyond ``p = 2``.
    """
    M = densemat.as_matrix(Mx, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionError("LDS test needs a square matrix")
    p = M.shape[0]
    if p == 1:
        g = np.ones(1)
        val = _lds_objective(M, g)
        return LDSVerdict(val > eps_pd, g, val)
    rng = np.random.default_rng(seed)

    def normalize(theta):
        g = np.exp(theta)
        return g * p / g.sum()

    best_g, best_val = None, -math.inf
    for s in range(starts):
        theta = np.zeros(p) if s == 0 else rng.normal(0.0, 1.0, p)
        g = normalize(theta)
        theta = np.log(g)
        val = _lds_objective(M, g)
        step = 0.5
        for _ in range(iters):
            improved = False
            for i in range(p):
                for d in (step, -step):
                    th = theta.copy()
                    th[i] += d
                    g2 = normalize(th)
                    v2 = _lds_objective(M, g2)
                    if v2 > val:
                        theta, g, val, improved = np.log(g2), g2, v2, True
                        break
            if not improved:
                step *= 0.5
                if step < 1e-7:
                    break
        if val > best_val:
            best_g, best_val = g, val
        if best_val > eps_pd:
            break
    return LDSVerdict(bool(best_val > eps_pd), best_g, float(best_val))


def verify_lds_witness(Mx, gamma_bar, eps_pd=1e-8):
    """Independent recomputation of the LDS margin for a given witness."""
    M = densemat.as_matrix(Mx)
    g = np.asarray(gamma_bar, dtype=float)
    if np.any(g <= 0):
        return False, -math.inf
    val = _lds_objective(M, g)
    return bool(val > eps_pd), float(val)


def check_property2(sys, seed=0, samples=10_000):
    """Structural conditions of the neural-network class; raises on failure."""
    A = sys.A
    if not (densemat.is_diagonal(A) and np.all(np.diag(A) < 0)):
        raise HypothesisError("A must be diagonal with negative diagonal entries")
    if sys.C.shape != (sys.n, sys.n) or np.any(sys.C != np.eye(sys.n)):
        raise HypothesisError("C must be the identity")
    if not np.all(np.isinf(sys.zeta)):
        raise HypothesisError("every sector constant must be +inf")
    for i, f in enumerate(sys.psi):
        if not pwfun.is_nondecreasing(f, sys.sector_range, samples):
            raise HypothesisError(f"psi_{i + 1} is not nondecreasing")
        if not f.discontinuous_at_origin():
            raise HypothesisError(f"psi_{i + 1} is not discontinuous at the origin")
        if not pwfun.check_sector(f, math.inf, sys.sector_range, samples).ok:
            raise HypothesisError(f"psi_{i + 1} violates the sector condition")
    lds = check_lds(sys.B, seed=seed)
    if not lds.ok:
        raise HypothesisError("B is not Lyapunov diagonally stable (no witness found)")
    return lds


def lemma4_certificate(sys, seed=0):
    """Constructive certificate for the alternative inequality on neural-network systems.

    ``Gamma`` is the LDS witness of ``B`` scaled until ``Gamma A <= -I``;
    ``P = I / alpha`` with ``alpha`` doubled from 1 until the Schur complement
    ``alpha 2A + B Sigma^{-1} B'`` is negative definite, ``Sigma = Gamma B +
    (Gamma B)'``. ``eta`` is half the distance of the resulting block matrix
    to zero and ``H = Gamma A``. Returns the certificate (``kind="eq15+H"``).
    """
    lds = check_property2(sys, seed=seed)
    A, B = sys.A, sys.B
    a = np.diag(A)
    g = lds.GammaBar * max(1.0, float(np.max(1.0 / (lds.GammaBar * np.abs(a)))))
    G = np.diag(g)
    Sigma = G @ B + (G @ B).T
    Pi = 2.0 * A
    BSB = B @ densemat.inverse(Sigma) @ B.T
    BSB = 0.5 * (BSB + BSB.T)
    alpha = 1.0
    for _ in range(200):
        S = alpha * Pi + BSB
        if densemat.lambda_max(S) < -1e-9 * max(1.0, alpha):
            break
        alpha *= 2.0
    else:
        raise HypothesisError("no scaling alpha found")
    P = np.eye(sys.n) / alpha
    Mt = np.block([[P @ A + A.T @ P, P @ B], [B.T @ P, -Sigma]])
    lam = densemat.lambda_max(0.5 * (Mt + Mt.T))
    if lam >= 0:
        raise HypothesisError("constructed block matrix is not negative definite")
    return Certificate(P, G, -lam / 2.0, EQ15H, G @ A)


def search_certificate(sys, Gamma=None, seed=0, iters=3000, scale=1.0):
    """Best-effort random search for an ``eq8`` certificate.

    Minimizes ``lambda_max(M)`` at ``eta = 0`` over a Cholesky factor of ``P``
    (and ``log Gamma`` unless fixed), then picks the largest ``eta`` keeping
    ``M <= 0``. No completeness claim. Returns ``(certificate or None,
    lambda_max at eta = 0)``.
    """
    rng = np.random.default_rng(seed)
    n, p = sys.n, sys.p
    tril = np.tril_indices(n)
    L = np.eye(n) * math.sqrt(scale)
    lg = np.zeros(p) if Gamma is None else np.log(np.diag(as_diagonal(Gamma, p)))

    def unpack(vec):
        Lm = np.zeros((n, n))
        Lm[tril] = vec[: len(tril[0])]
        P = Lm @ Lm.T + 1e-9 * np.eye(n)
        g = np.exp(vec[len(tril[0]):]) if Gamma is None else np.exp(lg)
        return P, g

    def cost(vec):
        P, g = unpack(vec)
        M = passivity_matrix(sys, P, g, 0.0)
        return densemat.lambda_max(M) / max(1.0, densemat.lambda_max(P))

    vec = np.concatenate([L[tril], lg if Gamma is None else []])
    val = cost(vec)
    step = 0.5
    for _ in range(iters):
        trial = vec + step * rng.normal(size=vec.size)
        v2 = cost(trial)
        if v2 < val:
            vec, val = trial, v2
        else:
            step = max(step * 0.995, 1e-4)
    P, g = unpack(vec)
    lam0 = densemat.lambda_max(passivity_matrix(sys, P, g, 0.0))
    if lam0 >= 0:
        return None, lam0
    lo, hi = 0.0, -lam0 + 1.0
    while densemat.lambda_max(passivity_matrix(sys, P, g, hi)) <= 0:
        hi *= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if densemat.lambda_max(passivity_matrix(sys, P, g, mid)) <= 0:
            lo = mid
        else:
            hi = mid
    if lo <= 0:
        return None, lam0
    return Certificate(P, g, lo, EQ8), lam0


# Classification ----------------------------------------------------------------


@dataclass
class StabilityReport:
    """Hypothesis verdicts and the resulting stability claims.

    Verdict values are ``True``, ``False`` or ``None`` (unknown). A claim is
    only ``True`` when the hypotheses of a matching theorem were verified, and
    only ``False`` where an equivalence result forces it.
    """

    sector_ok: bool
    sector_witnesses: list
    passivity_route: str
    passivity_ok: bool
    passivity_lambda_max: float
    passivity_eps: float
    lds_ok: bool
    gamma_bar: list
    lds_margin: float
    lds_reverified: bool
    discont_ok: bool
    C_invertible: bool
    finite_time: dict = None
    verdicts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _c_invertible(C):
    if C.shape[0] != C.shape[1]:
        return False
    try:
        densemat.inverse(C)
    except SingularMatrixError:
        return False
    return True


def classify(sys, cert=None, *, seed=0, eps=None, rel_eps=None, samples=10_000):
    """Run every hypothesis check and combine them into stability verdicts.

    Global asymptotic stability needs the sector condition and a passing
    certificate (either route). Output finite-time stability and SIoLAS add LDS
    of ``CB`` and discontinuity of every nonlinearity at 0; under those,
    state finite-time stability holds exactly when ``C`` is invertible.
    """
    notes = []
    sectors = sys.sector_verdicts(samples)
    sector_ok = all(v.ok for v in sectors)
    witnesses = [None if v.ok else list(v.witness) for v in sectors]

    route, pass_ok, lam, eps_used = "none", False, math.nan, math.nan
    if cert is not None:
        if cert.kind == EQ8:
            route = EQ8
            v = check_assumption2(sys, cert, eps=eps, rel_eps=rel_eps)
            pass_ok, lam, eps_used = v.ok, v.lambda_max, v.eps
            if v.detail:
                notes.append(v.detail)
        else:
            route = EQ15H
            v = check_property1(sys, cert)
            pass_ok, lam, eps_used = v.ok, v.matrix.lambda_max, v.matrix.eps
            if v.detail:
                notes.append(v.detail)
        if not pass_ok:
            notes.append(f"certificate ({route}) does not pass: lambda_max = {lam:.6g}, threshold {eps_used:.3g}")
    else:
        notes.append("no certificate supplied")

    CB = sys.C @ sys.B
    lds = check_lds(CB, seed=seed)
    reverified, margin = verify_lds_witness(CB, lds.GammaBar)
    lds_ok = lds.ok and reverified
    discont_ok = all(f.discontinuous_at_origin() for f in sys.psi)
    c_inv = _c_invertible(sys.C)

    gas = True if (sector_ok and pass_ok) else None
    assumption3 = lds_ok and gas is True and discont_ok
    verdicts = {
        "GAS": gas,
        "oGAS": True if gas else None,
        "SIoLAS": True if (sector_ok and assumption3) else None,
        "OFTS": True if (sector_ok and assumption3) else None,
        "SFTS": c_inv if (sector_ok and assumption3) else None,
    }

    ft = None
    if lds_ok and discont_ok:
        try:
            k = lyapunov.finite_time_constants(sys, lds.GammaBar)
            ft = asdict(k)
        except LureError as exc:
            notes.append(f"finite-time constants unavailable: {exc}")

    return StabilityReport(
        sector_ok=sector_ok,
        sector_witnesses=witnesses,
        passivity_route=route,
        passivity_ok=pass_ok,
        passivity_lambda_max=lam,
        passivity_eps=eps_used,
        lds_ok=lds_ok,
        gamma_bar=[float(g) for g in lds.GammaBar],
        lds_margin=margin,
        lds_reverified=reverified,
        discont_ok=discont_ok,
        C_invertible=c_inv,
        finite_time=ft,
        verdicts=verdicts,
        notes=notes,
    )
