"""Builders for the reference systems: relay example, friction rotor, neural network."""

from dataclasses import dataclass

import numpy as np

from . import certify, pwfun
from .certify import Certificate
from .errors import HypothesisError, ParameterError
from .luresys import LureSystem
from .lyapunov import LyapunovData
from .pwfun import PiecewiseFn, segment


def build_example1():
    """Planar SISO system with an asymmetric relay; returns ``(system, LyapunovData)``."""
    A = [[-1.0, -1.0], [1.0, -1.0]]
    B = [[1.0], [0.0]]
    C = [[1.0, 0.0]]
    sys = LureSystem(A, B, C, (pwfun.example1_psi(),), name="example1")
    return sys, LyapunovData(np.eye(2), np.eye(1))


def example1_certificate():
    return Certificate(np.eye(2), np.eye(1), 1.0)


@dataclass(frozen=True)
class RotorParams:
    """Drill-string-like rotor data. Defaults are identified friction data plus a stabilizing gain."""

    b: float = 0.0
    f_u0: float = 0.38
    df_u: float = -0.006
    f_l0: float = 0.0009
    df_l: float = 0.68
    J_u: float = 0.4765
    J_l: float = 0.035
    k_u: float = 4.3228
    k_theta: float = 0.075
    q1: float = 2.4245
    q2: float = -0.0084
    q3: float = 0.05
    q4: float = 0.26
    K: tuple = (-12.8282, 3.7216, -8.4816)
    m: float = 0.052

    def __post_init__(self):
        for name in ("J_u", "J_l", "k_u", "k_theta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if len(self.K) != 3:
            raise ParameterError("K must have three entries")


ROTOR_P = np.array(
    [
        [0.5636, 0.0340, 0.3793],
        [0.0340, 0.0062, 0.0186],
        [0.3793, 0.0186, 0.2642],
    ]
)
ROTOR_GAMMA = 10.0
ROTOR_ETA = 8.492


def rotor_friction(params=RotorParams()):
    """Lower-disc friction plus the linear term ``m s``, as a piecewise function."""
    pr = params
    slope = pr.q4 + pr.m
    pos = segment((pr.f_l0, 0, 0.0), (pr.df_l - pr.f_l0, 0, -pr.q3), (slope, 1, 0.0))
    neg = segment((-pr.f_l0, 0, 0.0), (-(pr.df_l - pr.f_l0), 0, pr.q3), (slope, 1, 0.0))
    return PiecewiseFn((0.0,), (neg, pos), (0.0,), name="rotor-friction")


def rotor_matrices(params=RotorParams(), h2="lower"):
    """``(A, B, C)`` of the closed loop. ``h2`` picks the inertia dividing ``m``."""
    pr = params
    A_free = np.array(
        [
            [0.0, 1.0, -1.0],
            [-pr.k_theta / pr.J_u, -pr.b / pr.J_u, pr.b / pr.J_u],
            [pr.k_theta / pr.J_l, pr.b / pr.J_l, -pr.b / pr.J_l],
        ]
    )
    H1K = np.zeros((3, 3))
    H1K[1] = pr.k_u * np.asarray(pr.K, dtype=float) / pr.J_u
    if h2 == "lower":
        j = pr.J_l
    elif h2 == "upper":
        j = pr.J_u
    else:
        raise ParameterError(f"h2 must be 'lower' or 'upper', got {h2!r}")
    H2 = np.diag([0.0, 0.0, pr.m / j])
    A = A_free + H1K + H2
    B = np.array([[0.0], [0.0], [1.0 / pr.J_l]])
    C = np.array([[0.0, 0.0, 1.0]])
    return A, B, C


def build_rotor(params=RotorParams(), h2="lower"):
    A, B, C = rotor_matrices(params, h2)
    return LureSystem(A, B, C, (rotor_friction(params),), name="rotor")


def rotor_certificate():
    return Certificate(ROTOR_P, ROTOR_GAMMA, ROTOR_ETA)


CNN_A = np.array([[-1.0, 0.0], [0.0, -1.0]])
CNN_B = np.array([[1.0, 0.5], [-0.5, 1.0]])


def build_cnn(A=CNN_A, B=CNN_B, act=None, seed=0):
    """Neural-network system ``x' = A x - B psi(x)`` with one activation per coordinate.

    ``act`` is a single :class:`PiecewiseFn` reused on every coordinate or a
    sequence of them. The structural conditions are verified; a failure
    raises :class:`HypothesisError`.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if act is None:
        act = pwfun.sign_fn()
    acts = tuple(act) if isinstance(act, (list, tuple)) else (act,) * n
    sys = LureSystem(A, B, np.eye(n), acts, name="cnn")
    certify.check_property2(sys, seed=seed)
    return sys


@dataclass(frozen=True)
class Preset:
    system: LureSystem
    certificate: Certificate = None
    x0: np.ndarray = None
    horizon: float = 10.0
    rel_eps: float = None


def preset(name, seed=0):
    """Named presets used by the command line."""
    if name == "example1":
        sys, _ = build_example1()
        return Preset(sys, example1_certificate(), np.array([0.0, 0.2]), 5.0)
    if name == "rotor":
        # certificate entries are rounded to four decimals, hence the relative threshold
        return Preset(build_rotor(), rotor_certificate(), np.array([0.5, 1.0, 1.0]), 60.0, rel_eps=1e-2)
    if name == "cnn-demo":
        sys = build_cnn(seed=seed)
        try:
            cert = certify.lemma4_certificate(sys, seed=seed)
        except HypothesisError:
            cert = None
        return Preset(sys, cert, np.array([0.6, -0.4]), 5.0)
    raise ParameterError(f"unknown preset {name!r}; choose example1, rotor or cnn-demo")


PRESETS = ("example1", "rotor", "cnn-demo")
