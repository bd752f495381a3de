"""Lur'e system model, its Krasovskii regularization and loop transform."""

import math
from dataclasses import dataclass

import numpy as np

from . import pwfun
from .densemat import as_matrix
from .errors import DimensionError, ParameterError
from .pwfun import Box, Interval


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LureSystem:
    """``x' = A x + B u``, ``y = C x``, ``u = -psi(y)`` with decentralized ``psi``.

    ``zeta`` holds the sector slopes in ``(0, inf]``. ``sector_range`` is the
    interval over which sampled sector checks are run.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    psi: tuple
    zeta: np.ndarray = None
    sector_range: Interval = Interval(-10.0, 10.0)
    name: str = ""

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        B = as_matrix(B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        p = B.shape[1]
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape[0]}")
        if C.shape != (p, n):
            raise DimensionError(f"C must be {p}x{n}, got {C.shape}")
        psi = tuple(self.psi)
        if len(psi) != p:
            raise DimensionError(f"expected {p} nonlinearities, got {len(psi)}")
        zeta = np.full(p, math.inf) if self.zeta is None else np.array(self.zeta, dtype=float).reshape(-1)
        if zeta.shape != (p,):
            raise DimensionError(f"expected {p} sector constants, got {zeta.size}")
        if np.any(~(zeta > 0)):
            raise ParameterError("sector constants must lie in (0, inf]")
        rng = self.sector_range
        if not isinstance(rng, Interval):
            rng = Interval(*rng)
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "B", _readonly(B))
        object.__setattr__(self, "C", _readonly(C))
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "zeta", _readonly(zeta))
        object.__setattr__(self, "sector_range", rng)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    @property
    def Z(self):
        """``diag(1/zeta)`` with ``1/inf = 0``."""
        return np.diag([0.0 if math.isinf(z) else 1.0 / z for z in self.zeta])

    def output(self, x):
        return self.C @ np.asarray(x, dtype=float)

    def psi_box(self, x):
        """``Psi(Cx)``: the Krasovskii intervals of every channel."""
        y = self.output(x)
        return Box.from_intervals([f.krasovskii(yi) for f, yi in zip(self.psi, y)])

    def psi_value(self, x):
        y = self.output(x)
        return np.array([f.eval(yi) for f, yi in zip(self.psi, y)])

    def check_dims(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n:
            raise DimensionError(f"state must have {self.n} entries, got {x.size}")
        return x

    def sector_verdicts(self, samples=10_000):
        return [pwfun.check_sector(f, z, self.sector_range, samples) for f, z in zip(self.psi, self.zeta)]


@dataclass(frozen=True, eq=False)
class InclusionValue:
    """``F(x) = {drift + gain u : u in input_box}``."""

    drift: np.ndarray
    input_box: Box
    gain: np.ndarray

    def velocity(self, u):
        return self.drift + self.gain @ np.asarray(u, dtype=float)

    def component_ranges(self):
        """Exact per-coordinate range of ``F(x)`` (a box hull)."""
        g = self.gain
        lo = self.drift + np.sum(np.minimum(g * self.input_box.lo, g * self.input_box.hi), axis=1)
        hi = self.drift + np.sum(np.maximum(g * self.input_box.lo, g * self.input_box.hi), axis=1)
        return lo, hi


def inclusion_at(sys, x):
    x = sys.check_dims(x)
    return InclusionValue(sys.A @ x, -sys.psi_box(x), np.array(sys.B))


@dataclass(frozen=True, eq=False)
class LoopTransform:
    Gamma: np.ndarray
    Z: np.ndarray
    Cbar: np.ndarray
    Dbar: np.ndarray


def as_diagonal(G, p, name="Gamma"):
    """Accept a scalar, a vector of diagonal entries or a diagonal matrix."""
    g = np.array(G, dtype=float)
    if g.ndim == 0:
        g = np.full(p, float(g))
    if g.ndim == 2:
        if g.shape != (p, p) or np.any(g != np.diag(np.diag(g))):
            raise ParameterError(f"{name} must be a {p}x{p} diagonal matrix")
        g = np.diag(g).copy()
    if g.shape != (p,):
        raise DimensionError(f"{name} must have {p} diagonal entries")
    return np.diag(g)


def loop_transform(sys, Gamma):
    G = as_diagonal(Gamma, sys.p)
    if np.any(np.diag(G) <= 0):
        raise ParameterError("Gamma must have positive diagonal entries")
    Z = sys.Z
    return LoopTransform(G, Z, sys.C + G @ sys.C @ sys.A, G @ sys.C @ sys.B + Z)
