"""Scalar piecewise continuous nonlinearities.

A :class:`PiecewiseFn` is described by strictly increasing breakpoints, one
closed-form expression per open segment (including the two unbounded tails)
and an explicit value at each breakpoint. Segment expressions are finite sums
of terms ``coef * s**power * exp(rate * s)``, which covers relays, the sign
function and exponential (Stribeck-like) friction laws while keeping exact
antiderivatives available.
"""

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Term:
    coef: float
    power: int = 0
    rate: float = 0.0

    def __post_init__(self):
        if int(self.power) != self.power or self.power < 0:
            raise ParameterError(f"term power must be a non-negative integer, got {self.power}")
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "coef", float(self.coef))
        object.__setattr__(self, "rate", float(self.rate))

    def __call__(self, s):
        if self.coef == 0.0:
            return 0.0
        val = self.coef * s**self.power
        if self.rate != 0.0:
            val *= math.exp(self.rate * s)
        return val

    def antiderivative(self, s):
        """A primitive of the term, evaluated at ``s``."""
        k, r, c = self.power, self.rate, self.coef
        if c == 0.0:
            return 0.0
        if r == 0.0:
            return c * s ** (k + 1) / (k + 1)
        # int s^k e^{rs} ds = e^{rs} sum_j (-1)^j k!/(k-j)! s^(k-j) / r^(j+1)
        acc = 0.0
        falling = 1.0
        for j in range(k + 1):
            acc += (-1) ** j * falling * s ** (k - j) / r ** (j + 1)
            falling *= k - j
        return c * math.exp(r * s) * acc


@dataclass(frozen=True)
class Segment:
    terms: tuple = ()

    def __call__(self, s):
        return float(sum(t(s) for t in self.terms))

    def integrate(self, a, b):
        """Exact integral of the expression over ``[a, b]``."""
        return float(sum(t.antiderivative(b) - t.antiderivative(a) for t in self.terms))


def segment(*terms):
    """Build a :class:`Segment` from ``Term`` objects or ``(coef, power, rate)`` tuples."""
    out = []
    for t in terms:
        out.append(t if isinstance(t, Term) else Term(*t))
    return Segment(tuple(out))


def const(c):
    return segment((c, 0, 0.0))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ParameterError(f"interval bounds out of order: [{self.lo}, {self.hi}]")

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __contains__(self, v):
        return self.lo <= v <= self.hi

    @property
    def degenerate(self):
        return self.lo == self.hi

    @property
    def width(self):
        return self.hi - self.lo


@dataclass(frozen=True, eq=False)
class Box:
    """Product of closed intervals, stored as two coordinate arrays."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).reshape(-1)
        hi = np.array(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ParameterError("box bounds have different lengths")
        if np.any(lo > hi):
            raise ParameterError("box bounds out of order")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_intervals(cls, intervals):
        return cls([iv.lo for iv in intervals], [iv.hi for iv in intervals])

    def __len__(self):
        return self.lo.size

    def __neg__(self):
        return Box(-self.hi, -self.lo)

    def __getitem__(self, i):
        return Interval(float(self.lo[i]), float(self.hi[i]))

    def contains(self, u, tol=0.0):
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    @property
    def free(self):
        """Indices of nondegenerate coordinates."""
        return np.flatnonzero(self.hi > self.lo)

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class PiecewiseFn:
    """Piecewise continuous scalar function.

    ``segments[k]`` is the expression on the k-th open interval: ``(-inf,
    b[0])``, ``(b[0], b[1])``, ..., ``(b[-1], inf)``. ``point_values`` default
    to 0 at every breakpoint.
    """

    breakpoints: tuple = ()
    segments: tuple = (Segment(),)
    point_values: tuple = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        if any(not math.isfinite(b) for b in bps):
            raise ParameterError("breakpoints must be finite")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ParameterError("breakpoints must be strictly increasing")
        segs = tuple(self.segments)
        if len(segs) != len(bps) + 1:
            raise ParameterError(f"expected {len(bps) + 1} segments for {len(bps)} breakpoints, got {len(segs)}")
        pv = self.point_values
        pv = (0.0,) * len(bps) if pv is None else tuple(float(v) for v in pv)
        if len(pv) != len(bps):
            raise ParameterError("one point value per breakpoint is required")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "point_values", pv)
        for k, b in enumerate(bps):
            for side in (segs[k], segs[k + 1]):
                if not math.isfinite(side(b)):
                    raise ParameterError(f"one-sided limit at breakpoint {b} is not finite")

    def segment_index(self, s):
        """Index of the open segment containing ``s`` (``s`` off the breakpoints)."""
        return bisect_right(self.breakpoints, s)

    def breakpoint_index(self, s):
        """Index of the breakpoint equal to ``s``, or ``None``."""
        k = bisect_left(self.breakpoints, s)
        if k < len(self.breakpoints) and self.breakpoints[k] == s:
            return k
        return None

    def __call__(self, s):
        return self.eval(s)

    def eval(self, s):
        s = float(s)
        k = self.breakpoint_index(s)
        if k is not None:
            return self.point_values[k]
        return self.segments[self.segment_index(s)](s)

    def eval_segment(self, k, s):
        """Continue the k-th segment expression to an arbitrary ``s``."""
        return self.segments[k](float(s))

    def one_sided_limits(self, s):
        s = float(s)
        k = self.breakpoint_index(s)
        if k is None:
            v = self.eval(s)
            return v, v
        return self.segments[k](s), self.segments[k + 1](s)

    def krasovskii(self, s):
        """Krasovskii regularization: the closed convex hull of nearby values."""
        s = float(s)
        k = self.breakpoint_index(s)
        if k is None:
            v = self.eval(s)
            return Interval(v, v)
        left, right = self.segments[k](s), self.segments[k + 1](s)
        v = self.point_values[k]
        return Interval(min(left, right, v), max(left, right, v))

    def integral(self, y):
        """Exact value of the integral of the function from 0 to ``y``."""
        y = float(y)
        if y == 0.0:
            return 0.0
        a, b, sign = (0.0, y, 1.0) if y > 0 else (y, 0.0, -1.0)
        cuts = [a] + [bp for bp in self.breakpoints if a < bp < b] + [b]
        total = 0.0
        for lo, hi in zip(cuts, cuts[1:]):
            k = self.segment_index(0.5 * (lo + hi))
            total += self.segments[k].integrate(lo, hi)
        return sign * total

    def discontinuous_at_origin(self):
        left, right = self.one_sided_limits(0.0)
        return left < 0.0 < right

    def neg(self):
        """The function ``s -> -f(s)``."""
        segs = tuple(Segment(tuple(Term(-t.coef, t.power, t.rate) for t in seg.terms)) for seg in self.segments)
        return PiecewiseFn(self.breakpoints, segs, tuple(-v for v in self.point_values))


@dataclass(frozen=True)
class SectorVerdict:
    ok: bool
    witness: tuple = None  # (y, psi(y)) at the worst violation
    worst: float = 0.0
    samples: int = 0


def _sector_points(f, lo, hi, samples):
    """Sample abscissae and function values: grid, breakpoints, one-sided limits."""
    ys = np.linspace(lo, hi, samples)
    pts = [(float(y), f.eval(y)) for y in ys]
    for b in f.breakpoints:
        if lo <= b <= hi:
            left, right = f.one_sided_limits(b)
            pts += [(b, f.eval(b)), (b, left), (b, right)]
    return pts


def check_sector(f, zeta, rng=Interval(-10.0, 10.0), samples=10_000):
    """Sampled verification of ``psi(y) (psi(y) - zeta y) <= 0``.

    With ``zeta = inf`` the condition reads ``-psi(y) y <= 0``. The grid, every
    breakpoint in range and both one-sided limits there are tested. This is a
    sampled check, not a proof.
    """
    if samples < 2:
        raise ParameterError("at least two samples are needed")
    if not isinstance(rng, Interval):
        rng = Interval(*rng)
    zeta = float(zeta)
    worst, witness = 0.0, None
    pts = _sector_points(f, rng.lo, rng.hi, samples)
    for y, v in pts:
        if math.isinf(zeta):
            g = -v * y
            scale = abs(v * y)
        else:
            g = v * (v - zeta * y)
            scale = v * v + abs(zeta * y * v)
        excess = g - 1e-12 * scale
        if excess > worst:
            worst, witness = excess, (y, v)
    return SectorVerdict(witness is None, witness, worst, len(pts))


def is_nondecreasing(f, rng=Interval(-10.0, 10.0), samples=10_000):
    """Sampled monotonicity check, including one-sided limits and point values."""
    if not isinstance(rng, Interval):
        rng = Interval(*rng)
    xs = sorted(set(np.linspace(rng.lo, rng.hi, samples).tolist()) | {b for b in f.breakpoints if rng.lo <= b <= rng.hi})
    seq = []
    for x in xs:
        k = f.breakpoint_index(x)
        if k is None:
            seq.append(f.eval(x))
        else:
            left, right = f.one_sided_limits(x)
            seq += [left, f.point_values[k], right]
    seq = np.asarray(seq)
    return bool(np.all(np.diff(seq) >= -1e-12 * (1.0 + np.abs(seq[:-1]))))


# Presets ---------------------------------------------------------------------


def sign_fn():
    return PiecewiseFn((0.0,), (const(-1.0), const(1.0)), (0.0,), name="sign")


def relay(pos, neg, at_zero=0.0):
    """Relay with value ``pos`` for s > 0 and ``neg`` for s < 0."""
    return PiecewiseFn((0.0,), (const(neg), const(pos)), (at_zero,), name=f"relay({pos:g},{neg:g})")


def linear(slope=1.0):
    return PiecewiseFn((), (segment((slope, 1, 0.0)),), (), name=f"linear({slope:g})")


def example1_psi():
    return relay(1.0, -0.25)
