"""Simulation of Krasovskii solutions with sliding modes.

Between switching surfaces the flow is integrated with classical RK4 using the
closed-form expression of the active segment of each nonlinearity. Crossings
of ``C_i x`` through a breakpoint are located by bisection on the step length.
On a surface, the equivalent control ``u_I`` solving ``(C(Ax + Bu))_I = 0`` is
computed; if it lies in the Krasovskii set the motion slides, otherwise the
channel leaves on the side whose vector field points away from the surface.
"""

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import densemat
from .errors import ParameterError, SingularMatrixError, StiffnessError

log = logging.getLogger(__name__)

BELOW, ABOVE = -1, 1


@dataclass(frozen=True)
class SimOptions:
    dt_max: float = 1e-3
    dt_min: float = 1e-12
    eps_surface: float = 1e-9
    eps_zero: float = 1e-6
    horizon: float = 10.0
    hold_window: float = None  # default: 10% of the horizon
    max_stalls: int = 10_000

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_max:
            raise ParameterError("need 0 < dt_min <= dt_max")
        if self.eps_surface <= 0 or self.eps_zero <= 0:
            raise ParameterError("tolerances must be positive")
        if self.horizon <= 0:
            raise ParameterError("horizon must be positive")
        if self.hold_window is None:
            object.__setattr__(self, "hold_window", 0.1 * self.horizon)
        if self.hold_window < 0:
            raise ParameterError("hold_window must be nonnegative")


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    modes: list
    controls: np.ndarray
    horizon: float
    status: str = "horizon"
    events: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def mode_bitmask(self, k):
        return sum(1 << i for i in self.modes[k])

    def to_csv(self, path_or_file):
        """Write ``t,x1..xn,y1..yp,mode_bitmask``, one row per accepted step."""
        n = self.states.shape[1]
        p = self.outputs.shape[1]
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(p)] + ["mode_bitmask"]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(len(self.times)):
                w.writerow([repr(float(self.times[k]))] + [repr(float(v)) for v in self.states[k]]
                           + [repr(float(v)) for v in self.outputs[k]] + [self.mode_bitmask(k)])
        finally:
            if own:
                fh.close()


def read_csv(path):
    """Load a trajectory CSV back into arrays ``(t, x, y, mask)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    n = sum(1 for h in header if h.startswith("x"))
    p = sum(1 for h in header if h.startswith("y"))
    return body[:, 0], body[:, 1:1 + n], body[:, 1 + n:1 + n + p], body[:, -1].astype(int)


class _Mode:
    """Active configuration: segment per off-surface channel, breakpoint per sliding channel."""

    def __init__(self, sys, seg, bp):
        self.sys = sys
        self.seg = tuple(seg)
        self.bp = tuple(bp)
        self.I = tuple(i for i, k in enumerate(bp) if k is not None)
        self.N = tuple(i for i, k in enumerate(bp) if k is None)
        self.CB = sys.C @ sys.B
        self.CA = sys.C @ sys.A
        self.inv = None
        if self.I:
            I = list(self.I)
            self.inv = densemat.inverse(self.CB[np.ix_(I, I)])  # may raise SingularMatrixError
            self.b_I = np.array([sys.psi[i].breakpoints[bp[i]] for i in self.I])
            self.C_I = sys.C[I]
            self.proj = self.C_I.T @ densemat.inverse(self.C_I @ self.C_I.T)
            self.kras = [sys.psi[i].krasovskii(sys.psi[i].breakpoints[bp[i]]) for i in self.I]

    @property
    def sliding(self):
        return frozenset(self.I)

    def control(self, x):
        sys = self.sys
        y = sys.C @ x
        u = np.zeros(sys.p)
        for i in self.N:
            u[i] = -sys.psi[i].eval_segment(self.seg[i], y[i])
        if self.I:
            I, N = list(self.I), list(self.N)
            rhs = -(self.CA @ x)[I] - self.CB[np.ix_(I, N)] @ u[N]
            u[I] = self.inv @ rhs
        return u

    def field(self, x):
        u = self.control(x)
        return self.sys.A @ x + self.sys.B @ u

    def project(self, x):
        if not self.I:
            return x
        return x - self.proj @ (self.C_I @ x - self.b_I)

    def slide_margin(self, u):
        """Smallest distance of the equivalent control inside its Krasovskii set."""
        m = math.inf
        for j, i in enumerate(self.I):
            iv = self.kras[j]
            m = min(m, u[i] - (-iv.hi), (-iv.lo) - u[i])
        return m

    def crossed(self, y, eps):
        """Channels whose output left the closed segment by more than ``eps``."""
        out = []
        for i in self.N:
            bps = self.sys.psi[i].breakpoints
            k = self.seg[i]
            if k > 0 and y[i] < bps[k - 1] - eps:
                out.append((i, k - 1, BELOW))
            elif k < len(bps) and y[i] > bps[k] + eps:
                out.append((i, k, ABOVE))
        return out


def _u_tol(u):
    return 1e-12 * (1.0 + float(np.max(np.abs(u))))


def step_smooth(sys, x, dt, mode=None):
    """One classical RK4 step of ``x' = Ax - B psi(Cx)``.

    Off the switching set the active segment expression of every nonlinearity
    is used throughout the step.
    """
    x = sys.check_dims(x)
    if mode is None:
        y = sys.C @ x
        mode = _Mode(sys, [f.segment_index(yi) for f, yi in zip(sys.psi, y)], [None] * sys.p)
    return _rk4(mode.field, x, dt)


def _rk4(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class SlidingResult:
    feasible: bool
    u_eq: np.ndarray
    xdot: np.ndarray
    resolved: bool = True


def _nearest_breakpoint(f, y, eps):
    for b in f.breakpoints:
        if abs(y - b) <= eps:
            return b
    return y


def sliding_dynamics(sys, x, I, eps_surface=1e-9):
    """Equivalent control for sliding on the surfaces of channels ``I``.

    Channels outside ``I`` use their single-valued nonlinearity. The result is
    feasible when each solved ``u_i`` lies in ``-Psi_i(C_i x)``, outputs within
    ``eps_surface`` of a breakpoint being read as lying on it.
    """
    x = sys.check_dims(x)
    I = sorted(I)
    y = sys.C @ x
    for i in I:
        y[i] = _nearest_breakpoint(sys.psi[i], y[i], eps_surface)
    u = -np.array([f.eval(yi) for f, yi in zip(sys.psi, y)])
    if not I:
        return SlidingResult(True, u, sys.A @ x + sys.B @ u)
    N = [i for i in range(sys.p) if i not in I]
    CB = sys.C @ sys.B
    rhs = -(sys.C @ sys.A @ x)[I] - CB[np.ix_(I, N)] @ u[N]
    try:
        u[I] = densemat.solve(CB[np.ix_(I, I)], rhs)
    except SingularMatrixError:
        return SlidingResult(False, u, sys.A @ x + sys.B @ u, resolved=False)
    tol = _u_tol(u)
    feasible = all(-sys.psi[i].krasovskii(y[i]).hi - tol <= u[i] <= -sys.psi[i].krasovskii(y[i]).lo + tol for i in I)
    return SlidingResult(feasible, u, sys.A @ x + sys.B @ u)


class _Integrator:
    def __init__(self, sys, opts):
        self.sys = sys
        self.opts = opts
        self.events = []
        self._cache = {}

    def mode(self, seg, bp):
        key = (tuple(seg), tuple(bp))
        m = self._cache.get(key)
        if m is None:
            m = _Mode(self.sys, seg, bp)
            self._cache[key] = m
        return m

    def initial_mode(self, x):
        sys, eps = self.sys, self.opts.eps_surface
        y = sys.C @ x
        seg, surf = [], {}
        for i, f in enumerate(sys.psi):
            seg.append(f.segment_index(y[i]))
            for k, b in enumerate(f.breakpoints):
                if abs(y[i] - b) <= eps:
                    surf[i] = (k, 0)
        return self.select(x, seg, [None] * sys.p, surf)

    def select(self, x, seg, bp, surf, t=0.0):
        """Choose the mode at a point lying on the surfaces in ``surf``.

        ``surf`` maps channel -> (breakpoint index, approach direction), the
        direction being 0 for channels that were sliding. Candidates are
        ranked: unchanged behaviour first (arrivals cross, sliding channels
        keep sliding), then more sliding channels, then crossing in the
        approach direction.
        """
        sys = self.sys
        J = sorted(surf)
        seg = list(seg)
        bp = list(bp)
        for j in J:
            bp[j] = None
        if not J:
            return self.mode(seg, bp), x
        # land exactly on every surface in J
        tmp = self.mode(seg, [surf[i][0] if i in surf else None for i in range(sys.p)])
        x = tmp.project(x)
        candidates = []
        for r in range(len(J), -1, -1):
            for I in itertools.combinations(J, r):
                K = [j for j in J if j not in I]
                for sides in itertools.product((ABOVE, BELOW), repeat=len(K)):
                    default = all(
                        (surf[j][1] == 0 and j in I) or (surf[j][1] != 0 and j in K and sides[K.index(j)] == surf[j][1])
                        for j in J
                    )
                    along = sum(1 for j, s in zip(K, sides) if s == surf[j][1])
                    candidates.append((0 if default else 1, -len(I), -along, I, K, sides))
        candidates.sort(key=lambda c: c[:3])
        for _, _, _, I, K, sides in candidates:
            s2, b2 = list(seg), list(bp)
            for j in I:
                b2[j] = surf[j][0]
            for j, s in zip(K, sides):
                k = surf[j][0]
                s2[j] = k + 1 if s == ABOVE else k
            try:
                m = self.mode(s2, b2)
            except SingularMatrixError:
                continue
            u = m.control(x)
            if I and m.slide_margin(u) < -_u_tol(u):
                continue
            ydot = sys.C @ (sys.A @ x + sys.B @ u)
            if all(ydot[j] * s > 0 for j, s in zip(K, sides)):
                if K or I:
                    self.events.append((t, tuple(I), tuple(K), tuple(sides)))
                return m, x
        # nothing consistent: slide on all of J with the control clipped into the box
        log.warning("no consistent mode at t=%.6g; clipping equivalent control", t)
        self.events.append((t, tuple(J), (), ("clipped",)))
        b2 = list(bp)
        for j in J:
            b2[j] = surf[j][0]
        return _ClippedMode(sys, seg, b2), x


class _ClippedMode(_Mode):
    def control(self, x):
        u = super().control(x)
        for j, i in enumerate(self.I):
            iv = self.kras[j]
            u[i] = min(max(u[i], -iv.hi), -iv.lo)
        return u

    def slide_margin(self, u):
        return 0.0


def integrate(sys, x0, opts=None):
    """Integrate the regularized inclusion from ``x0``.

    Stops at ``opts.horizon`` or once ``|x| <= eps_zero`` has held for
    ``hold_window``. Raises :class:`StiffnessError` when the state stops being
    finite or event handling stalls below ``dt_min``.
    """
    opts = opts or SimOptions()
    x = np.array(sys.check_dims(x0), dtype=float)
    # divergence is reported through StiffnessError, not floating-point warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrate(sys, x, opts)


def _integrate(sys, x, opts):
    integ = _Integrator(sys, opts)
    mode, x = integ.initial_mode(x)
    t = 0.0
    times, states, modes, controls = [t], [x.copy()], [mode.sliding], [mode.control(x)]
    zero_since = 0.0 if np.linalg.norm(x) <= opts.eps_zero else None
    stalls = 0
    eps = opts.eps_surface
    status = "horizon"

    def event_at(m, xn):
        u = m.control(xn)
        crossed = m.crossed(sys.C @ xn, eps)
        lost = bool(m.I) and m.slide_margin(u) < -_u_tol(u)
        return crossed, lost

    while t < opts.horizon:
        h = min(opts.dt_max, opts.horizon - t)
        xn = mode.project(_rk4(mode.field, x, h))
        crossed, lost = event_at(mode, xn)
        if crossed or lost:
            lo, hi = 0.0, h
            x_hi = xn
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                xm = mode.project(_rk4(mode.field, x, mid))
                c_m, l_m = event_at(mode, xm)
                if c_m or l_m:
                    hi, x_hi, crossed, lost = mid, xm, c_m, l_m
                else:
                    lo = mid
                if hi - lo <= 1e-15 * max(1.0, t):
                    break
                if crossed and not lost and all(
                    abs((sys.C @ x_hi)[i] - sys.psi[i].breakpoints[k]) <= 2 * eps for i, k, _ in crossed
                ):
                    break
            h, xn = hi, x_hi
            # sliding channels stay candidates; selection drops those that lost feasibility
            surf = {i: (mode.bp[i], 0) for i in mode.I}
            for i, k, d in crossed:
                surf[i] = (k, d)
            stalls = stalls + 1 if h < opts.dt_min else 0
            if stalls > opts.max_stalls:
                raise StiffnessError(f"event handling stalled at t={t:.6g}", t, x)
            mode, xn = integ.select(xn, mode.seg, mode.bp, surf, t + h)
        if not np.all(np.isfinite(xn)):
            raise StiffnessError(f"state left the finite range at t={t + h:.6g}", t, x)
        t = t + h
        x = xn
        times.append(t)
        states.append(x.copy())
        modes.append(mode.sliding)
        controls.append(mode.control(x))
        if np.linalg.norm(x) <= opts.eps_zero:
            if zero_since is None:
                zero_since = t
            if t - zero_since >= opts.hold_window and opts.hold_window > 0:
                status = "converged"
                break
        else:
            zero_since = None
        if t >= opts.horizon:
            break
    states = np.array(states)
    return Trajectory(
        np.array(times), states, states @ sys.C.T, modes, np.array(controls), opts.horizon, status, integ.events
    )


@dataclass(frozen=True)
class FiniteTime:
    status: str  # "found" | "none" | "inconclusive"
    T: float = None


def detect_finite_time(traj, proj="output", eps=1e-6, hold=None):
    """Earliest grid time after which the projection stays within ``eps``.

    The bound must hold on every sample from ``T`` to the end of the
    trajectory, and at least ``hold`` seconds of trajectory must follow ``T``
    (default 10% of the horizon); otherwise the result is inconclusive.
    """
    if len(traj) == 0:
        raise ParameterError("empty trajectory")
    data = traj.outputs if proj == "output" else traj.states
    if proj not in ("output", "state"):
        raise ParameterError(f"unknown projection {proj!r}")
    hold = 0.1 * traj.horizon if hold is None else hold
    norms = np.linalg.norm(data, axis=1)
    bad = np.flatnonzero(norms > eps)
    if bad.size == 0:
        k = 0
    elif bad[-1] == len(norms) - 1:
        return FiniteTime("none")
    else:
        k = bad[-1] + 1
    T = float(traj.times[k])
    if traj.times[-1] - T < hold:
        return FiniteTime("inconclusive", T)
    return FiniteTime("found", T)
