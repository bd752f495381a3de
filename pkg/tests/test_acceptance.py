"""Acceptance gate: ten criteria at pinned tolerances, one PASS/FAIL line each."""

import time

import numpy as np
import pytest
from oracles import grid_box_max, quad_oracle, random_box_instance, random_fn

from lurefts import bench, certify, krasim, lyapunov
from lurefts.errors import StiffnessError
from lurefts.krasim import SimOptions
from lurefts.pwfun import Box


@pytest.fixture
def report(capsys):
    """Print one result line per criterion, even when the assertion fails."""

    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def _example1():
    sys, ly = bench.build_example1()
    return sys, ly


def _cnn():
    sys = bench.build_cnn()
    return sys, certify.lemma4_certificate(sys)


def _unit_ball(rng, n, count):
    pts = []
    for _ in range(count):
        d = rng.normal(size=n)
        pts.append(d / np.linalg.norm(d) * rng.uniform(0.1, 1.0) ** (1.0 / n))
    return pts


def _cnn_runs():
    sys, cert = _cnn()
    rng = np.random.default_rng(2024)
    opts = SimOptions(horizon=5.0)
    return sys, cert, [krasim.integrate(sys, x0, opts) for x0 in _unit_ball(rng, sys.n, 10)]


W_STARTS = ((0.05, 0.03), (-0.05, 0.03))


def _w_segment(sys, traj, mu):
    """Prefix of the trajectory inside the ball of radius mu and off ker C."""
    y = traj.outputs[:, 0]
    inside = (np.linalg.norm(traj.states, axis=1) < mu) & (np.abs(y) > 0)
    stop = len(inside) if inside.all() else int(np.argmin(inside))
    return traj.times[:stop], traj.states[:stop]


def test_c01_clarke_supremum(report):
    sys, ly = _example1()
    t0 = time.perf_counter()
    val = lyapunov.clarke_sup_directional(sys, ly, np.array([0.0, 0.5]))
    dt = time.perf_counter() - t0
    ok = abs(val - 0.125) <= 1e-12 and dt < 1.0
    report(1, ok, f"clarke sup at (0, 1/2) = {val!r}, expected 0.125; {dt * 1e3:.1f} ms")


def test_c02_empty_lie_set(report):
    sys, ly = _example1()
    at_surface = lyapunov.lie_derivative_set(sys, ly, np.array([0.0, 0.5]))
    at_origin = lyapunov.lie_derivative_set(sys, ly, np.zeros(2))
    ok = at_surface.empty and at_origin.kind == "singleton" and abs(at_origin.lo) <= 1e-12
    report(2, ok, f"set at (0, 1/2) = {at_surface}; set at origin = {at_origin}")


def test_c03_strict_decrease(report):
    sys, ly = _example1()
    g = np.linspace(-2.0, 2.0, 100)
    t0 = time.perf_counter()
    worst, count = -np.inf, 0
    for a in g:
        for b in g:
            x = np.array([a, b])
            if np.linalg.norm(x) < 1e-3:
                continue
            worst = max(worst, lyapunov.lie_sup_bound(sys, ly, x))
            count += 1
    dt = time.perf_counter() - t0
    ok = worst < 0 and dt < 10.0
    report(3, ok, f"max Lie bound over {count} grid points = {worst:.6g}; {dt:.2f} s")


def test_c04_rotor_certificate(report):
    sys = bench.build_rotor()
    t0 = time.perf_counter()
    v = certify.check_assumption2(sys, bench.rotor_certificate(), rel_eps=1e-2)
    dt = time.perf_counter() - t0
    ok = v.ok and v.P_lambda_min > 0 and dt < 1.0
    report(
        4,
        ok,
        f"lambda_max(M) = {v.lambda_max:.4g}, 1e-2 |M| = {v.eps:.4g}, "
        f"lambda_min(P) = {v.P_lambda_min:.3g}; {dt * 1e3:.1f} ms",
    )


def test_c05_rotor_output_finite_time(report):
    sys = bench.build_rotor()
    t0 = time.perf_counter()
    try:
        traj = krasim.integrate(sys, [0.5, 1.0, 1.0], SimOptions(horizon=60.0))
    except StiffnessError as exc:
        dt = time.perf_counter() - t0
        report(5, False, f"trajectory diverged: {exc}; {dt:.1f} s")
        return
    dt = time.perf_counter() - t0
    ft = krasim.detect_finite_time(traj, "output", eps=1e-6)
    final = float(np.linalg.norm(traj.states[-1]))
    ok = ft.status == "found" and traj.times[-1] >= 60.0 - 1e-9 and final > 1e-6 and dt < 30.0
    report(5, ok, f"output T = {ft.T} ({ft.status}), |x(60)| = {final:.3e}; {dt:.1f} s")


def test_c06_sliding_solution(report):
    sys, _ = _example1()
    traj = krasim.integrate(sys, [0.0, 0.2], SimOptions(horizon=5.0))
    exact = np.c_[np.zeros_like(traj.times), 0.2 * np.exp(-traj.times)]
    err = float(np.max(np.abs(traj.states - exact)))
    ok = err <= 1e-6 and traj.times[-1] >= 5.0 - 1e-12
    report(6, ok, f"max deviation from (0, 0.2 e^-t) on [0, 5] = {err:.3e}")


def test_c07_cnn_state_finite_time(report):
    sys, cert = _cnn()
    p1 = certify.check_property1(sys, cert)
    rep = certify.classify(sys, cert)
    _, _, runs = _cnn_runs()
    times = []
    for tr in runs:
        ft = krasim.detect_finite_time(tr, "state", eps=1e-6, hold=0.0)
        held = tr.status == "converged"
        times.append(ft.T if ft.status == "found" and held and ft.T < tr.horizon else None)
    ok = p1.ok and rep.verdicts["SFTS"] is True and all(t is not None for t in times)
    shown = ", ".join("none" if t is None else f"{t:.3f}" for t in times)
    report(7, ok, f"alternative inequality {p1.ok}, SFTS verdict {rep.verdicts['SFTS']}, T = [{shown}]")


def test_c08_lyapunov_monotone(report):
    checked, worst = 0, -np.inf
    sys, ly = _example1()
    trajs = [krasim.integrate(sys, [0.0, 0.2], SimOptions(horizon=5.0))]
    trajs += [krasim.integrate(sys, x0, SimOptions(horizon=5.0)) for x0 in W_STARTS]
    cases = [(sys, ly, tr) for tr in trajs]
    csys, cert, runs = _cnn_runs()
    cases += [(csys, cert.lyapunov_data(), tr) for tr in runs]
    for s, lyap, tr in cases:
        v = np.array([lyapunov.V(s, lyap, x) for x in tr.states])
        excess = v[1:] - v[:-1] - 1e-6 * (1.0 + v[:-1])
        worst = max(worst, float(excess.max()))
        checked += len(v) - 1
    # the rotor is left out: its certificate does not pass
    ok = worst <= 0
    report(8, ok, f"{len(cases)} certified trajectories, {checked} steps, worst excess {worst:.3e}")


def test_c09_w_decrease_rate(report):
    sys, _ = _example1()
    k = lyapunov.finite_time_constants(sys, [1.0])
    worst, segments = -np.inf, 0
    for x0 in W_STARTS:
        traj = krasim.integrate(sys, x0, SimOptions(horizon=2.0))
        t, xs = _w_segment(sys, traj, k.mu)
        if len(t) < 2:
            continue
        segments += 1
        w = np.array([lyapunov.W(sys, [1.0], x) for x in xs])
        bound = w[0] - k.c * k.omega * t + 1e-6
        worst = max(worst, float(np.max(w - bound)))
    ok = segments == len(W_STARTS) and worst <= 0
    report(9, ok, f"c = {k.c}, omega = {k.omega:.4g}, mu = {k.mu:.4g}; {segments} segments, worst excess {worst:.3e}")


def test_c10_oracle_equivalence(report):
    rng = np.random.default_rng(10)
    box_err = 0.0
    for j in range(100):
        Q, b, c0, lo, hi = random_box_instance(rng, 1 + j % 3)
        val = lyapunov.box_quad_max(Q, b, c0, Box(lo, hi))[0]
        box_err = max(box_err, abs(val - grid_box_max(Q, b, c0, lo, hi)))
    int_err = 0.0
    for _ in range(100):
        f = random_fn(rng)
        y = rng.uniform(-4, 4)
        int_err = max(int_err, abs(f.integral(y) - quad_oracle(f, y)))
    ok = box_err <= 1e-6 and int_err <= 1e-8
    report(10, ok, f"box max vs grid: {box_err:.2e}; integral vs quadrature: {int_err:.2e}")
