"""Independent reference computations used by the tests."""

import itertools

import numpy as np
from scipy.integrate import quad

from lurefts import pwfun
from lurefts.pwfun import PiecewiseFn, Term


def quad_oracle(f, y):
    """Adaptive quadrature of ``f`` from 0 to ``y``, split at breakpoints."""
    a, b = sorted((0.0, y))
    cuts = [a] + [c for c in f.breakpoints if a < c < b] + [b]
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        k = f.segment_index(0.5 * (lo + hi))
        total += quad(f.segments[k], lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return total if y >= 0 else -total


def random_fn(rng, nbp=None):
    nbp = rng.integers(0, 4) if nbp is None else nbp
    bps = np.sort(rng.uniform(-3, 3, nbp))
    segs = []
    for _ in range(nbp + 1):
        terms = [Term(rng.normal(), int(rng.integers(0, 3)), float(rng.choice([0.0, rng.uniform(-1, 1)])))
                 for _ in range(rng.integers(1, 4))]
        segs.append(pwfun.Segment(tuple(terms)))
    return PiecewiseFn(tuple(bps), tuple(segs), tuple(rng.normal(size=nbp)))


def grid_box_max(Q, b, c0, lo, hi, n0=41, rounds=40, keep=6):
    """Dense grid search with zoom refinement around the best cells."""
    p = len(lo)
    Q = 0.5 * (Q + Q.T)

    def evaluate(pts):
        return np.einsum("ki,ij,kj->k", pts, Q, pts) + pts @ b + c0

    axes = [np.linspace(lo[i], hi[i], n0) if hi[i] > lo[i] else np.array([lo[i]]) for i in range(p)]
    pts = np.array(list(itertools.product(*axes)))
    vals = evaluate(pts)
    best = vals.max()
    for start in pts[np.argsort(vals)[-keep:]]:
        centre = start.copy()
        width = (hi - lo) / (n0 - 1)
        for _ in range(rounds):
            ax = [np.clip(centre[i] + np.linspace(-width[i], width[i], 9), lo[i], hi[i]) for i in range(p)]
            cand = np.array(list(itertools.product(*ax)))
            v = evaluate(cand)
            k = int(np.argmax(v))
            centre = cand[k]
            best = max(best, v[k])
            width = width / 3.0
    return best


def random_box_instance(rng, p):
    Q = rng.normal(size=(p, p))
    b = rng.normal(size=p)
    lo = rng.uniform(-2, 0, p)
    hi = lo + rng.uniform(0.1, 3, p)
    if p > 1 and rng.uniform() < 0.3:
        hi[0] = lo[0]  # degenerate coordinate
    return Q, b, float(rng.normal()), lo, hi
