"""JSON system configuration: loading with field-precise diagnostics, and dumping."""

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from . import pwfun
from .certify import EQ8, Certificate
from .errors import ConfigError, LureError
from .krasim import SimOptions
from .luresys import LureSystem
from .pwfun import Interval, PiecewiseFn, Segment, Term

_NUM = r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*"
_RELAY = re.compile(rf"relay\({_NUM},{_NUM}\)$")
_LINEAR = re.compile(rf"linear\({_NUM}\)$")


@dataclass
class LoadedConfig:
    system: LureSystem
    certificate: Certificate = None
    x0: np.ndarray = None
    sim: SimOptions = None
    rel_eps: float = None


def _number(v, field):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ConfigError(field, f"expected a number, got {v!r}")
    return float(v)


def _matrix(v, field, rows=None, cols=None):
    if not isinstance(v, list) or not v:
        raise ConfigError(field, "expected a non-empty list of rows")
    if not all(isinstance(r, list) for r in v):
        raise ConfigError(field, "every row must be a list")
    width = len(v[0])
    for i, r in enumerate(v):
        if len(r) != width:
            raise ConfigError(f"{field}[{i}]", f"row has {len(r)} entries, expected {width}")
    M = np.array([[_number(x, f"{field}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(v)])
    if rows is not None and M.shape[0] != rows:
        raise ConfigError(field, f"expected {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise ConfigError(field, f"expected {cols} columns, got {M.shape[1]}")
    return M


def _vector(v, field, size=None):
    if not isinstance(v, list):
        raise ConfigError(field, "expected a list")
    out = np.array([_number(x, f"{field}[{i}]") for i, x in enumerate(v)])
    if size is not None and out.size != size:
        raise ConfigError(field, f"expected {size} entries, got {out.size}")
    return out


def parse_nonlinearity(v, field):
    if isinstance(v, str):
        s = v.strip()
        if s == "sign":
            return pwfun.sign_fn()
        m = _RELAY.match(s)
        if m:
            return pwfun.relay(float(m.group(1)), float(m.group(2)))
        m = _LINEAR.match(s)
        if m:
            return pwfun.linear(float(m.group(1)))
        raise ConfigError(field, f"unknown preset {s!r} (use sign, relay(a,b) or linear(k))")
    if not isinstance(v, dict):
        raise ConfigError(field, "expected a preset string or an object")
    bps = [_number(b, f"{field}.breakpoints[{i}]") for i, b in enumerate(v.get("breakpoints", []))]
    segs_raw = v.get("segments")
    if not isinstance(segs_raw, list):
        raise ConfigError(f"{field}.segments", "expected a list of segments")
    if len(segs_raw) != len(bps) + 1:
        raise ConfigError(f"{field}.segments", f"expected {len(bps) + 1} segments, got {len(segs_raw)}")
    segs = []
    for k, sg in enumerate(segs_raw):
        sf = f"{field}.segments[{k}]"
        if not isinstance(sg, dict) or not isinstance(sg.get("terms"), list):
            raise ConfigError(sf, "expected an object with a 'terms' list")
        terms = []
        for j, t in enumerate(sg["terms"]):
            tf = f"{sf}.terms[{j}]"
            if not isinstance(t, dict) or "coef" not in t:
                raise ConfigError(tf, "expected an object with 'coef'")
            power = t.get("power", 0)
            if isinstance(power, bool) or not isinstance(power, int) or power < 0:
                raise ConfigError(f"{tf}.power", "expected a non-negative integer")
            terms.append(Term(_number(t["coef"], f"{tf}.coef"), power, _number(t.get("rate", 0.0), f"{tf}.rate")))
        if "interval" in sg:
            lo = -math.inf if k == 0 else bps[k - 1]
            hi = math.inf if k == len(bps) else bps[k]
            iv = sg["interval"]
            if not (isinstance(iv, list) and len(iv) == 2):
                raise ConfigError(f"{sf}.interval", "expected [lo, hi]")
            got = (_number(iv[0], f"{sf}.interval[0]") if iv[0] is not None else -math.inf,
                   _number(iv[1], f"{sf}.interval[1]") if iv[1] is not None else math.inf)
            if got != (lo, hi):
                raise ConfigError(f"{sf}.interval", f"does not match breakpoints, expected [{lo}, {hi}]")
        segs.append(Segment(tuple(terms)))
    pv = v.get("point_values")
    pv = None if pv is None else [_number(x, f"{field}.point_values[{i}]") for i, x in enumerate(pv)]
    try:
        return PiecewiseFn(tuple(bps), tuple(segs), None if pv is None else tuple(pv), v.get("name", ""))
    except LureError as exc:
        raise ConfigError(field, str(exc)) from exc


def parse_config(doc):
    """Build a :class:`LoadedConfig` from a parsed JSON tree."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected an object")
    for key in ("A", "B", "C", "nonlinearities"):
        if key not in doc:
            raise ConfigError(key, "missing")
    A = _matrix(doc["A"], "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ConfigError("A", f"must be square, got {A.shape[0]}x{A.shape[1]}")
    B = _matrix(doc["B"], "B", rows=n)
    p = B.shape[1]
    C = _matrix(doc["C"], "C", rows=p, cols=n)
    nl = doc["nonlinearities"]
    if not isinstance(nl, list) or len(nl) != p:
        raise ConfigError("nonlinearities", f"expected a list of {p} entries")
    psi = tuple(parse_nonlinearity(v, f"nonlinearities[{i}]") for i, v in enumerate(nl))
    zeta = _vector(doc["zeta"], "zeta", p) if "zeta" in doc else None
    if zeta is not None and np.any(~(zeta > 0)):
        raise ConfigError("zeta", "sector constants must be positive or 'inf'")
    rng = Interval(-10.0, 10.0)
    if "sector_range" in doc:
        lo, hi = _vector(doc["sector_range"], "sector_range", 2)
        if not lo < hi:
            raise ConfigError("sector_range", "lower bound must be below upper bound")
        rng = Interval(lo, hi)
    try:
        sys = LureSystem(A, B, C, psi, zeta, rng, doc.get("name", ""))
    except LureError as exc:
        raise ConfigError("<system>", str(exc)) from exc

    cert, rel_eps = None, None
    if doc.get("certificate") is not None:
        c = doc["certificate"]
        if not isinstance(c, dict):
            raise ConfigError("certificate", "expected an object")
        for key in ("P", "Gamma", "eta"):
            if key not in c:
                raise ConfigError(f"certificate.{key}", "missing")
        P = _matrix(c["P"], "certificate.P", rows=n, cols=n)
        G = c["Gamma"]
        G = _number(G, "certificate.Gamma") if not isinstance(G, list) else _vector(G, "certificate.Gamma", p)
        H = c.get("H")
        if H is not None:
            H = _number(H, "certificate.H") if not isinstance(H, list) else _vector(H, "certificate.H", p)
        eta = _number(c["eta"], "certificate.eta")
        try:
            cert = Certificate(P, G, eta, c.get("kind", EQ8), H)
        except LureError as exc:
            raise ConfigError("certificate", str(exc)) from exc
        if c.get("rel_eps") is not None:
            rel_eps = _number(c["rel_eps"], "certificate.rel_eps")

    x0, sim = None, SimOptions()
    if doc.get("sim") is not None:
        s = doc["sim"]
        if not isinstance(s, dict):
            raise ConfigError("sim", "expected an object")
        if "x0" in s:
            x0 = _vector(s["x0"], "sim.x0", n)
        kw = {}
        for key in ("horizon", "dt_max", "dt_min", "eps_surface", "eps_zero", "hold_window"):
            if key in s:
                kw[key] = _number(s[key], f"sim.{key}")
        tol = s.get("tolerances", {})
        if not isinstance(tol, dict):
            raise ConfigError("sim.tolerances", "expected an object")
        for key, val in tol.items():
            if key not in ("eps_surface", "eps_zero", "dt_min"):
                raise ConfigError(f"sim.tolerances.{key}", "unknown tolerance")
            kw[key] = _number(val, f"sim.tolerances.{key}")
        try:
            sim = SimOptions(**kw)
        except LureError as exc:
            raise ConfigError("sim", str(exc)) from exc
    return LoadedConfig(sys, cert, x0, sim, rel_eps)


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return parse_config(doc)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from exc
    return loads(text)


# Dumping ------------------------------------------------------------------------


def _num_out(v):
    return "inf" if math.isinf(v) else float(v)


def dump_nonlinearity(f):
    return {
        "name": f.name,
        "breakpoints": list(f.breakpoints),
        "segments": [{"terms": [{"coef": t.coef, "power": t.power, "rate": t.rate} for t in seg.terms]} for seg in f.segments],
        "point_values": list(f.point_values),
    }


def dump_config(system, certificate=None, x0=None, sim=None, rel_eps=None):
    """Inverse of :func:`parse_config` (presets are expanded to explicit pieces)."""
    doc = {
        "name": system.name,
        "A": system.A.tolist(),
        "B": system.B.tolist(),
        "C": system.C.tolist(),
        "nonlinearities": [dump_nonlinearity(f) for f in system.psi],
        "zeta": [_num_out(z) for z in system.zeta],
        "sector_range": [system.sector_range.lo, system.sector_range.hi],
    }
    if certificate is not None:
        c = {
            "P": certificate.P.tolist(),
            "Gamma": np.diag(certificate.Gamma).tolist(),
            "eta": certificate.eta,
            "kind": certificate.kind,
        }
        if certificate.H is not None:
            c["H"] = np.diag(certificate.H).tolist()
        if rel_eps is not None:
            c["rel_eps"] = rel_eps
        doc["certificate"] = c
    if x0 is not None or sim is not None:
        s = {}
        if x0 is not None:
            s["x0"] = np.asarray(x0, dtype=float).tolist()
        if sim is not None:
            s.update(horizon=sim.horizon, dt_max=sim.dt_max, dt_min=sim.dt_min,
                     eps_surface=sim.eps_surface, eps_zero=sim.eps_zero, hold_window=sim.hold_window)
        doc["sim"] = s
    return doc


def dumps(*args, **kwargs):
    return json.dumps(dump_config(*args, **kwargs), indent=2)
