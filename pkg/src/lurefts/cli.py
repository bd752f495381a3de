"""Command line: certify, simulate, analyze-point, report."""

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace

import numpy as np

from . import bench, certify, config, krasim, lyapunov
from .errors import ConfigError, LureError, StiffnessError

log = logging.getLogger("lurefts")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parse_vec(text, flag):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(flag, f"expected comma-separated numbers, got {text!r}") from None


def _load(args):
    if bool(args.preset) == bool(args.config):
        raise ConfigError("--preset/--config", "give exactly one of them")
    if args.preset:
        try:
            pr = bench.preset(args.preset, seed=args.seed)
        except LureError as exc:
            raise ConfigError("--preset", str(exc)) from exc
        cfg = config.LoadedConfig(pr.system, pr.certificate, pr.x0, krasim.SimOptions(horizon=pr.horizon), pr.rel_eps)
    else:
        cfg = config.load(args.config)
    if getattr(args, "horizon", None) is not None:
        if not args.horizon > 0:
            raise ConfigError("--horizon", "must be positive")
        cfg.sim = replace(cfg.sim, horizon=args.horizon, hold_window=None)
    if getattr(args, "x0", None) is not None:
        x0 = _parse_vec(args.x0, "--x0")
        if x0.size != cfg.system.n:
            raise ConfigError("--x0", f"expected {cfg.system.n} entries, got {x0.size}")
        cfg.x0 = x0
    return cfg


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def certify_report(cfg, seed=0):
    rep = certify.classify(cfg.system, cfg.certificate, seed=seed, rel_eps=cfg.rel_eps)
    doc = _jsonable(rep.to_dict())
    doc["system"] = cfg.system.name
    return doc


def format_report(doc):
    lines = [f"system: {doc.get('system') or '<config>'}"]
    lines.append(f"sector condition: {'pass' if doc['sector_ok'] else 'FAIL'}")
    lines.append(
        f"passivity ({doc['passivity_route']}): {'pass' if doc['passivity_ok'] else 'FAIL'}"
        f"  lambda_max = {doc['passivity_lambda_max']}  threshold = {doc['passivity_eps']}"
    )
    lines.append(f"LDS of CB: {'pass' if doc['lds_ok'] else 'FAIL'}  witness = {doc['gamma_bar']}  margin = {doc['lds_margin']}")
    lines.append(f"discontinuous at 0: {doc['discont_ok']}   C invertible: {doc['C_invertible']}")
    if doc.get("finite_time"):
        ft = doc["finite_time"]
        lines.append("finite-time constants: " + ", ".join(f"{k}={ft[k]:.6g}" for k in ("c", "nu", "mu", "lambda1", "lambda2", "omega")))
    verdict = {True: "true", False: "false", None: "unknown"}
    lines.append("verdicts: " + "  ".join(f"{k}={verdict[v]}" for k, v in doc["verdicts"].items()))
    lines += [f"note: {n}" for n in doc["notes"]]
    return "\n".join(lines)


def _write_json(doc, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_certify(args):
    cfg = _load(args)
    doc = certify_report(cfg, args.seed)
    print(format_report(doc))
    if args.out:
        _write_json(doc, args.out)
    return EXIT_OK


def _lyap(cfg):
    if cfg.certificate is None:
        raise ConfigError("certificate", "required for this command")
    return cfg.certificate.lyapunov_data()


def simulate_summary(cfg, x0):
    traj = krasim.integrate(cfg.system, x0, cfg.sim)
    out_ft = krasim.detect_finite_time(traj, "output")
    st_ft = krasim.detect_finite_time(traj, "state")
    summary = {
        "x0": list(map(float, x0)),
        "status": traj.status,
        "final_time": float(traj.times[-1]),
        "final_norm": float(np.linalg.norm(traj.states[-1])),
        "output_T": asdict(out_ft),
        "state_T": asdict(st_ft),
        "steps": len(traj),
    }
    if cfg.certificate is not None:
        summary["final_V"] = lyapunov.V(cfg.system, cfg.certificate.lyapunov_data(), traj.states[-1])
    return traj, summary


def _fmt_ft(ft):
    return f"T = {ft['T']:.6g}" if ft["status"] == "found" else ft["status"]


def format_summary(s):
    parts = [
        f"x0 = {s['x0']}",
        f"output: {_fmt_ft(s['output_T'])}",
        f"state: {_fmt_ft(s['state_T'])}",
        f"|x(end)| = {s['final_norm']:.3e}",
    ]
    if "final_V" in s:
        parts.append(f"V(end) = {s['final_V']:.3e}")
    return "  ".join(parts)


def _batch_one(payload):
    cfg, x0 = payload
    try:
        return simulate_summary(cfg, x0)[1]
    except StiffnessError as exc:
        return {"x0": list(map(float, x0)), "error": str(exc)}


def cmd_simulate(args):
    cfg = _load(args)
    if args.batch:
        rng = np.random.default_rng(args.seed)
        starts = []
        for _ in range(args.batch):
            d = rng.normal(size=cfg.system.n)
            starts.append(d / np.linalg.norm(d) * rng.uniform() ** (1.0 / cfg.system.n))
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_batch_one, [(cfg, x) for x in starts]))
        failed = False
        for r in results:
            if "error" in r:
                failed = True
                print(f"x0 = {r['x0']}  error: {r['error']}")
            else:
                print(format_summary(r))
        if args.out:
            _write_json(_jsonable(results), args.out)
        return EXIT_NUMERIC if failed else EXIT_OK
    if cfg.x0 is None:
        raise ConfigError("x0", "no initial state in the config; pass --x0")
    try:
        traj, summary = simulate_summary(cfg, cfg.x0)
    except StiffnessError as exc:
        print(f"numerical failure: {exc}; last state {exc.state} at t={exc.time}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        traj.to_csv(args.out)
    print(format_summary(summary))
    return EXIT_OK


def analyze_point(cfg, x):
    lyap = _lyap(cfg)
    sysm = cfg.system
    x = sysm.check_dims(x)
    return {
        "x": x.tolist(),
        "V": lyapunov.V(sysm, lyap, x),
        "clarke_sup": lyapunov.clarke_sup_directional(sysm, lyap, x),
        "lie_sup_bound": lyapunov.lie_sup_bound(sysm, lyap, x),
        "lie_set": str(lyapunov.lie_derivative_set(sysm, lyap, x)),
    }


def cmd_analyze_point(args):
    cfg = _load(args)
    if args.x0 is None and cfg.x0 is None:
        raise ConfigError("--x0", "a point is required")
    res = analyze_point(cfg, cfg.x0)
    for k in ("V", "clarke_sup", "lie_sup_bound"):
        print(f"{k}: {res[k]:.12g}")
    print(f"lie_set: {res['lie_set']}")
    if args.out:
        _write_json(_jsonable(res), args.out)
    return EXIT_OK


def cmd_report(args):
    """Certification plus, when an initial state is known, one simulation."""
    cfg = _load(args)
    doc = {"certify": certify_report(cfg, args.seed)}
    print(format_report(doc["certify"]))
    code = EXIT_OK
    if cfg.x0 is not None:
        try:
            _, summary = simulate_summary(cfg, cfg.x0)
            doc["simulation"] = summary
            print(format_summary(summary))
        except StiffnessError as exc:
            doc["simulation"] = {"x0": cfg.x0.tolist(), "error": str(exc)}
            print(f"numerical failure: {exc}", file=sys.stderr)
            code = EXIT_NUMERIC
    if args.out:
        _write_json(_jsonable(doc), args.out)
    return code


def build_parser():
    parser = argparse.ArgumentParser(prog="lurefts", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, x0_help="initial state, comma separated"):
        p.add_argument("--preset", choices=bench.PRESETS)
        p.add_argument("--config", help="JSON system description")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file")
        p.add_argument("--x0", help=x0_help)
        p.add_argument("--horizon", type=float)

    p = sub.add_parser("certify", help="check hypotheses and classify stability")
    common(p)
    p.set_defaults(func=cmd_certify)
    p = sub.add_parser("simulate", help="integrate one trajectory (CSV to --out)")
    common(p)
    p.add_argument("--batch", type=int, default=0, help="simulate N random starts in the unit ball in parallel")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("analyze-point", help="Lyapunov quantities at one state")
    common(p, "the state to analyze")
    p.set_defaults(func=cmd_analyze_point)
    p = sub.add_parser("report", help="certification and simulation in one document")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StiffnessError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
