"""Command line entry point ``occupancy``.

Exit status: 0 when every verdict passes, 1 when any fails, 2 on usage or
configuration errors.
"""
import argparse
import csv
import io
import json
import sys

from ._rng import stream
from .asymptotics import (PowerLawDiversity, limit_covariance, power_law_predictions,
                          predict_discovery, predict_mean, predict_residual, predict_unseen,
                          ratio_limit)
from .errors import OccupancyError
from .harness import ExperimentConfig, _clean, run_experiment
from .literals import parse_model
from .moments import moment_report
from .regvar import RegularVariationSpec, SlowVariation
from .sampler import discovery_process, run_fixed, run_poisson


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _common(p):
    p.add_argument("--model", help="model literal, e.g. geometric:q=0.5")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig; flags override")


def build_parser():
    parser = argparse.ArgumentParser(prog="occupancy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="exact moments of K and K_r")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--poisson", action="store_true")
    p.add_argument("--t", type=float)
    p.add_argument("--r", type=_ints, default=[1, 2, 3])

    p = sub.add_parser("simulate", help="Monte Carlo replications")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--poisson", action="store_true")
    p.add_argument("--t", type=float)
    p.add_argument("--stats", default="k,kr,s")
    p.add_argument("--r-max", type=int, default=3)
    p.add_argument("--k-max", type=int, default=100)

    p = sub.add_parser("predict", help="regular-variation predictions")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--ell", help="slowly varying factor as 'C,beta'")
    p.add_argument("--D", type=float)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r-max", type=int, default=3)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json",), default="json")

    for name, kind in (("verify", "mc_vs_exact"), ("clt", "clt"), ("trace", "trace"),
                       ("scan-variance", "scan_variance"), ("power-law", "power_law")):
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        _common(p)
        p.set_defaults(kind=kind)
        p.add_argument("--n", type=int)
        p.add_argument("--t", type=float)
        p.add_argument("--grid", type=lambda s: [float(v) for v in s.split(",")])
        p.add_argument("--r-max", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--inner-reps", type=int)
        p.add_argument("--tol", action="append", default=[],
                       help="tolerance override key=value (repeatable)")
    return parser


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _load_config(args):
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
    return base


def cmd_moments(args):
    model = parse_model(args.model)
    if args.poisson:
        rep = moment_report(model, t=args.t, rs=args.r)
    else:
        rep = moment_report(model, n=args.n, rs=args.r)
    if (args.format or "csv") == "json":
        return json.dumps(_clean(rep.to_dict()), indent=1) + "\n", True
    rows = [{"scheme": rep.scheme, "param": rep.param, "r": "", "phi": rep.phi, "var": rep.var,
             "bound": rep.truncation_bound}]
    for r in rep.phi_r:
        rows.append({"scheme": rep.scheme, "param": rep.param, "r": r, "phi": rep.phi_r[r],
                     "var": rep.var_r.get(r), "bound": rep.truncation_bound})
    return _csv(rows, ["scheme", "param", "r", "phi", "var", "bound"]), True


def cmd_simulate(args):
    model = parse_model(args.model)
    seed = args.seed or 0
    reps = args.reps or 1
    wanted = set(args.stats.split(","))
    fmt = args.format or "csv"
    if wanted & {"nk", "rk"}:
        rows = []
        for rep in range(reps):
            for row in discovery_process(model, args.k_max, stream(seed, rep)).rows():
                rows.append({"rep": rep, **row})
        cols = ["rep", "k", "N_k", "T_k", "p_tilde_k", "R_k"]
    else:
        rows = []
        for rep in range(reps):
            if args.poisson:
                st = run_poisson(model, args.t, stream(seed, rep))
                param = args.t
            else:
                st = run_fixed(model, args.n, stream(seed, rep))
                param = args.n
            row = {"rep": rep, "n_or_t": param, "N": st.n}
            if "k" in wanted:
                row["K"] = st.K
            if "kr" in wanted:
                for r in range(1, args.r_max + 1):
                    row[f"K_{r}"] = st.K_r(r)
            if "s" in wanted:
                row["S"] = st.S
            rows.append(row)
        cols = list(rows[0]) if rows else ["rep"]
    if fmt == "json":
        return json.dumps(_clean(rows), indent=1) + "\n", True
    return _csv(rows, cols), True


def cmd_predict(args):
    a = args.alpha
    if args.D is not None:
        spec = PowerLawDiversity(args.D, a).spec
    elif args.ell:
        C, beta = (float(v) for v in args.ell.split(","))
        spec = RegularVariationSpec(a, SlowVariation(C, beta))
    else:
        spec = RegularVariationSpec(a)
    out = {"alpha": a, "regime": spec.regime, "n": args.n, "k": args.k,
           "mean": {r: predict_mean(spec, args.n, r) for r in range(0, args.r_max + 1)}}
    if spec.regime == "proper":
        out["ratio_limit"] = {r: ratio_limit(a, r) for r in range(1, args.r_max + 1)}
        out["discovery"] = predict_discovery(spec, args.k)
        out["unseen"] = predict_unseen(spec, args.n)
        out["residual"] = predict_residual(spec, args.k)
        out["limit_covariance"] = limit_covariance(a, args.r_max).sigma
        if args.D is not None:
            out["power_law"] = power_law_predictions(args.D, a, args.n, args.k, args.r_max)
    return json.dumps(_clean(out), indent=1, sort_keys=True) + "\n", True


def _tol_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_experiment(args):
    d = _load_config(args)
    d.setdefault("kind", args.kind)
    overrides = {"model": args.model, "seed": args.seed, "reps": args.reps, "n": args.n,
                 "t": args.t, "grid": args.grid, "r_max": args.r_max, "k": args.k,
                 "inner_reps": args.inner_reps, "workers": args.workers, "out": args.out,
                 "format": args.format}
    for key, value in overrides.items():
        if value is not None:
            d[key] = value
    tol = dict(d.get("tolerances") or {})
    for item in args.tol:
        key, value = item.split("=", 1)
        tol[key] = _tol_value(value)
    d["tolerances"] = tol
    if "model" not in d:
        raise OccupancyError("an experiment needs --model or a config file with a model")
    if d["kind"] in ("mc_vs_exact", "clt", "power_law") and d.get("n") is None:
        raise OccupancyError("this experiment needs --n")
    config = ExperimentConfig.from_dict(d)
    summary = run_experiment(config)
    if config.format == "csv":
        stats = summary.stats
        if "checkpoints" in stats:
            rows = stats["checkpoints"]
        elif "grid" in stats:
            rows = stats["grid"]
        else:
            rows = [{"stat": k, **v} for k, v in stats.items()]
        cols = sorted({c for r in rows for c in r}, key=lambda c: (c not in ("stat", "n", "t"), c))
        return _csv(rows, cols), summary.verdict
    return summary.to_json() + "\n", summary.verdict


COMMANDS = {"moments": cmd_moments, "simulate": cmd_simulate, "predict": cmd_predict}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command in COMMANDS:
            if args.command != "predict":
                cfg = _load_config(args)
                for key in ("model", "seed", "reps", "n", "t", "format"):
                    if getattr(args, key, None) is None and key in cfg:
                        setattr(args, key, cfg[key])
                if args.model is None:
                    raise OccupancyError("--model is required")
            text, ok = COMMANDS[args.command](args)
        else:
            text, ok = cmd_experiment(args)
    except (OccupancyError, ValueError, OSError) as exc:
        print(f"occupancy: error: {exc}", file=sys.stderr)
        return 2
    _emit(text, getattr(args, "out", None))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
