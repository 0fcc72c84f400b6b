"""Command-line interface.

Subcommands: simulate, forecast, reconcile, score, experiment.
Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basefc import MAX_ORDER, forecast_panel
from .covariance import KhMode, estimate_covariance
from .errors import NumericalError, ValidationError
from .experiment import ExperimentConfig, format_table, run_experiment, summarize
from .hierarchy import build_summing_matrix
from .io import (
    fmt,
    ingest_base_forecasts,
    read_actuals,
    read_hierarchy,
    read_panel,
    read_reconciled,
    write_forecasts,
    write_panel,
    write_reconciled,
    write_residuals,
    write_scores,
)
from .reconcile import Method, reconcile
from .scoring import DEFAULT_SAMPLES, derive_seed, energy_score_gaussian
from .synth import SynthConfig, simulate_hierarchy, synthetic_hierarchy

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _methods(values):
    out = []
    for v in values:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            if part.lower() == "all":
                out.extend(Method)
            else:
                out.append(Method.parse(part))
    seen = []
    for m in out:
        if m not in seen:
            seen.append(m)
    return seen


def cmd_simulate(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = synthetic_hierarchy()
    (out / "hierarchy.json").write_text(spec.to_json() + "\n")
    manifest = {"T": args.T, "seed": args.seed, "replicates": args.replicates,
                "names": list(spec.names), "panels": []}
    for r in range(args.replicates):
        seed = derive_seed(args.seed, "replicate", r)
        panel, phi = simulate_hierarchy(SynthConfig(T=args.T, seed=seed))
        name = f"panel_{r:04d}.csv"
        write_panel(out / name, panel)
        manifest["panels"].append(
            {"file": name, "replicate": r, "seed": seed,
             "phi": dict(zip(spec.bottom_names, phi.tolist()))}
        )
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.replicates} panel(s) to {out}")
    return EXIT_OK


def cmd_forecast(args):
    summing = build_summing_matrix(read_hierarchy(args.hierarchy))
    panel = read_panel(args.input, summing)
    base, resid = forecast_panel(panel, summing, p=args.order, H=args.horizon)
    write_forecasts(args.out_forecasts, base)
    write_residuals(args.out_residuals, resid)
    print(f"forecast {summing.m} series, H={args.horizon}, {resid.N} residual rows")
    return EXIT_OK


def cmd_reconcile(args):
    summing = build_summing_matrix(read_hierarchy(args.hierarchy))
    base, resid = ingest_base_forecasts(args.forecasts, args.residuals, summing)
    kh_mode = KhMode.parse(args.kh)
    cov = estimate_covariance(resid, summing.n, kh_mode=kh_mode, jitter=args.jitter)
    H = base.H if args.horizon is None else args.horizon
    if not 1 <= H <= base.H:
        raise ValidationError(f"--horizon {H} outside 1..{base.H} available in {args.forecasts}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for method in _methods(args.method):
        for h in range(1, H + 1):
            dist = reconcile(method, base.row(h), cov, summing, h, kh_mode)
            write_reconciled(out / f"{method.value.lower()}_h{h}.json", dist)
            written += 1
    print(f"wrote {written} reconciled distribution(s) to {out} (lambda={cov.shrink_lambda:.4f})")
    return EXIT_OK


def cmd_score(args):
    dists = [read_reconciled(p) for p in args.reconciled]
    rows = []
    cache = {}
    for path, dist in zip(args.reconciled, dists):
        key = tuple(dist.names)
        if key not in cache:
            cache[key] = read_actuals(args.actuals, dist.names)
        actuals = cache[key]
        if not 1 <= dist.h <= actuals.shape[0]:
            raise ValidationError(
                f"{args.actuals}: no actuals row for h={dist.h} (needed by {path})"
            )
        seed = derive_seed(args.seed, "score", args.replicate, dist.h, dist.method.value,
                           dist.kh_mode.value)
        rep = energy_score_gaussian(dist, actuals[dist.h - 1], args.samples, seed)
        rows.append((rep.method, rep.h, args.replicate, rep.energy_score, rep.seed))
    rows.sort(key=lambda r: (r[1], r[0]))
    write_scores(args.out, rows)
    for method, h, _, es, _ in rows:
        print(f"{method:>6} h={h}  ES={fmt(es)}")
    return EXIT_OK


def cmd_experiment(args):
    modes = [KhMode.ONE, KhMode.H] if args.kh == "both" else [KhMode.parse(args.kh)]
    out = Path(args.out)
    for mode in modes:
        config = ExperimentConfig(
            replicates=args.replicates,
            T=args.T,
            H=args.horizon,
            kh_mode=mode,
            methods=tuple(_methods(args.methods)),
            ar_order=args.order,
            samples=args.samples,
            seed=args.seed,
            out_dir=str(out / f"kh_{mode.value}") if len(modes) > 1 else str(out),
            workers=args.workers,
        )
        cells = run_experiment(config)
        print(format_table(summarize(cells), config))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="probrecon",
        description="Probabilistic reconciliation of hierarchical forecasts (pMinT, LG, BU).",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate synthetic hierarchical panels")
    s.add_argument("--T", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--out-dir", "--out", dest="out_dir", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("forecast", help="fit per-series AR models, emit forecasts and residuals")
    f.add_argument("--input", required=True, help="panel CSV (all series or bottoms only)")
    f.add_argument("--hierarchy", required=True)
    f.add_argument("--order", type=int, default=1, choices=range(0, MAX_ORDER + 1))
    f.add_argument("--horizon", type=int, default=4)
    f.add_argument("--out-forecasts", required=True)
    f.add_argument("--out-residuals", required=True)
    f.set_defaults(func=cmd_forecast)

    r = sub.add_parser("reconcile", help="reconcile base forecasts into Gaussian distributions")
    r.add_argument("--hierarchy", required=True)
    r.add_argument("--forecasts", required=True)
    r.add_argument("--residuals", required=True)
    r.add_argument("--method", nargs="+", default=["pmint"], help="bu, lg, pmint or all")
    r.add_argument("--kh", default="one", choices=["one", "h"])
    r.add_argument("--horizon", type=int, default=None)
    r.add_argument("--jitter", type=float, default=1e-8)
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_reconcile)

    c = sub.add_parser("score", help="energy score of reconciled distributions")
    c.add_argument("--reconciled", nargs="+", required=True)
    c.add_argument("--actuals", required=True, help="CSV, row h-1 holds the actuals for h")
    c.add_argument("--hierarchy", help="accepted for symmetry; names come from the JSON")
    c.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--replicate", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_score)

    e = sub.add_parser("experiment", help="run the synthetic Monte Carlo experiment")
    e.add_argument("--replicates", type=int, default=200)
    e.add_argument("--T", type=int, default=1000)
    e.add_argument("--horizon", type=int, default=4)
    e.add_argument("--kh", default="both", choices=["one", "h", "both"])
    e.add_argument("--methods", nargs="+", default=["bu", "pmint", "lg"])
    e.add_argument("--order", type=int, default=1, choices=range(0, MAX_ORDER + 1))
    e.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
