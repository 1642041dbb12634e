"""Command-line entry point: generate, run, sweep, report."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiment import (
    OUTPUT_DIR_ENV,
    ExperimentConfig,
    dump_generated,
    read_sweep_csv,
    run_single,
    run_sweep,
    summarize,
    write_summary_csv,
    write_sweep_csv,
)

# flag name -> (type, help)
_CONFIG_FLAGS = {
    "n": (int, "number of coordinates"),
    "r": (int, "rank"),
    "basis": (str, "eigenfunction family (legendre, cosine)"),
    "sigma": (float, "noise standard deviation"),
    "p": (float, "sampling density"),
    "epsilon": (float, "sparsity exponent, p = n^(-3/2 + epsilon)"),
    "psi": (float, "eta exponent slack (default epsilon/4)"),
    "eta": (str, "neighbor threshold or 'auto'"),
    "c_eta": (float, "constant in front of the auto threshold"),
    "t": (str, "BFS radius or 'auto'"),
    "split_mode": (str, "bernoulli or fresh"),
    "split_prob": (float, "fraction of samples used for distances"),
    "seed": (int, "master seed"),
    "trials": (int, "trials per sweep cell"),
    "output_dir": (str, "directory for outputs"),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON config file")
    for name, (typ, help_) in _CONFIG_FLAGS.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, help=help_)
    p.add_argument("--lambdas", type=float, nargs="+", help="eigenvalues")
    p.add_argument("--write-distances", action="store_true", default=None)
    p.add_argument("--baseline", action="store_true", default=None, help="also compute the naive distance baseline")
    p.add_argument("--oracle", action="store_true", default=None, help="compare distances with the latent oracle")


def _config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        base = ExperimentConfig.load(args.config).to_dict()
    over = {}
    for name in list(_CONFIG_FLAGS) + ["lambdas", "write_distances", "baseline", "oracle"]:
        val = getattr(args, name, None)
        if val is not None:
            over[name] = val
    for key in ("eta", "t"):
        if key in over and over[key] != "auto":
            over[key] = float(over[key]) if key == "eta" else int(over[key])
    # a sparsity flag on the command line replaces the config file's choice
    if "p" in over and "epsilon" not in over:
        base["epsilon"] = None
    if "epsilon" in over and "p" not in over:
        base["p"] = None
    d = {**base, **over}
    return ExperimentConfig.from_dict(d) if base else ExperimentConfig(**d)


def _out_dir(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir or ".")


def cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    doc = dump_generated(cfg)
    target = Path(args.out) if args.out else _out_dir(cfg) / "generated.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(doc))
    print(json.dumps({"written": str(target), "observations": len(doc["observations"]["entries"])}))
    return 0


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    result = run_single(cfg)
    print(result.metrics.to_json())
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    rows = run_sweep(cfg, args.grid, axis=args.axis, workers=args.workers)
    out = Path(args.out) if args.out else _out_dir(cfg) / "sweep.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out)
    summary = summarize(rows, args.axis)
    write_summary_csv(summary, out.with_name(out.stem + "_summary.csv"))
    print(json.dumps({"rows": len(rows), "failed": sum(r["failed"] for r in rows), "summary": summary}, default=str))
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.csv:
        rows.extend(read_sweep_csv(path))
    summary = summarize(rows, args.axis)
    if args.out:
        write_summary_csv(summary, args.out)
    print(json.dumps(summary, default=str, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tensorcf", description="Sparse tensor estimation by iterative collaborative filtering")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a model and its observations as JSON")
    _add_config_flags(g)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run one experiment and print its metrics")
    _add_config_flags(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a grid of experiments and write a CSV")
    _add_config_flags(s)
    s.add_argument("--grid", type=float, nargs="+", required=True)
    s.add_argument("--axis", choices=("epsilon", "p"), default="epsilon")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="re-aggregate existing sweep CSVs")
    rep.add_argument("csv", nargs="+")
    rep.add_argument("--axis", choices=("epsilon", "p"), default="epsilon")
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
