"""Command-line interface.

Subcommands:
  run          execute an experiment config (JSON file, optionally preset-based)
  bound        evaluate a generalization-bound formula from numeric flags
  eval-phl     re-evaluate a trained Hamiltonian-learning run on a fresh grid
  list-presets show the registered experiment presets

Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments as ex
from . import training as tr
from .bounds import FORMULAS, BoundInput, bound_qcbm
from .experiments import ConfigError


def _cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"config error: {args.config} is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        config = ex.load_config(doc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    summary = ex.run_experiment(
        config, out_prefix=args.out, seed=args.seed, repeats=args.repeats
    )
    printable = {k: v for k, v in summary.items() if k != "run_summaries"}
    print(json.dumps(printable, indent=2))
    return 0


def _cmd_bound(args) -> int:
    try:
        inp = BoundInput(
            n=args.n,
            m=args.m,
            delta=args.delta,
            c1=args.c1,
            c2=args.c2,
            c3=args.c3,
            d=args.d,
            k=args.k,
            n_qudits=args.n_qudits,
            n_gt=args.n_gt,
            n_ge=args.n_ge,
            layers=args.layers,
            encoder_layers=args.encoder_layers,
        )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.formula == "qcbm":
        report = bound_qcbm(inp, formula=args.qcbm_variant)
    else:
        report = FORMULAS[args.formula](inp)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_eval_phl(args) -> int:
    try:
        with open(args.model) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: cannot load model summary: {exc}", file=sys.stderr)
        return 2
    if "experiment" not in doc or "final_theta" not in doc:
        print("config error: model file is not a per-run summary JSON", file=sys.stderr)
        return 2
    config = doc["experiment"]
    tdoc = config.get("target", {})
    if tdoc.get("kind") != "xxz-ground":
        print("config error: eval-phl needs a run of the xxz-ground target", file=sys.stderr)
        return 2
    encoder, generator = ex._build_circuit(config["circuit"], tdoc)
    theta = np.asarray(doc["final_theta"], dtype=float)
    grid = np.linspace(tdoc["a_min"], tdoc["a_max"], args.grid)
    rows = ex.run_phl_eval(encoder, generator, theta, grid, tdoc["eta"], tdoc["boundary"])
    lines = ["a,fidelity,estimated_energy,exact_energy"]
    lines += [",".join(repr(v) for v in row) for row in rows]
    text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_list_presets(_args) -> int:
    for name in ex.list_presets():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="borngen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="path to a JSON experiment config")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--repeats", type=int, default=None, help="override the repeat count")
    run.add_argument("--out", default=None, help="output path prefix for emitted artifacts")
    run.set_defaults(func=_cmd_run)

    bound = sub.add_parser("bound", help="evaluate a generalization bound")
    bound.add_argument("--formula", required=True, choices=sorted(FORMULAS))
    bound.add_argument("--qcbm-variant", choices=["main", "proof"], default="main")
    bound.add_argument("--n", type=int, required=True)
    bound.add_argument("--m", type=int, required=True)
    bound.add_argument("--delta", type=float, default=0.05)
    bound.add_argument("--c1", type=float, default=1.0)
    bound.add_argument("--c2", type=float, default=1.0)
    bound.add_argument("--c3", type=float, default=1.0)
    bound.add_argument("--d", type=int, default=2)
    bound.add_argument("--k", type=int, default=2)
    bound.add_argument("--n-qudits", type=int, default=1)
    bound.add_argument("--n-gt", type=int, default=1)
    bound.add_argument("--n-ge", type=int, default=1)
    bound.add_argument("--layers", type=int, default=1)
    bound.add_argument("--encoder-layers", type=int, default=1)
    bound.set_defaults(func=_cmd_bound)

    phl = sub.add_parser("eval-phl", help="evaluate a trained Hamiltonian-learning model")
    phl.add_argument("--model", required=True, help="per-run summary JSON from an xxz run")
    phl.add_argument("--grid", type=int, default=41, help="number of coupling grid points")
    phl.add_argument("--out", default=None, help="optional CSV output path")
    phl.set_defaults(func=_cmd_eval_phl)

    lp = sub.add_parser("list-presets", help="list registered experiment presets")
    lp.set_defaults(func=_cmd_list_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
