"""Command-line front end.

Subcommands: sample, persist, maxpers, special, rank, sweep, figures.
Every subcommand prints its effective configuration as JSON on stdout before
doing work, exits 0 on success, and on failure writes a machine-readable
error JSON to stderr and exits nonzero.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from .errors import RandcliqueError
from .experiment import ExperimentConfig, run_experiment
from .filtration import load_edges_csv, sample_filtration, save_edges_csv
from .flag import adaptive_cap, build_flag_filtration
from .persistence import compute_persistence, diagram_to_csv
from .serialize import dumps_canonical


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--workers", type=int, default=None, help="worker processes")
    parser.add_argument("--out-dir", default=None, help="output directory")
    parser.add_argument("--config", default=None, help="JSON config file to start from")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="randclique",
        description="Random clique-complex filtrations and their persistence",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw an edge filtration and dump it as CSV")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sample-index", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (default <out-dir>/edges.csv)")

    p = sub.add_parser("persist", help="persistence diagram of one filtration")
    _common(p)
    p.add_argument("--edges", default=None, help="edge CSV to load (else sample)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--sample-index", type=int, default=0)
    p.add_argument("--k-max", type=int, default=1)
    p.add_argument("--cap", type=float, default=None, help="weight cap (default adaptive)")
    p.add_argument("--cap-eps", type=float, default=0.5)
    p.add_argument("--characteristic", type=int, default=2)
    p.add_argument("--out", default=None, help="diagram CSV path")

    for name, help_text in [
        ("maxpers", "maximal multiplicative persistence experiment"),
        ("special", "cross-polytope witness count sweep"),
        ("rank", "rank-invariant sweep"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--bins", type=int, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--cap-eps", type=float, default=None)
        p.add_argument("--characteristic", type=int, default=None)
        if name == "special":
            p.add_argument("--p1", type=float, default=None)
            p.add_argument("--p2", type=float, default=None)

    p = sub.add_parser("sweep", help="run an experiment config file as-is")
    _common(p)

    p = sub.add_parser("figures", help="emit the two reference histogram datasets")
    _common(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument(
        "--which", choices=["1", "2", "both"], default="both", help="which figure"
    )
    return top


def _effective_experiment_config(args, kind: str, defaults: dict) -> ExperimentConfig:
    base = dict(defaults)
    if args.config:
        with open(args.config) as fh:
            base.update(json.load(fh))
    base["kind"] = kind
    overrides = {
        "n": getattr(args, "n", None),
        "k": getattr(args, "k", None),
        "samples": getattr(args, "samples", None),
        "bins": getattr(args, "bins", None),
        "eps": getattr(args, "eps", None),
        "cap_eps": getattr(args, "cap_eps", None),
        "characteristic": getattr(args, "characteristic", None),
        "master_seed": args.seed,
        "workers": args.workers,
        "out_dir": args.out_dir,
    }
    for key, val in overrides.items():
        if val is not None:
            base[key] = val
    p1 = getattr(args, "p1", None)
    p2 = getattr(args, "p2", None)
    if p1 is not None or p2 is not None:
        if p1 is None or p2 is None:
            raise RandcliqueError("--p1 and --p2 must be given together")
        base["p_grid"] = [[p1, p2]]
    cfg = ExperimentConfig.from_dict(base)
    cfg.validate()
    return cfg


def _print_config(obj) -> None:
    print(dumps_canonical(obj))


def _cmd_sample(args) -> int:
    n = args.n
    seed = args.seed if args.seed is not None else 0
    out_dir = args.out_dir if args.out_dir is not None else "out"
    out = args.out or os.path.join(out_dir, "edges.csv")
    _print_config(
        {"command": "sample", "n": n, "master_seed": seed,
         "sample_index": args.sample_index, "out": out}
    )
    ef = sample_filtration(n, seed, args.sample_index)
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    save_edges_csv(ef, out)
    return 0


def _cmd_persist(args) -> int:
    seed = args.seed if args.seed is not None else 0
    out_dir = args.out_dir if args.out_dir is not None else "out"
    out = args.out or os.path.join(out_dir, "diagram.csv")
    if args.edges:
        ef = load_edges_csv(args.edges, n=args.n)
    else:
        if args.n is None:
            raise RandcliqueError("need --edges or --n")
        ef = sample_filtration(args.n, seed, args.sample_index)
    cap = args.cap
    if cap is None:
        cap = adaptive_cap(ef.n, max(1, args.k_max), args.cap_eps) if ef.n >= 2 else 1.0
    _print_config(
        {"command": "persist", "n": ef.n, "edges": args.edges,
         "master_seed": seed, "sample_index": args.sample_index,
         "k_max": args.k_max, "cap": cap,
         "characteristic": args.characteristic, "out": out}
    )
    ff = build_flag_filtration(ef, args.k_max + 1, cap)
    dg = compute_persistence(ff, args.k_max, args.characteristic)
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    diagram_to_csv(dg, out)
    return 0


def _cmd_experiment(args, kind: str, defaults: dict) -> int:
    cfg = _effective_experiment_config(args, kind, defaults)
    _print_config(cfg.to_dict())
    run_experiment(cfg)
    return 0


def _cmd_sweep(args) -> int:
    if not args.config:
        raise RandcliqueError("sweep requires --config")
    with open(args.config) as fh:
        base = json.load(fh)
    for key, val in [
        ("master_seed", args.seed),
        ("workers", args.workers),
        ("out_dir", args.out_dir),
    ]:
        if val is not None:
            base[key] = val
    cfg = ExperimentConfig.from_dict(base)
    cfg.validate()
    _print_config(cfg.to_dict())
    run_experiment(cfg)
    return 0


def _cmd_figures(args) -> int:
    seed = args.seed if args.seed is not None else 0
    workers = args.workers if args.workers is not None else 1
    out_dir = args.out_dir if args.out_dir is not None else "out"
    shapes = {
        "1": {"n": 250, "k": 1, "sub": "fig1"},
        "2": {"n": 150, "k": 2, "sub": "fig2"},
    }
    wanted = ["1", "2"] if args.which == "both" else [args.which]
    configs = []
    for key in wanted:
        shape = shapes[key]
        configs.append(
            ExperimentConfig(
                kind="max-persistence",
                n=shape["n"],
                k=shape["k"],
                samples=args.samples,
                master_seed=seed,
                workers=workers,
                out_dir=os.path.join(out_dir, shape["sub"]),
            )
        )
    _print_config({"command": "figures", "runs": [c.to_dict() for c in configs]})
    for cfg in configs:
        cfg.validate()
        run_experiment(cfg)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "persist":
            return _cmd_persist(args)
        if args.command == "maxpers":
            return _cmd_experiment(
                args, "max-persistence", {"n": 100, "k": 1, "samples": 100}
            )
        if args.command == "special":
            return _cmd_experiment(
                args, "special-cycles", {"n": 30, "k": 1, "samples": 1000}
            )
        if args.command == "rank":
            return _cmd_experiment(
                args, "rank-sweep", {"n": 50, "k": 1, "samples": 50}
            )
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "figures":
            return _cmd_figures(args)
        raise RandcliqueError(f"unknown command {args.command}")
    except (RandcliqueError, OSError, json.JSONDecodeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
