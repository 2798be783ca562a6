"""Command-line entry point: ``distlearn {gen,run,summarize,topology}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .consensus import build_mixing
from .harness import ConfigError, ExperimentConfig, RunRecord, format_summary, run_experiment
from .netgraph import ConnectivityError, graph_matrices, save_edgelist
from .scenarios import ALGORITHMS, SEQUENCES, build_network, make_tabular


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif getattr(args, "algorithm", None):
        cfg = ExperimentConfig(algorithm=args.algorithm)
    else:
        raise ConfigError("pass --config PATH or --algorithm ID")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    record = run_experiment(cfg, threads=args.threads, out=cfg.out)
    print(format_summary(record.summary))
    print(f"results written to {record.out}")
    if record.failed:
        print(f"{len(record.failed)} repetition(s) failed; see records.jsonl", file=sys.stderr)
        return 1
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    record = RunRecord.load(args.results)
    print(format_summary(record.summary))
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    out = Path(args.out or "data")
    out.mkdir(parents=True, exist_ok=True)
    seed = 0 if args.seed is None else args.seed
    if args.dataset in SEQUENCES:
        data = datagen.gen_sequences(args.dataset, args.count, args.length, seed)
        path = out / f"{args.dataset}.csv"
        datagen.save_sequences(path, data)
    else:
        kwargs = {"n": args.count}
        if args.dataset == "two_gaussian":
            kwargs["d"] = args.dim
        data = make_tabular(args.dataset, seed, **kwargs)
        path = out / f"{args.dataset}.csv"
        header = [f"x{i}" for i in range(data.x.shape[1])] + ["label"]
        datagen.save_csv(path, header, np.column_stack([data.x, data.y]), data.metadata)
    print(path)
    return 0


def cmd_topology(args: argparse.Namespace) -> int:
    spec = {"kind": args.kind, "p": args.p, "k": args.k, "alpha": args.alpha, "m": args.m}
    seed = 0 if args.seed is None else args.seed
    net = build_network(spec, args.agents, seed)
    mats = graph_matrices(net)
    eig = np.linalg.eigvalsh(mats.laplacian.astype(float))
    info = {
        "agents": net.n_agents,
        "edges": net.n_edges,
        "degrees": net.degrees.tolist(),
        "algebraic_connectivity": float(eig[1]) if net.n_agents > 1 else 0.0,
        "essential_spectral_radius": {
            s: build_mixing(net, s).essential_spectral_radius()
            for s in ("max_degree", "metropolis", "laplacian_heuristic")
        } if net.n_agents > 1 else {},
    }
    if args.out:
        save_edgelist(net, args.out)
    print(json.dumps(info, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distlearn", description="Decentralized learning simulations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", default=None, help="YAML experiment file")
    run.add_argument("--algorithm", choices=sorted(ALGORITHMS), default=None, help="run with defaults instead of a config")
    run.add_argument("--threads", type=int, default=1)
    common(run)
    run.set_defaults(func=cmd_run)

    summ = sub.add_parser("summarize", help="print mean ± std from a results directory")
    summ.add_argument("results")
    summ.set_defaults(func=cmd_summarize)

    gen = sub.add_parser("gen", help="write a synthetic dataset")
    gen.add_argument("dataset", choices=["two_gaussian", "two_moons", *SEQUENCES])
    gen.add_argument("--count", type=int, default=500, help="samples, or sequences for time series")
    gen.add_argument("--length", type=int, default=2000, help="steps per sequence")
    gen.add_argument("--dim", type=int, default=50)
    common(gen)
    gen.set_defaults(func=cmd_gen)

    topo = sub.add_parser("topology", help="generate a network and print its statistics")
    topo.add_argument("kind", choices=["erdos_renyi", "complete", "linear", "small_world", "scale_free"])
    topo.add_argument("--agents", type=int, default=8)
    topo.add_argument("--p", type=float, default=0.2)
    topo.add_argument("--k", type=int, default=2)
    topo.add_argument("--alpha", type=float, default=0.15)
    topo.add_argument("--m", type=int, default=2)
    common(topo)
    topo.set_defaults(func=cmd_topology)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ConnectivityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
