#!/usr/bin/env python3
"""Run the desk-scale experiment suite on a corpus and write every table to an output directory."""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import Iterable

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from src import bounds, experiments, perturb, storage
from src.config import (
    DEFAULT_A_GRID,
    DEFAULT_BALANCE_PREFIXES,
    DEFAULT_BPE_MERGES,
    DEFAULT_BUDGET,
    DEFAULT_GAMMA,
    DEFAULT_MAX_LEN,
    DEFAULT_METHODS,
    DEFAULT_OUTPUT,
    DEFAULT_RE_MIN_COUNT,
    DEFAULT_RE_STEPS,
    DEFAULT_REBALANCE_TEMPERATURE,
    DEFAULT_SEED,
    DEFAULT_TEMPERATURES,
    DEFAULT_TRIALS,
    DEFAULT_WINDOW,
)
from src.corpus import ingest, require_nonempty
from src.markov import build_model
from src.sampling import generate_corpus
from src.synthetic import default_corpus
from src.transforms import Stochastic


def parse_args(argv: Iterable[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Run every experiment on one corpus.")
    parser.add_argument("--corpus", type=Path, help="Corpus file (default: the generated synthetic corpus).")
    parser.add_argument(
        "--output-dir",
        type=Path,
        default=DEFAULT_OUTPUT,
        help=f"Directory for CSV and JSON results (default: {DEFAULT_OUTPUT}).",
    )
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="Sequences per sweep point.")
    parser.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Monte Carlo trials for the concentration check.")
    parser.add_argument("--lowercase", action="store_true")
    return parser.parse_args(list(argv))


def main(argv: Iterable[str]) -> None:
    args = parse_args(argv)
    out = args.output_dir
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = args.corpus or default_corpus()
    corpus = require_nonempty(ingest(corpus_path, lowercase=args.lowercase)).sequences
    model = build_model(corpus)
    print(f"Corpus {corpus_path}: {len(corpus)} sentences, n={model.n}, zeta_n={model.zeta_n:.3f}")

    start = time.perf_counter()
    report = bounds.bound_report(model)
    storage.write_json(out / "arp.json", report.as_dict())
    print(f"  arp            {report.arp.value:.6g} (diverged={report.arp.diverged})")

    rows = experiments.correlation_experiment(
        model, DEFAULT_TEMPERATURES, args.budget, args.max_len, args.seed, DEFAULT_WINDOW, (2, 3)
    )
    storage.write_csv(out / "correlation.csv", rows)
    rho = experiments.spearman_summary(rows)
    print("  correlation    " + ", ".join(f"{k}:{v:.3f}" for k, v in rho.items()))

    generated = generate_corpus(model, Stochastic(), args.budget, args.max_len, args.seed)
    inflow = experiments.inflow_experiment(model, generated, DEFAULT_GAMMA, DEFAULT_WINDOW)
    storage.write_csv(out / "inflow.csv", inflow)
    groups = experiments.group_by_pair_count(inflow)
    storage.write_csv(out / "inflow_groups.csv", groups)
    print(f"  inflow         {len(groups)} pair-count groups")

    methods = experiments.methods_experiment(
        model, corpus, DEFAULT_METHODS, args.budget, args.max_len, args.seed, DEFAULT_WINDOW
    )
    storage.write_csv(out / "methods.csv", methods)
    print(f"  methods        {len(methods)} decoding methods")

    balance = experiments.balance_experiment(
        model, corpus, DEFAULT_BALANCE_PREFIXES, DEFAULT_TEMPERATURES, args.budget, args.max_len, args.seed, DEFAULT_WINDOW
    )
    storage.write_csv(out / "balance.csv", balance)
    print(f"  balance        {len(balance)} sweep points")

    rebalance = experiments.rebalance_experiment(
        corpus, DEFAULT_BPE_MERGES, DEFAULT_RE_STEPS, DEFAULT_GAMMA, DEFAULT_REBALANCE_TEMPERATURE,
        args.budget, args.max_len, args.seed, DEFAULT_WINDOW, re_min_count=DEFAULT_RE_MIN_COUNT,
    )
    storage.write_json(out / "rebalance.json", rebalance)
    print(
        f"  rebalance      max transition {rebalance['bpe']['max_transition']:.4f} -> "
        f"{rebalance['bpe+re']['max_transition']:.4f} ({rebalance['re']['steps_run']} RE steps)"
    )

    n, branching = 10, 5
    B = perturb.synthetic_chain(n, branching, 0.9, args.seed)
    spec = perturb.PerturbationSpec(math.sqrt(0.5 / n))
    concentration = perturb.concentration_experiment(B, branching / n, spec, DEFAULT_A_GRID, args.trials, seed=args.seed)
    storage.write_csv(out / "concentration.csv", concentration.rows())
    storage.write_json(out / "concentration.json", concentration.as_dict())
    print(f"  concentration  {len(concentration.violations)} of {len(DEFAULT_A_GRID)} grid points violated")

    print(f"\nResults saved in {out} ({time.perf_counter() - start:.1f}s)")


if __name__ == "__main__":
    main(sys.argv[1:])
