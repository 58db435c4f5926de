#!/usr/bin/env python3
"""Command-line front end: build Markov models, compute ARP and bounds, encode, generate and score."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from src import bounds, encoding, experiments, perturb, storage
from src.config import (
    DEFAULT_A_GRID,
    DEFAULT_BALANCE_PREFIXES,
    DEFAULT_BPE_MERGES,
    DEFAULT_BUDGET,
    DEFAULT_CORPUS,
    DEFAULT_GAMMA,
    DEFAULT_MAX_LEN,
    DEFAULT_METHODS,
    DEFAULT_ORDERS,
    DEFAULT_RE_MIN_COUNT,
    DEFAULT_RE_STEPS,
    DEFAULT_REBALANCE_TEMPERATURE,
    DEFAULT_SEED,
    DEFAULT_TEMPERATURES,
    DEFAULT_TRIALS,
    DEFAULT_WINDOW,
    ExperimentConfig,
)
from src.corpus import ingest, read_sequences, require_nonempty, write_sequences
from src.errors import ArpLabError, PreconditionViolated
from src.markov import TransitionModel, build_model, convergence_precondition
from src.metrics import score_sequences
from src.sampling import generate_corpus, transform_model
from src.synthetic import default_corpus
from src.transforms import parse_transform

TRANSFORMS = {
    "stochastic": "sample from the model distribution unchanged",
    "greedy": "all mass on the most probable token",
    "topk:K": "keep the K most probable tokens",
    "nucleus:P": "smallest set of most probable tokens with mass >= P",
    "temp:T": "softmax(log p / T)",
    "lp:BETA": "add BETA to the EOS logit",
}

EPILOG = "transforms (chain with '+', e.g. topk:40+temp:0.9):\n" + "\n".join(
    f"  {name:12s} {desc}" for name, desc in TRANSFORMS.items()
)


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


# ---------------------------------------------------------------------------
# Argument types
# ---------------------------------------------------------------------------
def float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _joined(values: Iterable) -> str:
    return ",".join(str(v) for v in values)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def _add_model_source(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--model", type=Path, help="Model JSON written by build-model.")
    group.add_argument("--corpus", type=Path, help=f"Corpus to build the model from (default: {DEFAULT_CORPUS.name}).")
    p.add_argument("--lowercase", action="store_true", help="Lowercase the corpus before tokenizing.")


def _add_min_count(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--min-count",
        type=int,
        default=DEFAULT_RE_MIN_COUNT,
        help=f"RE ignores pairs seen fewer times (default: {DEFAULT_RE_MIN_COUNT}; 1 merges every pair).",
    )


def _add_generation(p: argparse.ArgumentParser, budget_help: str = "Sequences to generate") -> None:
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help=f"{budget_help} (default: {DEFAULT_BUDGET}).")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN, help=f"Maximum sequence length (default: {DEFAULT_MAX_LEN}).")


def _add_metric_params(p: argparse.ArgumentParser, orders=DEFAULT_ORDERS) -> None:
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW, help=f"rep-w window (default: {DEFAULT_WINDOW}).")
    p.add_argument("--orders", type=int_list, default=list(orders), help=f"rep-n orders (default: {_joined(orders)}).")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arplab",
        description="Repetition analysis of Markov generation models.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"Base random seed (default: {DEFAULT_SEED}).")
    parser.add_argument("--out", type=Path, help="Output file (directory for encode); stdout when omitted.")
    parser.add_argument("--format", choices=("json", "csv"), default=None, help="Report format (default depends on the command).")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Log INFO (-v) or DEBUG (-vv) to stderr.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-model", help="Count bigrams of a corpus into a Markov model.")
    p.add_argument("--corpus", type=Path, help=f"Corpus file, one sentence per line (default: {DEFAULT_CORPUS.name}).")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--max-lines", type=int, default=None)
    p.set_defaults(handler=cmd_build_model)

    p = sub.add_parser("arp", help="Exact ARP and its upper bounds.")
    _add_model_source(p)
    p.add_argument("--transform", help="Decoding transform applied to every row first.")
    p.add_argument("--tightened", action="store_true", help="Also report the tightened variance bound.")
    p.set_defaults(handler=cmd_arp)

    p = sub.add_parser("encode", help="BPE and/or rebalanced encoding of a corpus.")
    p.add_argument("--corpus", type=Path, help=f"Corpus file (default: {DEFAULT_CORPUS.name}).")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--mode", choices=("bpe", "re", "bpe+re"), default="bpe+re")
    p.add_argument("--merges", type=int, default=DEFAULT_BPE_MERGES, help=f"BPE operations (default: {DEFAULT_BPE_MERGES}).")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help=f"RE threshold (default: {DEFAULT_GAMMA}).")
    p.add_argument("--steps", type=int, default=DEFAULT_RE_STEPS, help=f"RE step cap (default: {DEFAULT_RE_STEPS}).")
    p.add_argument("--flat", action="store_true", help="Let RE pair tokens across sentence boundaries.")
    _add_min_count(p)
    p.set_defaults(handler=cmd_encode)

    p = sub.add_parser("generate", help="Sample sequences, one per line.")
    _add_model_source(p)
    p.add_argument("--transform", default="stochastic")
    p.add_argument("--start", action="append", help="Start word (repeatable); default cycles the vocabulary.")
    _add_generation(p)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("score", help="Repetition metrics of a sequences file.")
    p.add_argument("sequences", type=Path)
    _add_model_source(p)
    _add_metric_params(p)
    p.add_argument("--reference", type=Path, help="Reference sequences for ppl-c.")
    p.add_argument("--ppl-c", action="store_true", help="Report ppl-c (needs --reference).")
    p.add_argument("--per-sequence", action="store_true", help="Include per-sequence values.")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("exp-correlation", help="ARP and repetition across a temperature sweep.")
    _add_model_source(p)
    p.add_argument("--temperatures", type=float_list, default=list(DEFAULT_TEMPERATURES))
    p.add_argument("--prefix", help="Transform applied before the temperature, e.g. topk:40.")
    _add_generation(p, "Sequences per temperature")
    _add_metric_params(p, orders=(2, 3))
    p.set_defaults(handler=cmd_exp_correlation)

    p = sub.add_parser("exp-inflow", help="High inflow pair counts against repetition per sequence.")
    _add_model_source(p)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--sequences", type=Path, help="Generated sequences; sampled with --transform when omitted.")
    p.add_argument("--transform", default="stochastic")
    p.add_argument("--grouped", action="store_true", help="Report group means per pair count.")
    _add_generation(p)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--order", type=int, default=2, help="rep-n order (default: 2).")
    p.set_defaults(handler=cmd_exp_inflow)

    p = sub.add_parser("exp-concentration", help="Monte Carlo check of the perturbation concentration bound.")
    _add_model_source(p)
    p.add_argument("--synthetic", type=int_list, metavar="N,BRANCHING", help="Synthetic chain size and branching (default: 10,5).")
    p.add_argument("--mass", type=float, default=0.9, help="Row mass of the synthetic chain (default: 0.9).")
    p.add_argument("--delta", type=float, help="Perturbation std (default: sqrt(0.5 / n)).")
    p.add_argument("--distribution", choices=perturb.DISTRIBUTIONS, default="uniform_symmetric")
    p.add_argument("--a-grid", type=float_list, default=list(DEFAULT_A_GRID))
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--r-max", type=int, default=None)
    p.add_argument("--moment-trials", type=int, default=0, help="Also run the product moment check.")
    p.set_defaults(handler=cmd_exp_concentration)

    p = sub.add_parser("exp-methods", help="Compare decoding methods on ARP, bounds and repetition.")
    p.add_argument("--corpus", type=Path, help="Training corpus; also the ppl-c reference.")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--methods", nargs="+", default=list(DEFAULT_METHODS))
    _add_generation(p, "Sequences per method")
    _add_metric_params(p)
    p.set_defaults(handler=cmd_exp_methods)

    p = sub.add_parser("exp-balance", help="Temperature sweep after truncation: ppl-c against repetition.")
    p.add_argument("--corpus", type=Path, help="Training corpus; also the ppl-c reference.")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--prefixes", nargs="+", default=list(DEFAULT_BALANCE_PREFIXES))
    p.add_argument("--temperatures", type=float_list, default=list(DEFAULT_TEMPERATURES))
    _add_generation(p, "Sequences per point")
    _add_metric_params(p)
    p.set_defaults(handler=cmd_exp_balance)

    p = sub.add_parser("exp-rebalance", help="Markov models before and after rebalanced encoding.")
    p.add_argument("--corpus", type=Path, help=f"Corpus file (default: {DEFAULT_CORPUS.name}).")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--merges", type=int, default=DEFAULT_BPE_MERGES)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--steps", type=int, default=DEFAULT_RE_STEPS)
    _add_min_count(p)
    p.add_argument("--temperature", type=float, default=DEFAULT_REBALANCE_TEMPERATURE)
    _add_generation(p)
    _add_metric_params(p)
    p.set_defaults(handler=cmd_exp_rebalance)
    return parser


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------
def make_config(args: argparse.Namespace) -> ExperimentConfig:
    """Collect the parsed values that have an ExperimentConfig field and validate them."""
    mapping = {
        "corpus": "corpus",
        "lowercase": "lowercase",
        "transform": "transform",
        "temperatures": "temperatures",
        "methods": "methods",
        "prefixes": "prefixes",
        "budget": "budget",
        "max_len": "max_len",
        "gamma": "gamma",
        "seed": "seed",
        "window": "window",
        "orders": "orders",
        "merges": "bpe_merges",
        "steps": "re_steps",
        "min_count": "re_min_count",
        "delta": "delta",
        "a_grid": "a_grid",
        "trials": "trials",
        "out": "out",
    }
    values = {}
    for attr, name in mapping.items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        values[name] = tuple(value) if isinstance(value, list) else value
    try:
        return ExperimentConfig(**values).validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def load_corpus(args: argparse.Namespace) -> List[List[str]]:
    path = getattr(args, "corpus", None) or default_corpus()
    corpus = ingest(path, lowercase=args.lowercase, max_lines=getattr(args, "max_lines", None))
    return require_nonempty(corpus).sequences


def load_model(args: argparse.Namespace) -> TransitionModel:
    if getattr(args, "model", None) is not None:
        return storage.load_model(args.model)
    return build_model(load_corpus(args))


def emit(args: argparse.Namespace, payload, rows: Optional[Sequence[Dict]] = None, default: str = "json") -> None:
    fmt = args.format or default
    if fmt == "csv":
        if rows is None:
            rows = [payload]
        text = storage.dumps_csv(rows)
    else:
        text = storage.dumps_json(payload)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8", newline="\n")


def _flatten(d: Dict[str, object], prefix: str = "") -> Dict[str, object]:
    out: Dict[str, object] = {}
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def cmd_build_model(args: argparse.Namespace) -> int:
    if args.out is None:
        raise UsageError("build-model needs --out")
    model = build_model(load_corpus(args))
    storage.save_model(model, args.out)
    check = convergence_precondition(model)
    rho = "nan" if check.rho is None else f"{check.rho:.6g}"
    print(f"n={model.n} zeta={model.zeta:.6g} rho_b2={rho} zeta_n={model.zeta_n:.6g} -> {args.out}")
    return 0


def cmd_arp(args: argparse.Namespace) -> int:
    make_config(args)
    model = load_model(args)
    if args.transform:
        model = transform_model(model, parse_transform(args.transform))
    report = bounds.bound_report(model, tightened=args.tightened)
    payload = {"transform": args.transform or "none"}
    payload.update(report.as_dict())
    emit(args, payload, rows=[_flatten(payload)])
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    if args.out is None:
        raise UsageError("encode needs --out DIRECTORY")
    make_config(args)
    corpus = load_corpus(args)
    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    encoded = corpus
    summary: Dict[str, object] = {"mode": args.mode, "sequences": len(corpus)}
    if "bpe" in args.mode:
        bpe_table = encoding.learn_bpe(corpus, args.merges)
        encoded = encoding.apply_bpe_corpus(corpus, bpe_table)
        storage.save_merges(bpe_table, out_dir / "bpe.merges")
        summary["bpe_rules"] = len(bpe_table)
    if "re" in args.mode.split("+"):
        result = encoding.learn_re_report(encoded, args.steps, args.gamma, flat=args.flat, min_count=args.min_count)
        encoded = encoding.apply_re_corpus(encoded, result.table)
        storage.save_merges(result.table, out_dir / "re.merges")
        summary["re"] = result.as_dict()
    write_sequences(out_dir / "encoded.txt", encoded)
    summary["tokens"] = sum(len(s) for s in encoded)
    summary["round_trip"] = all(
        encoding.detokenize(e) == list(c) for e, c in zip(encoded, corpus)
    )
    print(storage.dumps_json(summary), end="")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    make_config(args)
    model = load_model(args)
    sequences = generate_corpus(model, parse_transform(args.transform), args.budget, args.max_len, args.seed, args.start)
    if args.out is None:
        for seq in sequences:
            print(" ".join(seq))
    else:
        write_sequences(args.out, sequences)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    if args.ppl_c and args.reference is None:
        raise UsageError("--ppl-c needs --reference")
    make_config(args)
    sequences = read_sequences(args.sequences)
    model = reference = None
    if args.reference is not None:
        model = load_model(args)
        reference = read_sequences(args.reference)
    report = score_sequences(sequences, args.window, args.orders, model=model, reference=reference, per_sequence=args.per_sequence)
    payload = report.as_dict()
    if not args.per_sequence:
        payload.pop("per_sequence")
    emit(args, payload, rows=report.per_sequence if args.per_sequence else [report.summary()])
    return 0


def cmd_exp_correlation(args: argparse.Namespace) -> int:
    make_config(args)
    if args.prefix is not None:
        parse_transform(args.prefix)
    model = load_model(args)
    rows = experiments.correlation_experiment(
        model, args.temperatures, args.budget, args.max_len, args.seed, args.window, args.orders, prefix=args.prefix
    )
    emit(args, {"rows": rows, "spearman": experiments.spearman_summary(rows)}, rows=rows, default="csv")
    return 0


def cmd_exp_inflow(args: argparse.Namespace) -> int:
    make_config(args)
    model = load_model(args)
    if args.sequences is not None:
        sequences = read_sequences(args.sequences)
    else:
        sequences = generate_corpus(model, parse_transform(args.transform), args.budget, args.max_len, args.seed)
    rows = experiments.inflow_experiment(model, sequences, args.gamma, args.window, args.order)
    if args.grouped:
        rows = experiments.group_by_pair_count(rows)
    emit(args, {"gamma": args.gamma, "rows": rows}, rows=rows, default="csv")
    return 0


def cmd_exp_concentration(args: argparse.Namespace) -> int:
    make_config(args)
    if args.model is not None or args.corpus is not None:
        model = load_model(args)
        B, zeta = model.B, model.zeta
    else:
        n, branching = args.synthetic or (10, 5)
        B = perturb.synthetic_chain(n, branching, args.mass, args.seed)
        zeta = branching / n
    n = B.shape[0]
    delta = args.delta if args.delta is not None else math.sqrt(0.5 / n)
    spec = perturb.PerturbationSpec(delta, args.distribution)
    try:
        result = perturb.concentration_experiment(B, zeta, spec, args.a_grid, args.trials, args.r_max, args.seed)
    except PreconditionViolated as exc:
        if exc.condition == "zeta_n > 4":
            raise PreconditionViolated(
                exc.condition, exc.measured, "use a denser chain, e.g. --synthetic 10,5"
            ) from exc
        raise
    payload = result.as_dict()
    if args.moment_trials:
        payload["moments"] = perturb.moment_check(B, spec, args.moment_trials, args.seed).as_dict()
    emit(args, payload, rows=result.rows(), default="csv")
    return 0


def cmd_exp_methods(args: argparse.Namespace) -> int:
    make_config(args)
    corpus = load_corpus(args)
    rows = experiments.methods_experiment(
        build_model(corpus), corpus, args.methods, args.budget, args.max_len, args.seed, args.window, args.orders
    )
    emit(args, {"rows": rows}, rows=rows, default="csv")
    return 0


def cmd_exp_balance(args: argparse.Namespace) -> int:
    make_config(args)
    corpus = load_corpus(args)
    model = build_model(corpus)
    rows = experiments.balance_experiment(
        model, corpus, args.prefixes, args.temperatures, args.budget, args.max_len, args.seed, args.window, args.orders
    )
    emit(args, {"rows": rows}, rows=rows, default="csv")
    return 0


def cmd_exp_rebalance(args: argparse.Namespace) -> int:
    make_config(args)
    corpus = load_corpus(args)
    result = experiments.rebalance_experiment(
        corpus, args.merges, args.steps, args.gamma, args.temperature,
        args.budget, args.max_len, args.seed, args.window, args.orders, re_min_count=args.min_count,
    )
    emit(args, result, rows=experiments.rebalance_rows(result), default="json")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Iterable[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ArpLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
