"""Desk-scale experiments tying ARP, bounds and repetition metrics together.

Every function returns plain rows (lists of dicts) or a dict so the CLI and
``scripts/run_experiments.py`` can write them as CSV or JSON unchanged.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from . import bounds, encoding
from .errors import EmptyInput, InvalidGamma
from .markov import TransitionModel, build_model, exact_arp
from .metrics import count_high_inflow_pairs, rep_n, rep_r, rep_w_sequence, score_sequences
from .sampling import generate_corpus, transform_model
from .transforms import Stochastic, parse_transform

logger = logging.getLogger(__name__)

Rows = List[Dict[str, object]]

_STOCHASTIC = Stochastic()


def _metric_columns(report, orders: Sequence[int]) -> Dict[str, object]:
    row: Dict[str, object] = {"rep_w": report.rep_w}
    for order in orders:
        row[f"rep_{order}"] = report.rep_n[order]
    row["rep_r"] = report.rep_r
    return row


def _sample_and_score(
    transformed: TransitionModel,
    budget: int,
    max_len: int,
    seed: int,
    window: int,
    orders: Sequence[int],
    scorer: Optional[TransitionModel] = None,
    reference: Optional[Sequence[Sequence[str]]] = None,
):
    sequences = generate_corpus(transformed, _STOCHASTIC, budget, max_len, seed)
    return score_sequences(sequences, window, orders, model=scorer, reference=reference, per_sequence=False)


# ---------------------------------------------------------------------------
# ARP against repetition under a temperature sweep
# ---------------------------------------------------------------------------
def correlation_experiment(
    model: TransitionModel,
    temperatures: Sequence[float],
    budget: int,
    max_len: int,
    seed: int,
    window: int = 16,
    orders: Sequence[int] = (2, 3),
    prefix: Optional[str] = None,
) -> Rows:
    """One row per temperature: ARP of the tempered chain and rep metrics of its samples.

    Divergent settings stay in the output with ``diverged`` set.
    """
    rows: Rows = []
    for t in temperatures:
        grammar = f"temp:{t!r}" if prefix is None else f"{prefix}+temp:{t!r}"
        transformed = transform_model(model, parse_transform(grammar))
        arp = exact_arp(transformed)
        report = _sample_and_score(transformed, budget, max_len, seed, window, orders)
        row: Dict[str, object] = {"t": t, "arp": arp.value}
        row.update(_metric_columns(report, orders))
        row["diverged"] = arp.diverged
        row["zeta_n"] = transformed.zeta_n
        rows.append(row)
        logger.info("t=%s arp=%.6g diverged=%s rep_w=%.4f", t, arp.value, arp.diverged, report.rep_w)
    return rows


def spearman_summary(rows: Rows, x: str = "arp", metrics: Optional[Sequence[str]] = None) -> Dict[str, float]:
    """Spearman rank correlation between column ``x`` and each metric column."""
    if metrics is None:
        metrics = [k for k in rows[0] if k.startswith("rep_")] if rows else []
    out: Dict[str, float] = {}
    for name in metrics:
        pairs = [
            (float(r[x]), float(r[name]))
            for r in rows
            if r.get(name) is not None and math.isfinite(float(r[x])) and math.isfinite(float(r[name]))
        ]
        if len(pairs) < 3:
            out[name] = float("nan")
            continue
        xs, ys = zip(*pairs)
        rho, _ = spearmanr(xs, ys)
        out[name] = float(rho)
    return out


# ---------------------------------------------------------------------------
# High inflow pairs
# ---------------------------------------------------------------------------
def inflow_experiment(
    model: TransitionModel,
    sequences: Sequence[Sequence[str]],
    gamma: float,
    window: int = 16,
    order: int = 2,
) -> Rows:
    """Per sequence: number of adjacent pairs with ``B_uv > gamma`` and its rep metrics."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidGamma(f"gamma must be in (0, 1], got {gamma!r}")
    sequences = [s for s in sequences if len(s)]
    if not sequences:
        raise EmptyInput("no generated sequences to analyse")
    rows_, cols = np.nonzero(model.B > gamma)
    pairs = frozenset(zip(rows_.tolist(), cols.tolist()))
    rows: Rows = []
    for s in sequences:
        rows.append(
            {
                "pair_count": count_high_inflow_pairs(s, model, gamma, pairs),
                "rep_w": rep_w_sequence(s, window),
                "rep_n": rep_n(s, order) if len(s) >= order else None,
                "rep_r": rep_r(s),
            }
        )
    return rows


def group_by_pair_count(rows: Rows) -> Rows:
    """Mean rep metrics per ``pair_count`` value, ascending."""
    groups: Dict[int, Rows] = defaultdict(list)
    for row in rows:
        groups[int(row["pair_count"])].append(row)
    out: Rows = []
    for count in sorted(groups):
        members = groups[count]
        summary: Dict[str, object] = {"pair_count": count, "sequences": len(members)}
        for key in ("rep_w", "rep_n", "rep_r"):
            values = [float(m[key]) for m in members if m[key] is not None]
            summary[key] = float(np.mean(values)) if values else None
        out.append(summary)
    return out


# ---------------------------------------------------------------------------
# Decoding-method comparison and temperature balancing
# ---------------------------------------------------------------------------
def _bound_value(value) -> Optional[float]:
    return value if isinstance(value, float) else None


def method_row(
    model: TransitionModel,
    grammar: str,
    reference: Sequence[Sequence[str]],
    budget: int,
    max_len: int,
    seed: int,
    window: int,
    orders: Sequence[int],
) -> Dict[str, object]:
    transformed = transform_model(model, parse_transform(grammar))
    report = bounds.bound_report(transformed)
    scores = _sample_and_score(transformed, budget, max_len, seed, window, orders, scorer=model, reference=reference)
    violated = [
        name
        for name in ("bound_spectral", "bound_variance", "bound_inflow_outflow")
        if not isinstance(getattr(report, name), float)
    ]
    row: Dict[str, object] = {
        "method": grammar,
        "zeta_n": transformed.zeta_n,
        "arp": report.arp.value,
        "diverged": report.arp.diverged,
        "bound_spectral": _bound_value(report.bound_spectral),
        "bound_variance": _bound_value(report.bound_variance),
        "bound_inflow_outflow": _bound_value(report.bound_inflow_outflow),
        "precondition_violated": ";".join(violated),
    }
    row.update(_metric_columns(scores, orders))
    row["ppl_c"] = scores.ppl_c
    row["floor_hits"] = scores.floor_hits
    return row


def methods_experiment(
    model: TransitionModel,
    reference: Sequence[Sequence[str]],
    methods: Sequence[str],
    budget: int,
    max_len: int,
    seed: int,
    window: int = 16,
    orders: Sequence[int] = (2, 3, 4),
) -> Rows:
    """ARP, bounds and repetition/perplexity of samples for each decoding method."""
    rows = []
    for grammar in methods:
        rows.append(method_row(model, grammar, reference, budget, max_len, seed, window, orders))
        logger.info("method %s done", grammar)
    return rows


def balance_experiment(
    model: TransitionModel,
    reference: Sequence[Sequence[str]],
    prefixes: Sequence[str],
    temperatures: Sequence[float],
    budget: int,
    max_len: int,
    seed: int,
    window: int = 16,
    orders: Sequence[int] = (2, 3, 4),
) -> Rows:
    """Sweep the temperature after each truncation prefix; ppl-c against repetition."""
    rows: Rows = []
    for prefix in prefixes:
        for t in temperatures:
            grammar = f"{prefix}+temp:{t!r}"
            transformed = transform_model(model, parse_transform(grammar))
            arp = exact_arp(transformed)
            scores = _sample_and_score(
                transformed, budget, max_len, seed, window, orders, scorer=model, reference=reference
            )
            row: Dict[str, object] = {"prefix": prefix, "t": t, "method": grammar, "arp": arp.value, "diverged": arp.diverged}
            row["ppl_c"] = scores.ppl_c
            row.update(_metric_columns(scores, orders))
            rows.append(row)
        logger.info("balance sweep for %s done", prefix)
    return rows


# ---------------------------------------------------------------------------
# Rebalanced encoding
# ---------------------------------------------------------------------------
def _encoded_model_stats(
    sequences: Sequence[Sequence[str]],
    temperature: float,
    budget: int,
    max_len: int,
    seed: int,
    window: int,
    orders: Sequence[int],
) -> Dict[str, object]:
    model = build_model(sequences)
    transformed = transform_model(model, parse_transform(f"temp:{temperature!r}"))
    arp = exact_arp(transformed)
    generated = generate_corpus(transformed, _STOCHASTIC, budget, max_len, seed)
    surface = [encoding.detokenize(s, strict=False) for s in generated]
    report = score_sequences(surface, window, orders, per_sequence=False)
    stats: Dict[str, object] = {
        "n": model.n,
        "zeta_n": model.zeta_n,
        "max_transition": float(model.B.max()),
        "denominator": bounds.inflow_outflow_denominator(model),
        "arp": arp.value,
        "diverged": arp.diverged,
    }
    stats.update(_metric_columns(report, orders))
    return stats


def rebalance_experiment(
    corpus: Sequence[Sequence[str]],
    bpe_merges: int,
    re_steps: int,
    gamma: float,
    temperature: float,
    budget: int,
    max_len: int,
    seed: int,
    window: int = 16,
    orders: Sequence[int] = (2, 3, 4),
    re_min_count: int = 1,
) -> Dict[str, object]:
    """Markov models on the BPE corpus and on the BPE+RE corpus, side by side.

    Rep metrics are computed on detokenized surface words so both encodings are comparable.
    """
    bpe_table = encoding.learn_bpe(corpus, bpe_merges)
    bpe_corpus = encoding.apply_bpe_corpus(corpus, bpe_table)
    re_result = encoding.learn_re_report(bpe_corpus, re_steps, gamma, min_count=re_min_count)
    re_corpus = encoding.apply_re_corpus(bpe_corpus, re_result.table)
    out = {
        "gamma": gamma,
        "temperature": temperature,
        "bpe_rules": len(bpe_table),
        "re": re_result.as_dict(),
        "bpe": _encoded_model_stats(bpe_corpus, temperature, budget, max_len, seed, window, orders),
        "bpe+re": _encoded_model_stats(re_corpus, temperature, budget, max_len, seed, window, orders),
    }
    logger.info(
        "rebalance: max transition %.4g -> %.4g", out["bpe"]["max_transition"], out["bpe+re"]["max_transition"]
    )
    return out


def rebalance_rows(result: Dict[str, object]) -> Rows:
    """Flatten :func:`rebalance_experiment` output into one row per encoding."""
    rows = []
    for name in ("bpe", "bpe+re"):
        row: Dict[str, object] = {"encoding": name}
        row.update(result[name])
        rows.append(row)
    return rows


__all__ = [
    "correlation_experiment",
    "spearman_summary",
    "inflow_experiment",
    "group_by_pair_count",
    "method_row",
    "methods_experiment",
    "balance_experiment",
    "rebalance_experiment",
    "rebalance_rows",
]
