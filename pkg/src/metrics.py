"""Loop detection and repetition metrics over token sequences.

Positions in loop pairs and repetition witnesses are 1-based. Corpus-level values
are means of per-sequence values unless stated otherwise.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyInput, EmptySequenceSet, SequenceTooShort
from .markov import TransitionModel
from .text_utils import iter_bigrams, iter_ngrams

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-10

Tokens = Sequence[Hashable]


# ---------------------------------------------------------------------------
# Loops and repetition subsequences
# ---------------------------------------------------------------------------
def find_loops(s: Tokens) -> List[Tuple[int, int]]:
    """All 1-based pairs ``(r, t)`` with ``r < t`` and ``s_r == s_t``, lexicographically."""
    return [(r + 1, t + 1) for r in range(len(s)) for t in range(r + 1, len(s)) if s[r] == s[t]]


def has_repetition_subsequence(s: Tokens) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Smallest 1-based ``(p, q)`` with ``p < q``, ``2q - p <= |s|`` and
    ``s_{i+q-p} == s_i`` for every ``i`` in ``[p, q]``."""
    L = len(s)
    for p in range(1, L + 1):
        for q in range(p + 1, L + 1):
            if 2 * q - p > L:
                break
            shift = q - p
            if all(s[i - 1 + shift] == s[i - 1] for i in range(p, q + 1)):
                return True, (p, q)
    return False, None


def adjacent_identical_loops(s: Tokens) -> Optional[Tuple[int, int, int]]:
    """Loops ``(r, t)`` and ``(t, u)`` whose spans ``s[r..t]`` and ``s[t..u]`` are equal.

    Returns the first 1-based triple ``(r, t, u)`` found, or None.
    """
    loops = find_loops(s)
    starts = set(loops)
    for r, t in loops:
        u = 2 * t - r
        if (t, u) in starts and list(s[r - 1 : t]) == list(s[t - 1 : u]):
            return r, t, u
    return None


# ---------------------------------------------------------------------------
# rep-w, rep-n, rep-r
# ---------------------------------------------------------------------------
def rep_w_sequence(s: Tokens, w: int) -> float:
    """Share of positions whose token occurs among the previous ``w`` tokens."""
    if w < 1:
        raise ValueError("w must be >= 1")
    if not s:
        raise SequenceTooShort("rep-w needs a non-empty sequence")
    hits = sum(1 for t in range(1, len(s)) if s[t] in s[max(0, t - w) : t])
    return hits / len(s)


def rep_w(sequences: Sequence[Tokens], w: int) -> float:
    """Mean of :func:`rep_w_sequence`; empty sequences are skipped."""
    rates = [rep_w_sequence(s, w) for s in sequences if len(s)]
    if not rates:
        raise EmptySequenceSet("rep-w needs at least one non-empty sequence")
    return float(np.mean(rates))


def rep_n(s: Tokens, n: int) -> float:
    """``1 - distinct n-grams / (|s| - n + 1)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(s) < n:
        raise SequenceTooShort(f"sequence of length {len(s)} has no {n}-grams")
    total = len(s) - n + 1
    return 1.0 - len(set(iter_ngrams(s, n))) / total


def rep_n_corpus(sequences: Sequence[Tokens], n: int, micro: bool = False) -> Tuple[float, int]:
    """Corpus rep-n and the number of sequences shorter than ``n`` that were skipped.

    ``micro=True`` pools distinct and total n-gram counts over sequences instead of
    averaging per-sequence values.
    """
    eligible = [s for s in sequences if len(s) >= n]
    skipped = len(sequences) - len(eligible)
    if not eligible:
        raise EmptySequenceSet(f"no sequence has length >= {n}")
    if micro:
        distinct = sum(len(set(iter_ngrams(s, n))) for s in eligible)
        total = sum(len(s) - n + 1 for s in eligible)
        return 1.0 - distinct / total, skipped
    return float(np.mean([rep_n(s, n) for s in eligible])), skipped


def rep_r(s: Tokens) -> float:
    """Share of positions covered by a bigram that occurs at least twice in ``s``."""
    if not s:
        raise SequenceTooShort("rep-r needs a non-empty sequence")
    counts = Counter(iter_bigrams(s))
    L = len(s)
    covered = 0
    for i in range(L):
        forward = i + 1 < L and counts[(s[i], s[i + 1])] >= 2
        backward = i > 0 and counts[(s[i - 1], s[i])] >= 2
        if forward or backward:
            covered += 1
    return covered / L


# ---------------------------------------------------------------------------
# Perplexity under the Markov model
# ---------------------------------------------------------------------------
class Perplexity(NamedTuple):
    value: float
    transitions: int
    floor_hits: int


def perplexity(model: TransitionModel, sequences: Sequence[Sequence[str]], floor: float = PROB_FLOOR) -> Perplexity:
    """``exp(-mean log p(next | cur))`` over every transition, EOS included.

    Zero-probability transitions are scored at ``floor`` and counted.
    """
    vocab = model.vocab
    log_sum = 0.0
    transitions = 0
    floor_hits = 0
    for seq in sequences:
        if not seq:
            continue
        ids = [vocab.id_of(tok) for tok in seq]
        ids.append(vocab.eos_id)
        for cur, nxt in iter_bigrams(ids):
            p = float(model.b[cur]) if nxt == vocab.eos_id else float(model.B[cur, nxt])
            if p <= 0.0:
                p = floor
                floor_hits += 1
            log_sum += math.log(p)
            transitions += 1
    if transitions == 0:
        raise EmptyInput("no transitions to score")
    if floor_hits:
        logger.debug("perplexity used the %.0e floor %d times", floor, floor_hits)
    return Perplexity(math.exp(-log_sum / transitions), transitions, floor_hits)


def ppl_c_markov(
    model: TransitionModel,
    generated: Sequence[Sequence[str]],
    reference: Sequence[Sequence[str]],
    floor: float = PROB_FLOOR,
) -> float:
    """Perplexity of ``generated`` divided by perplexity of ``reference``."""
    return perplexity(model, generated, floor).value / perplexity(model, reference, floor).value


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------
def _pair_ids(model: TransitionModel, gamma: float) -> FrozenSet[Tuple[int, int]]:
    rows, cols = np.nonzero(model.B > gamma)
    return frozenset(zip(rows.tolist(), cols.tolist()))


def count_high_inflow_pairs(
    s: Sequence[str],
    model: TransitionModel,
    gamma: float,
    pairs: Optional[FrozenSet[Tuple[int, int]]] = None,
) -> int:
    """Number of adjacent token pairs ``(u, v)`` in ``s`` with ``B_uv > gamma``."""
    if pairs is None:
        pairs = _pair_ids(model, gamma)
    ids = [model.vocab.id_of(tok) for tok in s]
    return sum(1 for pair in iter_bigrams(ids) if pair in pairs)


@dataclass
class RepetitionReport:
    rep_w: float
    rep_n: Dict[int, float]
    rep_r: float
    ppl_c: Optional[float] = None
    window: int = 16
    n_sequences: int = 0
    skipped: Dict[int, int] = field(default_factory=dict)
    floor_hits: int = 0
    per_sequence: List[Dict[str, object]] = field(default_factory=list)

    def summary(self) -> Dict[str, object]:
        """Flat corpus-level values, suitable for a CSV row."""
        out: Dict[str, object] = {"rep_w": self.rep_w}
        for order, value in sorted(self.rep_n.items()):
            out[f"rep_{order}"] = value
        out["rep_r"] = self.rep_r
        if self.ppl_c is not None:
            out["ppl_c"] = self.ppl_c
        return out

    def as_dict(self) -> Dict[str, object]:
        return {
            "window": self.window,
            "n_sequences": self.n_sequences,
            "rep_w": self.rep_w,
            "rep_n": {str(k): v for k, v in sorted(self.rep_n.items())},
            "rep_r": self.rep_r,
            "ppl_c": self.ppl_c,
            "skipped": {str(k): v for k, v in sorted(self.skipped.items())},
            "floor_hits": self.floor_hits,
            "per_sequence": self.per_sequence,
        }


def score_sequences(
    sequences: Sequence[Sequence[str]],
    w: int = 16,
    orders: Sequence[int] = (2, 3, 4),
    model: Optional[TransitionModel] = None,
    reference: Optional[Sequence[Sequence[str]]] = None,
    per_sequence: bool = True,
) -> RepetitionReport:
    """Corpus and per-sequence rep-w / rep-n / rep-r, plus ppl-c when a model and reference are given."""
    nonempty = [s for s in sequences if len(s)]
    if not nonempty:
        raise EmptySequenceSet("nothing to score")
    rep_n_values: Dict[int, float] = {}
    skipped: Dict[int, int] = {}
    for order in orders:
        try:
            rep_n_values[order], skipped[order] = rep_n_corpus(nonempty, order)
        except EmptySequenceSet:
            rep_n_values[order], skipped[order] = float("nan"), len(nonempty)
    report = RepetitionReport(
        rep_w=rep_w(nonempty, w),
        rep_n=rep_n_values,
        rep_r=float(np.mean([rep_r(s) for s in nonempty])),
        window=w,
        n_sequences=len(nonempty),
        skipped=skipped,
    )
    if model is not None and reference is not None:
        gen = perplexity(model, nonempty)
        ref = perplexity(model, reference)
        report.ppl_c = gen.value / ref.value
        report.floor_hits = gen.floor_hits + ref.floor_hits
    if per_sequence:
        for s in nonempty:
            row: Dict[str, object] = {"length": len(s), "rep_w": rep_w_sequence(s, w)}
            for order in orders:
                row[f"rep_{order}"] = rep_n(s, order) if len(s) >= order else None
            row["rep_r"] = rep_r(s)
            report.per_sequence.append(row)
    return report


__all__ = [
    "PROB_FLOOR",
    "find_loops",
    "has_repetition_subsequence",
    "adjacent_identical_loops",
    "rep_w",
    "rep_w_sequence",
    "rep_n",
    "rep_n_corpus",
    "rep_r",
    "Perplexity",
    "perplexity",
    "ppl_c_markov",
    "count_high_inflow_pairs",
    "RepetitionReport",
    "score_sequences",
]
