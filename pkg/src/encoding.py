"""Byte-pair encoding and Rebalanced Encoding (RE).

Marker conventions:

- ``@@`` suffix: the piece continues into the next token (``de@@ crease`` is "decrease").
- ``==`` infix: a merged token that still spans several words (``involved==in``).

BPE splits words into characters plus an end-of-word symbol and greedily merges the
most frequent adjacent pair. RE repeatedly merges token pairs whose first-order
transition probability exceeds ``gamma`` so that no single successor dominates a row.
"""

from __future__ import annotations

import heapq
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .errors import EmptyCorpus, InvalidGamma, MalformedMarkers
from .text_utils import iter_bigrams

logger = logging.getLogger(__name__)

CONTINUATION = "@@"
JOIN = "=="
END_OF_WORD = "</w>"
BPE_MIN_FREQUENCY = 1

Pair = Tuple[str, str]


@dataclass(frozen=True)
class MergeRule:
    left: str
    right: str
    step: int
    origin: str  # "bpe" or "re"

    def __post_init__(self) -> None:
        if not self.left or not self.right:
            raise ValueError("merge rule sides must be non-empty")
        if self.origin not in ("bpe", "re"):
            raise ValueError(f"unknown merge origin {self.origin!r}")

    @property
    def pair(self) -> Pair:
        return self.left, self.right


@dataclass
class MergeTable:
    """Ordered merge rules; application order is list order."""

    kind: str
    rules: List[MergeRule] = field(default_factory=list)
    continuation: str = CONTINUATION
    join: str = JOIN
    _seen: Set[Pair] = field(default_factory=set, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("bpe", "re"):
            raise ValueError(f"unknown merge table kind {self.kind!r}")
        rules, self.rules = list(self.rules), []
        for rule in rules:
            self.add(rule)

    def add(self, rule: MergeRule) -> bool:
        """Append ``rule`` unless its pair is already present; returns whether it was added."""
        if rule.pair in self._seen:
            return False
        self._seen.add(rule.pair)
        self.rules.append(rule)
        return True

    def ranks(self) -> Dict[Pair, int]:
        return {rule.pair: rank for rank, rule in enumerate(self.rules)}

    def __iter__(self) -> Iterator[MergeRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __contains__(self, pair: object) -> bool:
        return pair in self._seen


# ---------------------------------------------------------------------------
# BPE
# ---------------------------------------------------------------------------
def _word_symbols(word: str) -> Tuple[str, ...]:
    return tuple(word) + (END_OF_WORD,)


def _merge_symbols(symbols: Tuple[str, ...], pair: Pair) -> Tuple[str, ...]:
    out: List[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            out.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def learn_bpe(
    corpus: Sequence[Sequence[str]],
    num_merges: int,
    min_frequency: int = BPE_MIN_FREQUENCY,
) -> MergeTable:
    """Greedy character-pair merging by frequency; ties go to the lexicographically smaller pair.

    Stops after ``num_merges`` rules or once no pair occurs at all; ``min_frequency=2``
    additionally refuses merges seen only once.
    """
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    word_counts = Counter(word for seq in corpus for word in seq)
    if not word_counts:
        raise EmptyCorpus("no words to learn BPE merges from")

    words = [_word_symbols(w) for w in sorted(word_counts)]
    freqs = [word_counts[w] for w in sorted(word_counts)]
    stats: Counter = Counter()
    where: Dict[Pair, Set[int]] = defaultdict(set)
    for idx, symbols in enumerate(words):
        for pair in iter_bigrams(symbols):
            stats[pair] += freqs[idx]
            where[pair].add(idx)

    # lazy max-heap; stale entries are skipped when popped
    heap = [(-c, pair) for pair, c in stats.items()]
    heapq.heapify(heap)

    table = MergeTable("bpe")
    for step in range(1, num_merges + 1):
        best, count = None, 0
        while heap:
            neg, pair = heapq.heappop(heap)
            if stats.get(pair, 0) == -neg and -neg > 0:
                best, count = pair, -neg
                break
        if best is None or count < min_frequency:
            break
        table.add(MergeRule(best[0], best[1], step, "bpe"))
        for idx in sorted(where.pop(best, ())):
            old = words[idx]
            new = _merge_symbols(old, best)
            if new == old:
                continue
            touched = set()
            for pair in iter_bigrams(old):
                stats[pair] -= freqs[idx]
                touched.add(pair)
            for pair in iter_bigrams(new):
                stats[pair] += freqs[idx]
                where[pair].add(idx)
                touched.add(pair)
            words[idx] = new
            for pair in touched:
                if pair != best and stats[pair] > 0:
                    heapq.heappush(heap, (-stats[pair], pair))
        stats.pop(best, None)
    logger.info("learned %d BPE merges from %d word types", len(table), len(word_counts))
    return table


def _segment(word: str, ranks: Dict[Pair, int]) -> List[str]:
    symbols = _word_symbols(word)
    while len(symbols) > 1:
        ranked = [(ranks[p], p) for p in iter_bigrams(symbols) if p in ranks]
        if not ranked:
            break
        symbols = _merge_symbols(symbols, min(ranked)[1])
    pieces = list(symbols)
    if pieces[-1] == END_OF_WORD:
        pieces.pop()
    else:
        pieces[-1] = pieces[-1][: -len(END_OF_WORD)]
    return [p + CONTINUATION for p in pieces[:-1]] + [pieces[-1]]


def apply_bpe(words: Sequence[str], table: MergeTable, _cache: Optional[Dict[str, List[str]]] = None) -> List[str]:
    """Segment each word; non-final pieces carry ``@@``."""
    ranks = table.ranks()
    cache = {} if _cache is None else _cache
    out: List[str] = []
    for word in words:
        pieces = cache.get(word)
        if pieces is None:
            pieces = _segment(word, ranks)
            cache[word] = pieces
        out.extend(pieces)
    return out


def apply_bpe_corpus(corpus: Sequence[Sequence[str]], table: MergeTable) -> List[List[str]]:
    cache: Dict[str, List[str]] = {}
    return [apply_bpe(seq, table, cache) for seq in corpus]


def strip_bpe(tokens: Sequence[str]) -> List[str]:
    """Drop ``@@`` continuation markers, gluing pieces back into words."""
    words: List[str] = []
    buffer = ""
    for token in tokens:
        if token.endswith(CONTINUATION):
            buffer += token[: -len(CONTINUATION)]
        else:
            words.append(buffer + token)
            buffer = ""
    if buffer:
        raise MalformedMarkers(f"sequence ends inside a word ({buffer!r}{CONTINUATION})")
    return words


# ---------------------------------------------------------------------------
# Rebalanced Encoding
# ---------------------------------------------------------------------------
def join_tokens(left: str, right: str) -> str:
    """``left==right`` with any ``@@==`` collapsed so subword pieces fuse."""
    return JOIN.join((left, right)).replace(CONTINUATION + JOIN, "")


def _transition_counts(streams: Sequence[Sequence[str]]) -> Tuple[Counter, Counter]:
    pairs: Counter = Counter()
    for stream in streams:
        pairs.update(iter_bigrams(stream))
    totals: Counter = Counter()
    for (u, _), c in pairs.items():
        totals[u] += c
    return pairs, totals


def _transition_probs(streams: Sequence[Sequence[str]], min_count: int = 1) -> Dict[Pair, float]:
    """First-order probabilities of the pairs seen at least ``min_count`` times."""
    pairs, totals = _transition_counts(streams)
    return {(u, v): c / totals[u] for (u, v), c in pairs.items() if c >= min_count}


def transition_max(sequences: Sequence[Sequence[str]], min_count: int = 1) -> float:
    """Largest first-order transition probability between adjacent tokens; 0 without pairs."""
    probs = _transition_probs(sequences, min_count)
    return max(probs.values(), default=0.0)


def _apply_rule(tokens: List[str], pair: Pair) -> List[str]:
    left, right = pair
    i = 0
    while i < len(tokens) - 1:
        if tokens[i] == left and tokens[i + 1] == right:
            tokens[i : i + 2] = [join_tokens(left, right)]
            # the merged token stays at i and is compared with its new neighbor
            continue
        i += 1
    return tokens


def _apply_ranked(tokens: Sequence[str], rules: Sequence[MergeRule], ranks: Dict[Pair, int]) -> List[str]:
    # rules absent from the list are no-ops, so jump to the lowest rank still present
    out = list(tokens)
    done = -1
    while len(out) > 1:
        present = [r for r in (ranks.get(p, -1) for p in iter_bigrams(out)) if r > done]
        if not present:
            break
        done = min(present)
        _apply_rule(out, rules[done].pair)
    return out


def apply_re(tokens: Sequence[str], table: MergeTable) -> List[str]:
    """Apply each rule in order with a left-to-right scan over a live list."""
    return _apply_ranked(tokens, table.rules, table.ranks())


def apply_re_corpus(corpus: Sequence[Sequence[str]], table: MergeTable) -> List[List[str]]:
    ranks = table.ranks()
    return [_apply_ranked(seq, table.rules, ranks) for seq in corpus]


@dataclass
class REResult:
    table: MergeTable
    steps_run: int
    converged: bool
    final_max: float
    min_count: int = 1
    encoded: List[List[str]] = field(default_factory=list, repr=False)

    def as_dict(self) -> Dict[str, object]:
        return {
            "rules": len(self.table),
            "steps_run": self.steps_run,
            "converged": self.converged,
            "final_max": self.final_max,
            "min_count": self.min_count,
        }


def _as_streams(corpus, flat: bool) -> List[List[str]]:
    if corpus and isinstance(corpus[0], str):
        return [list(corpus)]
    streams = [list(seq) for seq in corpus]
    if flat:
        return [[tok for seq in streams for tok in seq]]
    return streams


def learn_re_report(corpus, n_steps: int, gamma: float, flat: bool = False, min_count: int = 1) -> REResult:
    """Run RE learning and report how it stopped.

    ``corpus`` is either one flat token list or a list of sentences. Sentences are
    never paired across their boundaries unless ``flat`` is set. Pairs seen fewer than
    ``min_count`` times are neither merged nor counted toward convergence.
    """
    if not 0.0 < gamma <= 1.0:
        raise InvalidGamma(f"gamma must be in (0, 1], got {gamma!r}")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    streams = _as_streams(corpus, flat)
    where: Dict[str, Set[int]] = defaultdict(set)
    for idx, stream in enumerate(streams):
        for token in stream:
            where[token].add(idx)

    table = MergeTable("re")
    steps_run = 0
    for step in range(1, n_steps + 1):
        probs = _transition_probs(streams, min_count)
        peak = max(probs.values(), default=0.0)
        if peak <= gamma:
            logger.debug("RE step %d: max transition %.6g <= gamma, stopping", step, peak)
            return REResult(table, steps_run, True, peak, min_count, streams)
        steps_run = step
        new_rules = [
            MergeRule(u, v, step, "re") for (u, v) in sorted(p for p, m in probs.items() if m > gamma)
        ]
        added = [rule for rule in new_rules if table.add(rule)]
        for rule in added:
            merged = join_tokens(rule.left, rule.right)
            for idx in sorted(where.get(rule.left, ())):
                before = len(streams[idx])
                if len(_apply_rule(streams[idx], rule.pair)) != before:
                    where[merged].add(idx)
        logger.debug("RE step %d: max %.6g, %d new rules", step, peak, len(added))
        if not added:
            break
    final = transition_max(streams, min_count)
    logger.info("learned %d RE rules in %d steps (final max %.6g)", len(table), steps_run, final)
    return REResult(table, steps_run, final <= gamma, final, min_count, streams)


def learn_re(corpus, n_steps: int, gamma: float, flat: bool = False, min_count: int = 1) -> MergeTable:
    return learn_re_report(corpus, n_steps, gamma, flat, min_count).table


def detokenize(tokens: Sequence[str], strict: bool = True) -> List[str]:
    """Invert the markers: ``==`` separates words, a trailing ``@@`` glues to the next piece.

    With ``strict=False`` a sequence that stops inside a word keeps the partial word
    (generated text may be cut at any token).
    """
    words: List[str] = []
    buffer = ""
    for token in tokens:
        for piece in token.split(JOIN):
            if not piece:
                raise MalformedMarkers(f"empty piece in token {token!r}")
            if piece.endswith(CONTINUATION):
                buffer += piece[: -len(CONTINUATION)]
            else:
                words.append(buffer + piece)
                buffer = ""
    if buffer:
        if not strict:
            return words + [buffer]
        raise MalformedMarkers(f"sequence ends inside a word ({buffer!r}{CONTINUATION})")
    return words


__all__ = [
    "CONTINUATION",
    "JOIN",
    "END_OF_WORD",
    "MergeRule",
    "MergeTable",
    "learn_bpe",
    "apply_bpe",
    "apply_bpe_corpus",
    "strip_bpe",
    "join_tokens",
    "transition_max",
    "learn_re",
    "learn_re_report",
    "REResult",
    "apply_re",
    "apply_re_corpus",
    "detokenize",
]
