"""Small token-sequence helpers shared across the metric and encoding modules."""

from __future__ import annotations

from typing import Hashable, Iterator, List, Sequence, Tuple


def split_tokens(line: str) -> List[str]:
    """Split a line on runs of whitespace; empty lines yield ``[]``."""
    return line.split()


def iter_ngrams(tokens: Sequence[Hashable], n: int) -> Iterator[Tuple[Hashable, ...]]:
    """Yield the ``len(tokens) - n + 1`` contiguous n-grams of ``tokens``."""
    for i in range(len(tokens) - n + 1):
        yield tuple(tokens[i : i + n])


def iter_bigrams(tokens: Sequence[Hashable]) -> Iterator[Tuple[Hashable, Hashable]]:
    for i in range(len(tokens) - 1):
        yield tokens[i], tokens[i + 1]


def join_line(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


__all__ = ["split_tokens", "iter_ngrams", "iter_bigrams", "join_line"]
