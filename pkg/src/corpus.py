"""Utilities to ingest plain-text corpora as token sequences."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import CorpusEncodingError, EmptyCorpus
from .text_utils import join_line, split_tokens

logger = logging.getLogger(__name__)


@dataclass
class Corpus:
    """One whitespace-tokenized sequence per non-empty line."""

    sequences: List[List[str]]
    source_path: Optional[Path] = None
    line_count: int = 0
    skipped_empty: int = 0
    token_count: int = field(init=False)

    def __post_init__(self) -> None:
        self.token_count = sum(len(seq) for seq in self.sequences)

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self) -> Iterator[List[str]]:
        return iter(self.sequences)


def _decode(path: Path) -> str:
    data = path.read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusEncodingError(str(path), exc.start) from None


def iter_lines(path: Path, lowercase: bool = False, max_lines: Optional[int] = None) -> Iterator[Tuple[int, List[str]]]:
    """Yield ``(line_number, tokens)`` for each line (1-based), empty ones included.

    Lowercasing happens before tokenization; no Unicode normalization is applied.
    """
    text = _decode(Path(path))
    for number, line in enumerate(text.splitlines(), start=1):
        if max_lines is not None and number > max_lines:
            return
        if lowercase:
            line = line.lower()
        yield number, split_tokens(line)


def ingest(path: Path, lowercase: bool = False, max_lines: Optional[int] = None) -> Corpus:
    """Read a corpus file; empty lines are skipped and counted."""
    if max_lines is not None and max_lines < 0:
        raise ValueError("max_lines must be >= 0")
    path = Path(path)
    sequences: List[List[str]] = []
    skipped = 0
    lines = 0
    for _, tokens in iter_lines(path, lowercase, max_lines):
        lines += 1
        if tokens:
            sequences.append(tokens)
        else:
            skipped += 1
    corpus = Corpus(sequences, source_path=path, line_count=lines, skipped_empty=skipped)
    logger.info("ingested %s: %d sequences, %d tokens, %d empty lines", path, len(corpus), corpus.token_count, skipped)
    return corpus


def require_nonempty(corpus: Corpus) -> Corpus:
    if not corpus.sequences:
        where = corpus.source_path or "corpus"
        raise EmptyCorpus(f"{where} contains no tokens")
    return corpus


def read_sequences(path: Path) -> List[List[str]]:
    """Token-stream file: one sequence per line, single-space separated; empty lines dropped."""
    return [tokens for _, tokens in iter_lines(Path(path)) if tokens]


def write_sequences(path: Path, sequences: Iterable[Sequence[str]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for seq in sequences:
            handle.write(join_line(seq) + "\n")


__all__ = ["Corpus", "iter_lines", "ingest", "require_nonempty", "read_sequences", "write_sequences"]
