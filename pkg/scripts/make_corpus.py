#!/usr/bin/env python3
"""Write the seeded synthetic corpus the experiments run on by default."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from src.config import DEFAULT_CORPUS
from src.synthetic import SyntheticCorpusSpec, write_synthetic_corpus

DEFAULTS = SyntheticCorpusSpec()


def parse_args(argv: Iterable[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Generate the synthetic experiment corpus.")
    parser.add_argument("--out", type=Path, default=DEFAULT_CORPUS, help=f"Output file (default: {DEFAULT_CORPUS}).")
    parser.add_argument("--seed", type=int, default=DEFAULTS.seed)
    parser.add_argument("--words", type=int, default=DEFAULTS.n_words, help="Vocabulary size before the hub word.")
    parser.add_argument("--sentences", type=int, default=DEFAULTS.n_sentences)
    parser.add_argument("--max-len", type=int, default=DEFAULTS.max_len)
    parser.add_argument("--overwrite", action="store_true", help="Regenerate even if the file exists.")
    return parser.parse_args(list(argv))


def main(argv: Iterable[str]) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    spec = replace(DEFAULTS, seed=args.seed, n_words=args.words, n_sentences=args.sentences, max_len=args.max_len)
    try:
        spec.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    path = write_synthetic_corpus(args.out, spec, overwrite=args.overwrite)
    size = path.stat().st_size
    print(f"Corpus {path}: {size / 1e6:.2f} MB")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
