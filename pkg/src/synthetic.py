"""Seeded synthetic corpus for the repetition experiments.

Words are two or three consonant-vowel syllables plus an optional suffix. Every row of
the word chain has one designated top successor:

- collocation pairs ``a -> b`` and ``b -> a`` that close two-word loops,
- words that most likely continue with a shared function word (the hub),
- all other words, which lean more weakly toward some collocation word.

The remaining mass is spread over ``fanout`` popularity-weighted successors. The EOS
probability is small and never the largest entry of a row, so lowering the sampling
temperature always sends a sentence into a loop instead of ending it.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Tuple

import numpy as np

from .config import DEFAULT_CORPUS
from .corpus import write_sequences
from .markov import TransitionModel, Vocabulary
from .sampling import generate_corpus

logger = logging.getLogger(__name__)

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"
SUFFIXES = ("", "", "", "n", "s", "l")
HUB_WORD = "na"
SPREAD_CONCENTRATION = 5.0
MAX_WORDS = 100_000

Range = Tuple[float, float]


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_words: int = 3000
    n_sentences: int = 5000
    loop_share: float = 0.2
    hub_share: float = 0.25
    loop_prob: Range = (0.25, 0.35)
    hub_prob: Range = (0.18, 0.24)
    pull_prob: Range = (0.07, 0.09)
    eos_prob: Range = (0.025, 0.035)
    hub_top_prob: float = 0.05
    fanout: int = 60
    popularity_offset: float = 300.0
    max_len: int = 200
    seed: int = 0

    @property
    def n_loop_words(self) -> int:
        return 2 * int(self.loop_share * self.n_words / 2)

    @property
    def n_hub_words(self) -> int:
        return int(self.hub_share * self.n_words)

    def validate(self) -> "SyntheticCorpusSpec":
        if not 4 <= self.n_words <= MAX_WORDS:
            raise ValueError(f"n_words must be in [4, {MAX_WORDS}], got {self.n_words}")
        if self.n_sentences < 1 or self.max_len < 1:
            raise ValueError("n_sentences and max_len must be >= 1")
        if self.n_loop_words < 2:
            raise ValueError("loop_share leaves no collocation pair")
        if self.hub_share < 0 or self.n_loop_words + self.n_hub_words > self.n_words:
            raise ValueError("loop_share + hub_share must stay within [0, 1]")
        if not 1 <= self.fanout <= self.n_words - 2:
            raise ValueError(f"fanout must be in [1, {self.n_words - 2}], got {self.fanout}")
        if self.popularity_offset <= 0:
            raise ValueError("popularity_offset must be > 0")
        for name in ("loop_prob", "hub_prob", "pull_prob", "eos_prob"):
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi < 1.0:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi < 1, got {(lo, hi)!r}")
        top_hi = max(self.loop_prob[1], self.hub_prob[1], self.pull_prob[1], self.hub_top_prob)
        if top_hi + self.eos_prob[1] >= 1.0:
            raise ValueError("top successor and EOS leave no mass to spread")
        if self.eos_prob[1] >= min(self.loop_prob[0], self.hub_prob[0], self.pull_prob[0], self.hub_top_prob):
            raise ValueError("EOS must stay below every top successor")
        return self


def pseudo_words(n: int, rng: np.random.Generator) -> List[str]:
    """``n`` distinct words of two or three syllables and an optional suffix."""
    syllables = [c + v for c in CONSONANTS for v in VOWELS]
    words: List[str] = []
    seen = {HUB_WORD}
    while len(words) < n:
        size = 2 if rng.random() < 0.4 else 3
        stem = "".join(syllables[k] for k in rng.integers(len(syllables), size=size))
        word = stem + SUFFIXES[int(rng.integers(len(SUFFIXES)))]
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _popularity(n: int, offset: float, rng: np.random.Generator) -> np.ndarray:
    weights = 1.0 / (rng.permutation(n) + offset)
    return weights / weights.sum()


def _spread(rng: np.random.Generator, popularity: np.ndarray, size: int, exclude: Iterable[int]) -> np.ndarray:
    p = popularity.copy()
    for idx in exclude:
        if idx < p.size:
            p[idx] = 0.0
    return rng.choice(p.size, size=size, replace=False, p=p / p.sum())


def _build(spec: SyntheticCorpusSpec) -> Tuple[TransitionModel, np.ndarray]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    words = pseudo_words(spec.n_words, rng)
    popularity = _popularity(spec.n_words, spec.popularity_offset, rng)
    hub = spec.n_words
    n = spec.n_words + 1

    order = rng.permutation(spec.n_words)
    n_loop, n_hub = spec.n_loop_words, spec.n_hub_words
    loop_words = order[:n_loop]
    hub_words = order[n_loop : n_loop + n_hub]
    pull_words = order[n_loop + n_hub :]

    top = np.empty(spec.n_words, dtype=np.int64)
    top_mass = np.empty(spec.n_words)
    pairs = loop_words.reshape(-1, 2)
    top[pairs[:, 0]] = pairs[:, 1]
    top[pairs[:, 1]] = pairs[:, 0]
    top_mass[loop_words] = rng.uniform(*spec.loop_prob, size=n_loop)
    top[hub_words] = hub
    top_mass[hub_words] = rng.uniform(*spec.hub_prob, size=n_hub)
    top[pull_words] = rng.choice(loop_words, size=pull_words.size)
    top_mass[pull_words] = rng.uniform(*spec.pull_prob, size=pull_words.size)

    B = np.zeros((n, n))
    eos = rng.uniform(*spec.eos_prob, size=n)
    for i in range(spec.n_words):
        succ = _spread(rng, popularity, spec.fanout, (i, int(top[i])))
        weights = rng.dirichlet(np.full(spec.fanout, SPREAD_CONCENTRATION))
        B[i, succ] = (1.0 - top_mass[i] - eos[i]) * weights
        B[i, top[i]] = top_mass[i]

    # the hub fans out over half the vocabulary with one weak pull into a loop
    target = int(rng.choice(loop_words))
    wide = _spread(rng, popularity, spec.n_words // 2, (target,))
    B[hub, wide] = (1.0 - spec.hub_top_prob - eos[hub]) * popularity[wide] / popularity[wide].sum()
    B[hub, target] = spec.hub_top_prob

    b = 1.0 - B.sum(axis=1)
    model = TransitionModel.from_arrays(Vocabulary(tuple(words) + (HUB_WORD,)), B, b)
    logger.debug(
        "synthetic chain: %d loop, %d hub, %d pull words, zeta n %.4g",
        n_loop, n_hub, pull_words.size, model.zeta_n,
    )
    return model, popularity


def synthetic_model(spec: SyntheticCorpusSpec = SyntheticCorpusSpec()) -> TransitionModel:
    """The word chain the synthetic corpus is sampled from."""
    return _build(spec)[0]


def synthetic_corpus(spec: SyntheticCorpusSpec = SyntheticCorpusSpec()) -> List[List[str]]:
    """Sample ``spec.n_sentences`` sentences; start words follow the popularity weights."""
    model, popularity = _build(spec)
    rng = np.random.default_rng(spec.seed + 1)
    starts = [model.vocab.token_of(int(k)) for k in rng.choice(spec.n_words, size=spec.n_sentences, p=popularity)]
    return generate_corpus(model, "stochastic", spec.n_sentences, spec.max_len, spec.seed, starts=starts)


def write_synthetic_corpus(
    path: Path,
    spec: SyntheticCorpusSpec = SyntheticCorpusSpec(),
    overwrite: bool = False,
) -> Path:
    """Write the corpus once; an existing file is reused unless ``overwrite`` is set."""
    path = Path(path)
    if path.exists() and not overwrite:
        return path
    sequences = synthetic_corpus(spec)
    partial = path.with_name(path.name + ".partial")
    write_sequences(partial, sequences)
    os.replace(partial, path)
    logger.info("wrote synthetic corpus %s: %d sentences", path, len(sequences))
    return path


def default_corpus() -> Path:
    """Path of the bundled experiment corpus, generated on first use."""
    return write_synthetic_corpus(DEFAULT_CORPUS)


__all__ = [
    "HUB_WORD",
    "SyntheticCorpusSpec",
    "pseudo_words",
    "synthetic_model",
    "synthetic_corpus",
    "write_synthetic_corpus",
    "default_corpus",
]
