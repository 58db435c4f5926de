"""Decoding transforms applied to Markov models, and sequence generation.

Transforms operate on next-token distributions whose last entry is EOS. A model is
transformed row by row on ``[B_i, b_i]``; sampling walks the (transformed) chain
with inverse-CDF draws over ascending token ids so a seed fixes the output.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateSupport, InvalidDistribution
from .markov import TransitionModel
from .transforms import Transform, TransformSpec, parse_transform
from .transforms.base import validate_distribution

logger = logging.getLogger(__name__)

SpecLike = Union[TransformSpec, Transform, str]


def as_spec(spec: SpecLike) -> TransformSpec:
    if isinstance(spec, TransformSpec):
        return spec
    if isinstance(spec, Transform):
        return TransformSpec((spec,))
    return parse_transform(spec)


def apply_transform(d, spec: SpecLike) -> np.ndarray:
    """Apply a transform (or chain) to a distribution; the result is a valid distribution."""
    return as_spec(spec).apply(d)


def transform_model(model: TransitionModel, spec: SpecLike) -> TransitionModel:
    """Row-wise transform of the chain; zeta is recomputed and counts are carried over."""
    spec = as_spec(spec)
    if spec.is_identity:
        return model
    n = model.n
    B = np.empty((n, n))
    b = np.empty(n)
    for i in range(n):
        try:
            row = spec.apply(model.row(i))
        except (DegenerateSupport, InvalidDistribution) as exc:
            raise type(exc)(f"row {model.vocab.token_of(i)!r}: {exc}") from exc
        B[i] = row[:n]
        b[i] = row[n]
    out = TransitionModel.from_arrays(model.vocab, B, b, model.counts)
    logger.info("transformed model with %s: zeta_n %.6g -> %.6g", spec, model.zeta_n, out.zeta_n)
    return out


def _draw(cumulative: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random() * cumulative[-1]
    idx = int(np.searchsorted(cumulative, u, side="right"))
    return min(idx, cumulative.size - 1)


def generate(
    model: TransitionModel,
    spec: SpecLike,
    start: str,
    max_len: int,
    seed: int,
) -> List[str]:
    """Sample one sequence beginning with ``start`` until EOS or ``max_len`` tokens.

    EOS is not part of the returned sequence.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    spec = as_spec(spec)
    current = model.vocab.id_of(start)
    rng = np.random.default_rng(seed)
    cache: Dict[int, np.ndarray] = {}
    out = [start]
    eos = model.vocab.eos_id
    while len(out) < max_len:
        cumulative = cache.get(current)
        if cumulative is None:
            cumulative = np.cumsum(spec.apply(model.row(current)))
            cache[current] = cumulative
        nxt = _draw(cumulative, rng)
        if nxt == eos:
            break
        out.append(model.vocab.token_of(nxt))
        current = nxt
    return out


def generate_corpus(
    model: TransitionModel,
    spec: SpecLike,
    n_sequences: int,
    max_len: int,
    seed: int,
    starts: Optional[Sequence[str]] = None,
) -> List[List[str]]:
    """Generate ``n_sequences`` sequences; start words cycle through ``starts``
    (default: the whole vocabulary by id) and sequence ``i`` uses seed ``seed + i``."""
    if n_sequences < 0:
        raise ValueError("n_sequences must be >= 0")
    spec = as_spec(spec)
    pool = list(starts) if starts is not None else list(model.vocab.tokens)
    if not pool:
        raise ValueError("no start words")
    corpus = [
        generate(model, spec, pool[i % len(pool)], max_len, seed + i)
        for i in range(n_sequences)
    ]
    logger.info("generated %d sequences with %s", len(corpus), spec)
    return corpus


__all__ = [
    "SpecLike",
    "as_spec",
    "validate_distribution",
    "apply_transform",
    "transform_model",
    "generate",
    "generate_corpus",
]
