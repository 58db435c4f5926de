"""Repetition analysis of Markov generation models: ARP, bounds, decoding transforms and encodings."""

from .markov import TransitionModel, Vocabulary, build_model, exact_arp
from .bounds import BoundReport, bound_report
from .transforms import (
    Transform,
    Stochastic,
    Greedy,
    TopK,
    Nucleus,
    Temperature,
    LengthPenalty,
    TransformSpec,
    parse_transform,
)
from .sampling import apply_transform, generate, generate_corpus, transform_model
from .metrics import RepetitionReport, score_sequences
from .encoding import MergeRule, MergeTable
from .corpus import Corpus, ingest
from .synthetic import SyntheticCorpusSpec, default_corpus

__all__ = [
    "TransitionModel",
    "Vocabulary",
    "build_model",
    "exact_arp",
    "BoundReport",
    "bound_report",
    "Transform",
    "Stochastic",
    "Greedy",
    "TopK",
    "Nucleus",
    "Temperature",
    "LengthPenalty",
    "TransformSpec",
    "parse_transform",
    "apply_transform",
    "generate",
    "generate_corpus",
    "transform_model",
    "RepetitionReport",
    "score_sequences",
    "MergeRule",
    "MergeTable",
    "Corpus",
    "ingest",
    "SyntheticCorpusSpec",
    "default_corpus",
]
