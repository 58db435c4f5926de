"""Abstract decoding-transform contract shared by all implementations."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..errors import DegenerateSupport, InvalidDistribution

DIST_TOL = 1e-9


class Transform(ABC):
    """Operator mapping a next-token distribution to another distribution.

    Distributions are 1-D float arrays whose last entry is the EOS probability.
    """

    kind: str = ""

    @abstractmethod
    def apply(self, probs: np.ndarray) -> np.ndarray:
        """Return the transformed distribution; ``probs`` is already validated."""

    @property
    def param(self) -> Optional[float]:
        return None

    def __str__(self) -> str:
        if self.param is None:
            return self.kind
        return f"{self.kind}:{self.param:g}"

    def __repr__(self) -> str:
        return f"{type(self).__name__}({str(self)!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Transform) and (self.kind, self.param) == (other.kind, other.param)

    def __hash__(self) -> int:
        return hash((self.kind, self.param))


def validate_distribution(probs) -> np.ndarray:
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidDistribution(f"distribution must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidDistribution("distribution entries must be finite and nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > DIST_TOL:
        raise InvalidDistribution(f"distribution sums to {total!r}")
    return arr


def renormalize(masked: np.ndarray) -> np.ndarray:
    total = float(masked.sum())
    if total <= 0.0:
        raise DegenerateSupport("no probability mass left after masking")
    return masked / total


def log_support(probs: np.ndarray):
    """Indices with positive probability and their log-probabilities (zeros are excluded)."""
    support = np.flatnonzero(probs > 0)
    if support.size == 0:
        raise DegenerateSupport("distribution has empty support")
    return support, np.log(probs[support])


def descending_order(probs: np.ndarray) -> np.ndarray:
    """Indices sorted by descending probability; ties keep the lower index first."""
    return np.argsort(-probs, kind="stable")


__all__ = [
    "DIST_TOL",
    "Transform",
    "validate_distribution",
    "renormalize",
    "log_support",
    "descending_order",
]
