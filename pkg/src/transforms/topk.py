"""Top-k truncation."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidTransform
from .base import Transform, descending_order, renormalize


class TopK(Transform):
    """Keep the ``k`` most probable tokens and renormalize.

    Ties at the cut-off keep the lower token id. ``k`` larger than the vocabulary
    keeps everything.
    """

    kind = "topk"

    def __init__(self, k: int) -> None:
        if int(k) != k or k < 1:
            raise InvalidTransform(f"topk needs an integer k >= 1, got {k!r}")
        self.k = int(k)

    @property
    def param(self) -> float:
        return self.k

    def __str__(self) -> str:
        return f"topk:{self.k}"

    def apply(self, probs: np.ndarray) -> np.ndarray:
        keep = descending_order(probs)[: self.k]
        masked = np.zeros_like(probs)
        masked[keep] = probs[keep]
        return renormalize(masked)


__all__ = ["TopK"]
