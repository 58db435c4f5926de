"""Greedy decoding as a transform: all mass on the most probable token."""

from __future__ import annotations

import numpy as np

from .base import Transform


class Greedy(Transform):
    """Indicator of the argmax; ties go to the lowest token id."""

    kind = "greedy"

    def apply(self, probs: np.ndarray) -> np.ndarray:
        out = np.zeros_like(probs)
        out[int(np.argmax(probs))] = 1.0
        return out


__all__ = ["Greedy"]
