"""Nucleus (top-p) truncation."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidTransform
from .base import Transform, descending_order, renormalize

# cumulative sums of a valid distribution may fall short of 1 by rounding
_CUMSUM_SLACK = 1e-12


class Nucleus(Transform):
    """Smallest descending-probability prefix whose mass reaches ``p``, renormalized.

    The element that crosses ``p`` is included.
    """

    kind = "nucleus"

    def __init__(self, p: float) -> None:
        if not 0.0 < p <= 1.0:
            raise InvalidTransform(f"nucleus needs 0 < p <= 1, got {p!r}")
        self.p = float(p)

    @property
    def param(self) -> float:
        return self.p

    def apply(self, probs: np.ndarray) -> np.ndarray:
        order = descending_order(probs)
        cumulative = np.cumsum(probs[order])
        cut = int(np.searchsorted(cumulative, self.p - _CUMSUM_SLACK, side="left")) + 1
        keep = order[: min(cut, order.size)]
        masked = np.zeros_like(probs)
        masked[keep] = probs[keep]
        return renormalize(masked)


__all__ = ["Nucleus"]
