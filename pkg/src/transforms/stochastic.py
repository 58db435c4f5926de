"""Stochastic sampling: the identity transform."""

from __future__ import annotations

import numpy as np

from .base import Transform


class Stochastic(Transform):
    kind = "stochastic"

    def apply(self, probs: np.ndarray) -> np.ndarray:
        return probs.copy()


__all__ = ["Stochastic"]
