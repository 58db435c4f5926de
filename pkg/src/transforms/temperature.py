"""Temperature rescaling of log-probabilities."""

from __future__ import annotations

import numpy as np
from scipy.special import softmax

from ..errors import InvalidTransform
from .base import Transform, log_support


class Temperature(Transform):
    """``softmax(log p / t)`` over the support of ``p``; zero entries stay zero."""

    kind = "temp"

    def __init__(self, t: float) -> None:
        if not t > 0.0:
            raise InvalidTransform(f"temperature must be > 0, got {t!r}")
        self.t = float(t)

    @property
    def param(self) -> float:
        return self.t

    def apply(self, probs: np.ndarray) -> np.ndarray:
        if self.t == 1.0:
            return probs.copy()
        support, logits = log_support(probs)
        out = np.zeros_like(probs)
        out[support] = softmax(logits / self.t)
        return out


__all__ = ["Temperature"]
