"""Length penalty: boost the EOS logit by a constant."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import softmax

from ..errors import InvalidTransform
from .base import Transform, log_support


class LengthPenalty(Transform):
    """``softmax(log p + beta * [i == EOS])``; EOS is the last entry.

    An EOS probability of exactly zero stays zero.
    """

    kind = "lp"

    def __init__(self, beta: float) -> None:
        if not math.isfinite(beta):
            raise InvalidTransform(f"length penalty needs a finite beta, got {beta!r}")
        self.beta = float(beta)

    @property
    def param(self) -> float:
        return self.beta

    def apply(self, probs: np.ndarray) -> np.ndarray:
        support, logits = log_support(probs)
        eos = probs.size - 1
        logits = np.where(support == eos, logits + self.beta, logits)
        out = np.zeros_like(probs)
        out[support] = softmax(logits)
        return out


__all__ = ["LengthPenalty"]
