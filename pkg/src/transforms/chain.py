"""Composition of transforms and the ``kind[:param]+kind[:param]`` grammar."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from ..errors import InvalidTransform
from .base import Transform, validate_distribution
from .greedy import Greedy
from .length_penalty import LengthPenalty
from .nucleus import Nucleus
from .stochastic import Stochastic
from .temperature import Temperature
from .topk import TopK

# kind -> (constructor, needs a parameter)
_REGISTRY: Dict[str, Tuple[Callable[..., Transform], bool]] = {
    "stochastic": (Stochastic, False),
    "greedy": (Greedy, False),
    "topk": (TopK, True),
    "nucleus": (Nucleus, True),
    "temp": (Temperature, True),
    "lp": (LengthPenalty, True),
}
_ALIASES = {"temperature": "temp", "length_penalty": "lp", "top_k": "topk", "top_p": "nucleus"}


@dataclass(frozen=True)
class TransformSpec:
    """Ordered chain of transforms, applied left to right."""

    steps: Tuple[Transform, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise InvalidTransform("a transform chain needs at least one step")
        object.__setattr__(self, "steps", tuple(self.steps))

    @classmethod
    def of(cls, *steps: Transform) -> "TransformSpec":
        return cls(tuple(steps))

    def __str__(self) -> str:
        return "+".join(str(step) for step in self.steps)

    @property
    def kinds(self) -> Tuple[str, ...]:
        return tuple(step.kind for step in self.steps)

    @property
    def is_identity(self) -> bool:
        return all(isinstance(step, Stochastic) for step in self.steps)

    def apply(self, probs) -> np.ndarray:
        out = validate_distribution(probs)
        for step in self.steps:
            out = step.apply(out)
        return out


def _parse_step(text: str) -> Transform:
    kind, sep, raw = text.strip().partition(":")
    kind = _ALIASES.get(kind.strip().lower(), kind.strip().lower())
    if kind not in _REGISTRY:
        raise InvalidTransform(f"unknown transform kind {kind!r} (expected one of {', '.join(_REGISTRY)})")
    ctor, needs_param = _REGISTRY[kind]
    if not needs_param:
        if sep:
            raise InvalidTransform(f"{kind} takes no parameter")
        return ctor()
    if not sep or not raw.strip():
        raise InvalidTransform(f"{kind} needs a parameter, e.g. {kind}:1")
    try:
        value = int(raw) if kind == "topk" else float(raw)
    except ValueError:
        raise InvalidTransform(f"bad parameter {raw!r} for {kind}") from None
    return ctor(value)


def parse_transform(text: str) -> TransformSpec:
    """Parse ``"topk:40+temp:0.9"``-style strings into a :class:`TransformSpec`."""
    if not isinstance(text, str) or not text.strip():
        raise InvalidTransform("empty transform string")
    return TransformSpec(tuple(_parse_step(part) for part in text.split("+")))


__all__ = ["TransformSpec", "parse_transform"]
