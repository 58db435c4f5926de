"""Collection of interchangeable decoding transforms."""

from .base import Transform
from .stochastic import Stochastic
from .greedy import Greedy
from .topk import TopK
from .nucleus import Nucleus
from .temperature import Temperature
from .length_penalty import LengthPenalty
from .chain import TransformSpec, parse_transform

__all__ = [
    "Transform",
    "Stochastic",
    "Greedy",
    "TopK",
    "Nucleus",
    "Temperature",
    "LengthPenalty",
    "TransformSpec",
    "parse_transform",
]
