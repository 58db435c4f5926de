"""Experiment defaults and the validated configuration record built by the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from .errors import InvalidDelta, InvalidGamma, InvalidTransform
from .transforms import parse_transform

ROOT_DIR = Path(__file__).resolve().parents[1]

# generated on first use by src.synthetic.default_corpus
DEFAULT_CORPUS = ROOT_DIR / "data" / "synthetic_corpus.txt"
SAMPLE_CORPUS = ROOT_DIR / "data" / "sample_corpus.txt"
DEFAULT_OUTPUT = Path("experiment_output")
DEFAULT_WINDOW = 16
DEFAULT_ORDERS: Tuple[int, ...] = (2, 3, 4)
DEFAULT_GAMMA = 0.1
DEFAULT_BPE_MERGES = 10_000
DEFAULT_RE_STEPS = 10
DEFAULT_RE_MIN_COUNT = 5
DEFAULT_BUDGET = 500
DEFAULT_MAX_LEN = 200
DEFAULT_SEED = 0
DEFAULT_TEMPERATURES: Tuple[float, ...] = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3)
DEFAULT_TRIALS = 10_000
DEFAULT_A_GRID: Tuple[float, ...] = (0.005, 0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.5)
DEFAULT_METHODS: Tuple[str, ...] = (
    "greedy",
    "stochastic",
    "temp:0.75",
    "topk:40",
    "topk:10",
    "nucleus:0.9",
    "nucleus:0.95",
    "lp:6",
    "topk:40+temp:0.9",
    "nucleus:0.9+temp:0.85",
)
DEFAULT_BALANCE_PREFIXES: Tuple[str, ...] = ("stochastic", "topk:40", "nucleus:0.9")
DEFAULT_REBALANCE_TEMPERATURE = 0.7


@dataclass
class ExperimentConfig:
    corpus: Path = DEFAULT_CORPUS
    lowercase: bool = False
    transform: Optional[str] = None
    temperatures: Tuple[float, ...] = DEFAULT_TEMPERATURES
    methods: Tuple[str, ...] = DEFAULT_METHODS
    prefixes: Tuple[str, ...] = DEFAULT_BALANCE_PREFIXES
    budget: int = DEFAULT_BUDGET
    max_len: int = DEFAULT_MAX_LEN
    gamma: float = DEFAULT_GAMMA
    seed: int = DEFAULT_SEED
    window: int = DEFAULT_WINDOW
    orders: Tuple[int, ...] = DEFAULT_ORDERS
    bpe_merges: int = DEFAULT_BPE_MERGES
    re_steps: int = DEFAULT_RE_STEPS
    re_min_count: int = DEFAULT_RE_MIN_COUNT
    delta: Optional[float] = None
    a_grid: Tuple[float, ...] = DEFAULT_A_GRID
    trials: int = DEFAULT_TRIALS
    out: Optional[Path] = None
    fmt: str = "json"

    def validate(self) -> "ExperimentConfig":
        """Check every value against the preconditions of the operations that will use it."""
        if self.transform is not None:
            parse_transform(self.transform)
        for text in (*self.methods, *self.prefixes):
            parse_transform(text)
        if not self.temperatures or any(t <= 0 for t in self.temperatures):
            raise InvalidTransform("temperatures must be > 0")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidGamma(f"gamma must be in (0, 1], got {self.gamma!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.orders or any(n < 1 for n in self.orders):
            raise ValueError("n-gram orders must be >= 1")
        if self.bpe_merges < 0:
            raise ValueError("bpe merges must be >= 0")
        if self.re_steps < 1:
            raise ValueError("re steps must be >= 1")
        if self.re_min_count < 1:
            raise ValueError("re min count must be >= 1")
        if self.delta is not None and self.delta < 0:
            raise InvalidDelta(f"delta must be >= 0, got {self.delta!r}")
        if not self.a_grid or any(a <= 0 for a in self.a_grid):
            raise ValueError("every threshold a must be > 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.fmt not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.fmt!r}")
        return self


__all__ = [
    "ROOT_DIR",
    "DEFAULT_CORPUS",
    "SAMPLE_CORPUS",
    "DEFAULT_OUTPUT",
    "DEFAULT_WINDOW",
    "DEFAULT_ORDERS",
    "DEFAULT_GAMMA",
    "DEFAULT_BPE_MERGES",
    "DEFAULT_RE_STEPS",
    "DEFAULT_RE_MIN_COUNT",
    "DEFAULT_BUDGET",
    "DEFAULT_MAX_LEN",
    "DEFAULT_SEED",
    "DEFAULT_TEMPERATURES",
    "DEFAULT_TRIALS",
    "DEFAULT_A_GRID",
    "DEFAULT_METHODS",
    "DEFAULT_BALANCE_PREFIXES",
    "DEFAULT_REBALANCE_TEMPERATURE",
    "ExperimentConfig",
]
