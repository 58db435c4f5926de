"""Monte Carlo checks for ARP under per-step perturbed transition matrices.

A general generation model replaces ``B`` at step ``k`` by ``B + T_k`` where the
entries of ``T_k`` are independent with mean 0 and variance ``delta^2``. Its ARP is

    R' = sum_{r>=1} tr(prod_{k=1..2r} (B + T_k)) / (zeta n)^r

and for ``zeta n > 4`` the deviation from the unperturbed ``R`` concentrates:

    P(|R - R'| >= a) <= 3 zeta n delta^2 / (a^2 (zeta n - 4)(zeta n - 1)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import linalg
from .errors import DegenerateSparsity, InvalidDelta, PreconditionViolated
from .markov import arp_closed_form_matrix, sparsity

logger = logging.getLogger(__name__)

DISTRIBUTIONS = ("uniform_symmetric", "two_point")
MODES = ("unconstrained", "projected")
TRUNCATION_TOL = 1e-10
TRUNCATION_CAP = 50
VARIANCE_SLACK = 1.1
MEAN_SIGMAS = 4.0

SeedLike = Union[int, np.random.Generator]


@dataclass(frozen=True)
class PerturbationSpec:
    delta: float
    distribution: str = "uniform_symmetric"
    mode: str = "unconstrained"

    def validate(self, n: int) -> "PerturbationSpec":
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.delta >= 0.0:
            raise InvalidDelta(f"delta must be >= 0, got {self.delta!r}")
        if self.delta ** 2 >= 1.0 / n:
            raise InvalidDelta(f"delta^2 = {self.delta ** 2:.6g} must be < 1/n = {1.0 / n:.6g}")
        return self


class PerturbationDraw(NamedTuple):
    matrix: np.ndarray
    mean: float
    variance: float


def _draw(rng: np.random.Generator, shape, spec: PerturbationSpec) -> np.ndarray:
    if spec.delta == 0.0:
        return np.zeros(shape)
    if spec.distribution == "two_point":
        return spec.delta * rng.choice(np.array([-1.0, 1.0]), size=shape)
    half_width = math.sqrt(3.0) * spec.delta
    return rng.uniform(-half_width, half_width, size=shape)


def sample_perturbation(n: int, spec: PerturbationSpec, seed: SeedLike, B=None) -> PerturbationDraw:
    """One ``n x n`` perturbation with its realized entry mean and variance.

    Projected mode needs ``B`` and clips ``B + T`` into ``[0, 1]``.
    """
    spec.validate(n)
    rng = np.random.default_rng(seed)
    t = _draw(rng, (n, n), spec)
    if spec.mode == "projected":
        if B is None:
            raise ValueError("projected perturbations need the base matrix B")
        B = linalg.as_matrix(B, square=True, name="B")
        t = np.clip(B + t, 0.0, 1.0) - B
    return PerturbationDraw(t, float(t.mean()), float(t.var()))


def column_square_sums(B) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    return (B ** 2).sum(axis=0)


def _require_column_squares(B: np.ndarray, strict: bool = True) -> None:
    sums = column_square_sums(B)
    j = int(np.argmax(sums))
    failed = sums[j] >= 1.0 if strict else sums[j] > 1.0
    if failed:
        raise PreconditionViolated("sum_i B_ij^2 < 1", {"column": j, "value": float(sums[j])})


def truncation_depth(B, zeta_n: float, tol: float = TRUNCATION_TOL, cap: int = TRUNCATION_CAP) -> int:
    """Smallest ``r`` with ``n (rho(B^2) / zeta n)^r < tol``, capped at ``cap``."""
    B = linalg.as_matrix(B, square=True, name="B")
    rho = linalg.spectral_radius(B @ B)
    if rho == 0.0:
        return 1
    ratio = rho / zeta_n
    if ratio >= 1.0:
        raise PreconditionViolated("zeta_n > rho(B^2)", {"zeta_n": zeta_n, "rho": rho})
    n = B.shape[0]
    depth = math.floor(math.log(tol / n) / math.log(ratio)) + 1
    return max(1, min(depth, cap))


def general_arp(B, zeta: float, perturbations, r_max: int) -> float:
    """Truncated ARP of the perturbed chain, using ``perturbations[k]`` at step ``k + 1``."""
    B = linalg.as_matrix(B, square=True, name="B")
    n = B.shape[0]
    zeta_n = zeta * n
    if zeta_n <= 0.0:
        raise DegenerateSparsity("general ARP needs zeta > 0")
    if len(perturbations) < 2 * r_max:
        raise ValueError(f"need {2 * r_max} perturbation matrices, got {len(perturbations)}")
    rho = linalg.spectral_radius(B @ B)
    if zeta_n <= rho:
        raise PreconditionViolated("zeta_n > rho(B^2)", {"zeta_n": zeta_n, "rho": rho})
    return _perturbed_series(B, zeta_n, perturbations, r_max)


def _perturbed_series(B: np.ndarray, zeta_n: float, perturbations, r_max: int) -> float:
    product = np.eye(B.shape[0])
    total = 0.0
    for r in range(1, r_max + 1):
        product = product @ (B + perturbations[2 * r - 2]) @ (B + perturbations[2 * r - 1])
        total += float(np.trace(product)) / zeta_n ** r
    return total


def concentration_bound(a: float, zeta_n: float, delta: float) -> float:
    return 3.0 * zeta_n * delta ** 2 / (a ** 2 * (zeta_n - 4.0) * (zeta_n - 1.0))


def variance_bound(zeta_n: float, delta: float) -> float:
    return 3.0 * zeta_n * delta ** 2 / ((zeta_n - 4.0) * (zeta_n - 1.0))


@dataclass
class ConcentrationResult:
    a_grid: List[float]
    empirical_prob: List[float]
    theory_bound: List[float]
    trials: int
    r_exact: float
    r_max: int
    zeta_n: float
    delta: float
    mean_deviation: float
    std_deviation: float
    variance_deviation: float
    variance_bound: float
    violations: List[float] = field(default_factory=list)

    @property
    def mean_ok(self) -> bool:
        """Mean deviation within four standard errors of zero."""
        if self.trials < 2 or self.std_deviation == 0.0:
            return abs(self.mean_deviation) <= 1e-9
        return abs(self.mean_deviation) <= MEAN_SIGMAS * self.std_deviation / math.sqrt(self.trials)

    @property
    def variance_ok(self) -> bool:
        return self.variance_deviation <= VARIANCE_SLACK * self.variance_bound

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"a": a, "empirical_prob": p, "theory_bound": t, "trials": self.trials}
            for a, p, t in zip(self.a_grid, self.empirical_prob, self.theory_bound)
        ]

    def as_dict(self) -> Dict[str, object]:
        return {
            "trials": self.trials,
            "r_exact": self.r_exact,
            "r_max": self.r_max,
            "zeta_n": self.zeta_n,
            "delta": self.delta,
            "mean_deviation": self.mean_deviation,
            "std_deviation": self.std_deviation,
            "variance_deviation": self.variance_deviation,
            "variance_bound": self.variance_bound,
            "mean_ok": self.mean_ok,
            "variance_ok": self.variance_ok,
            "violations": list(self.violations),
            "grid": self.rows(),
        }


def concentration_experiment(
    B,
    zeta: float,
    spec: PerturbationSpec,
    a_grid: Sequence[float],
    trials: int,
    r_max: Optional[int] = None,
    seed: int = 0,
) -> ConcentrationResult:
    """Empirical ``P(|R - R'| >= a)`` over ``trials`` fresh perturbation sequences."""
    B = linalg.as_matrix(B, square=True, name="B")
    n = B.shape[0]
    zeta_n = zeta * n
    if zeta_n <= 4.0:
        raise PreconditionViolated("zeta_n > 4", {"zeta_n": zeta_n})
    _require_column_squares(B)
    if spec.mode != "unconstrained":
        raise PreconditionViolated("unconstrained perturbations", {"mode": spec.mode})
    spec.validate(n)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if any(a <= 0 for a in a_grid):
        raise ValueError("every threshold a must be > 0")
    if r_max is None:
        r_max = truncation_depth(B, zeta_n)

    r_exact = arp_closed_form_matrix(B, zeta_n)
    deviations = np.empty(trials)
    for trial in range(trials):
        rng = np.random.default_rng(seed + trial)
        ts = _draw(rng, (2 * r_max, n, n), spec)
        deviations[trial] = _perturbed_series(B, zeta_n, ts, r_max) - r_exact
    magnitude = np.abs(deviations)

    grid = [float(a) for a in a_grid]
    empirical = [float(np.mean(magnitude >= a)) for a in grid]
    theory = [concentration_bound(a, zeta_n, spec.delta) for a in grid]
    violations = [a for a, p, t in zip(grid, empirical, theory) if p > t]
    result = ConcentrationResult(
        a_grid=grid,
        empirical_prob=empirical,
        theory_bound=theory,
        trials=trials,
        r_exact=r_exact,
        r_max=r_max,
        zeta_n=zeta_n,
        delta=spec.delta,
        mean_deviation=float(deviations.mean()),
        std_deviation=float(deviations.std(ddof=1)) if trials > 1 else 0.0,
        variance_deviation=float(deviations.var(ddof=1)) if trials > 1 else 0.0,
        variance_bound=variance_bound(zeta_n, spec.delta),
        violations=violations,
    )
    logger.info(
        "concentration: %d trials, r_max=%d, %d/%d grid points violated",
        trials, r_max, len(violations), len(grid),
    )
    return result


# ---------------------------------------------------------------------------
# Moment facts for single products
# ---------------------------------------------------------------------------
class ProductMoments(NamedTuple):
    mean: float
    std_error: float
    max_variance: float
    mean_ok: bool
    variance_ok: bool


@dataclass
class MomentReport:
    trials: int
    delta: float
    products: Dict[str, ProductMoments]

    @property
    def passed(self) -> bool:
        return all(p.mean_ok and p.variance_ok for p in self.products.values())

    def as_dict(self) -> Dict[str, object]:
        return {
            "trials": self.trials,
            "delta": self.delta,
            "passed": self.passed,
            "products": {name: p._asdict() for name, p in self.products.items()},
        }


def moment_check(B, spec: PerturbationSpec, trials: int, seed: int = 0) -> MomentReport:
    """Means and entry variances of ``T_p B``, ``B T_p`` and ``T_p T_q`` over fresh draws.

    The mean test uses the per-trial average over matrix entries (entries of one
    product are correlated); the variance test takes the largest per-entry variance.
    """
    B = linalg.as_matrix(B, square=True, name="B")
    n = B.shape[0]
    _require_column_squares(B, strict=False)
    spec.validate(n)
    if trials < 2:
        raise ValueError("moment_check needs at least 2 trials")

    names = ("TpB", "BTp", "TpTq")
    trial_means = {name: np.empty(trials) for name in names}
    sums = {name: np.zeros((n, n)) for name in names}
    squares = {name: np.zeros((n, n)) for name in names}
    for trial in range(trials):
        rng = np.random.default_rng(seed + trial)
        tp = sample_perturbation(n, spec, rng, B).matrix
        tq = sample_perturbation(n, spec, rng, B).matrix
        for name, product in zip(names, (tp @ B, B @ tp, tp @ tq)):
            trial_means[name][trial] = product.mean()
            sums[name] += product
            squares[name] += product ** 2

    products: Dict[str, ProductMoments] = {}
    limit = VARIANCE_SLACK * spec.delta ** 2
    for name in names:
        series = trial_means[name]
        mean = float(series.mean())
        std_error = float(series.std(ddof=1)) / math.sqrt(trials)
        entry_mean = sums[name] / trials
        entry_var = (squares[name] - trials * entry_mean ** 2) / (trials - 1)
        max_var = float(max(entry_var.max(), 0.0))
        mean_ok = abs(mean) <= MEAN_SIGMAS * std_error if std_error > 0.0 else abs(mean) <= 1e-12
        products[name] = ProductMoments(mean, std_error, max_var, mean_ok, max_var <= limit + 1e-15)
    return MomentReport(trials, spec.delta, products)


# ---------------------------------------------------------------------------
# Synthetic chains
# ---------------------------------------------------------------------------
def synthetic_chain(n: int, branching: int, mass: float = 0.9, seed: int = 0) -> np.ndarray:
    """Sub-stochastic ``n x n`` matrix with exactly ``branching`` positive entries per row
    and per column, every row summing to ``mass``.

    Columns are cyclic shifts of one random offset set, and weights are drawn from
    ``[0.5, 1.5]`` before scaling, so no column collects large entries.
    """
    if not 1 <= branching <= n:
        raise ValueError(f"branching must be in [1, {n}], got {branching}")
    if not 0.0 < mass <= 1.0:
        raise ValueError(f"mass must be in (0, 1], got {mass!r}")
    rng = np.random.default_rng(seed)
    offsets = np.sort(rng.choice(n, size=branching, replace=False))
    B = np.zeros((n, n))
    for i in range(n):
        weights = rng.uniform(0.5, 1.5, size=branching)
        B[i, (i + offsets) % n] = mass * weights / weights.sum()
    _require_column_squares(B)
    logger.debug("synthetic chain n=%d zeta=%.6g", n, sparsity(B))
    return B


__all__ = [
    "DISTRIBUTIONS",
    "MODES",
    "PerturbationSpec",
    "PerturbationDraw",
    "sample_perturbation",
    "column_square_sums",
    "truncation_depth",
    "general_arp",
    "concentration_bound",
    "variance_bound",
    "ConcentrationResult",
    "concentration_experiment",
    "ProductMoments",
    "MomentReport",
    "moment_check",
    "synthetic_chain",
]
