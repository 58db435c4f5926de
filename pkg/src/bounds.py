"""Upper bounds on the Average Repetition Probability and inflow/outflow diagnostics.

All bounds share the denominator structure of ``zeta n I - B^2``:

- spectral:       ||B^2||_* / sigma_min(zeta n I - B^2)
- variance:       sqrt(r) (sum_ij (B_ij - mu_i)^2 + sum_i (1 - b_i)^2) / sigma_min(...)
- inflow/outflow: ||B^2||_* / min_i {zeta n - (outflow_i + inflow_i) / 2}

The last one needs ``zeta n I - B^2`` to be diagonally dominant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from . import linalg
from .errors import PreconditionViolated
from .markov import ArpResult, PreconditionCheck, TransitionModel, convergence_precondition_matrix, exact_arp

logger = logging.getLogger(__name__)


class _Quantities(NamedTuple):
    B2: np.ndarray
    shifted: np.ndarray
    nuclear: float
    sigma_min: float
    rank: int


def _quantities(model: TransitionModel, rank_tol: float = linalg.RANK_TOL) -> _Quantities:
    B2 = model.squared()
    shifted = model.zeta_n * np.eye(model.n) - B2
    s = linalg.singular_values(B2)
    rank = 0 if s[0] == 0.0 else sum(1 for v in s if v > rank_tol * s[0])
    return _Quantities(B2, shifted, float(sum(s)), linalg.smallest_singular_value(shifted), rank)


# ---------------------------------------------------------------------------
# Spectral bound
# ---------------------------------------------------------------------------
def _spectral(q: _Quantities, check: PreconditionCheck) -> float:
    if q.nuclear == 0.0:
        return 0.0
    if not check.holds:
        raise PreconditionViolated("zeta_n > rho(B^2)", {"zeta_n": check.zeta_n, "rho": check.rho})
    return q.nuclear / q.sigma_min


def bound_spectral(model: TransitionModel) -> float:
    """Nuclear norm of ``B^2`` over the smallest singular value of ``zeta n I - B^2``."""
    q = _quantities(model)
    if q.nuclear == 0.0:
        return 0.0
    return _spectral(q, convergence_precondition_matrix(q.B2, model.zeta_n))


# ---------------------------------------------------------------------------
# Variance bound
# ---------------------------------------------------------------------------
def row_variance_term(model: TransitionModel) -> float:
    """``sum_ij (B_ij - mu_i)^2`` with ``mu_i`` the mean of row ``i`` of B."""
    mu = model.B.sum(axis=1) / model.n
    return float(np.sum((model.B - mu[:, None]) ** 2))


def _variance(model: TransitionModel, q: _Quantities, tightened: bool) -> float:
    if tightened:
        mu = model.B.sum(axis=1) / model.n
        mass = model.n * float(np.sum(mu ** 2))
    else:
        mass = float(np.sum((1.0 - model.b) ** 2))
    numerator = np.sqrt(q.rank) * (row_variance_term(model) + mass)
    if numerator == 0.0:
        return 0.0
    if q.sigma_min <= 0.0:
        raise PreconditionViolated(
            "sigma_min(zeta_n I - B^2) > 0", {"sigma_min": q.sigma_min, "zeta_n": model.zeta_n}
        )
    return float(numerator / q.sigma_min)


def bound_variance(model: TransitionModel, rank_tol: float = linalg.RANK_TOL, tightened: bool = False) -> float:
    """Row-variance bound with ``r`` the numerical rank of ``B^2``.

    ``tightened=True`` swaps ``sum_i (1 - b_i)^2`` for ``n sum_i mu_i^2``; this is a
    smaller (still valid) numerator, not the stated form.
    """
    return _variance(model, _quantities(model, rank_tol), tightened)


# ---------------------------------------------------------------------------
# Diagonal dominance, Gershgorin-type singular value bound, inflow/outflow
# ---------------------------------------------------------------------------
class DominanceCheck(NamedTuple):
    holds: bool
    failing_index: Optional[int]
    failing_form: Optional[str]  # "row" or "column"


def diagonal_dominance(m) -> DominanceCheck:
    """``m_ii >= sum_{j!=i} |m_ij|`` and ``m_ii >= sum_{j!=i} |m_ji|`` for every ``i``."""
    m = linalg.as_matrix(m, square=True)
    absm = np.abs(m)
    diag = np.diagonal(m)
    absdiag = np.diagonal(absm)
    for form, off in (("row", absm.sum(axis=1) - absdiag), ("column", absm.sum(axis=0) - absdiag)):
        bad = np.flatnonzero(diag < off)
        if bad.size:
            return DominanceCheck(False, int(bad[0]), form)
    return DominanceCheck(True, None, None)


def sigma_min_lower_bound(a) -> float:
    """``min_i |a_ii| - (sum_{j!=i}|a_ij| + sum_{j!=i}|a_ji|) / 2``; may be negative."""
    a = linalg.as_matrix(a, square=True)
    absa = np.abs(a)
    diag = np.diagonal(absa)
    off_rows = absa.sum(axis=1) - diag
    off_cols = absa.sum(axis=0) - diag
    return float(np.min(diag - 0.5 * (off_rows + off_cols)))


class WordFlow(NamedTuple):
    inflow: np.ndarray
    outflow: np.ndarray
    high_inflow_pairs: List[Tuple[str, str, float]]


def word_flow(model: TransitionModel, gamma: Optional[float] = None) -> WordFlow:
    """Column sums (inflow) and row sums (outflow) of ``B^2`` per word.

    With ``gamma`` given, also lists first-order pairs ``(u, v)`` with ``B_uv > gamma``.
    """
    B2 = model.squared()
    pairs = high_inflow_pairs(model, gamma) if gamma is not None else []
    return WordFlow(inflow=B2.sum(axis=0), outflow=B2.sum(axis=1), high_inflow_pairs=pairs)


def high_inflow_pairs(model: TransitionModel, gamma: float) -> List[Tuple[str, str, float]]:
    """All ``(u, v, B_uv)`` with ``B_uv > gamma``, most probable first, then by ids."""
    rows, cols = np.nonzero(model.B > gamma)
    found = sorted(zip(rows.tolist(), cols.tolist()), key=lambda uv: (-model.B[uv], uv))
    return [(model.vocab.token_of(u), model.vocab.token_of(v), float(model.B[u, v])) for u, v in found]


def high_inflow_words(model: TransitionModel, top: int = 10) -> List[Tuple[str, float]]:
    inflow = model.squared().sum(axis=0)
    order = np.argsort(-inflow, kind="stable")[:top]
    return [(model.vocab.token_of(int(i)), float(inflow[i])) for i in order]


def _denominator(model: TransitionModel, B2: np.ndarray) -> float:
    zn = model.zeta_n
    return float(np.min(0.5 * (zn - B2.sum(axis=1)) + 0.5 * (zn - B2.sum(axis=0))))


def inflow_outflow_denominator(model: TransitionModel) -> float:
    return _denominator(model, model.squared())


def _inflow_outflow(model: TransitionModel, q: _Quantities, dominance: DominanceCheck) -> float:
    if q.nuclear == 0.0:
        return 0.0
    if not dominance.holds:
        i = dominance.failing_index
        raise PreconditionViolated(
            "zeta_n I - B^2 diagonally dominant",
            {"zeta_n": model.zeta_n, "form": dominance.failing_form, "word": model.vocab.token_of(i)},
            detail=f"{dominance.failing_form} {i} fails",
        )
    denominator = _denominator(model, q.B2)
    if denominator <= 0.0:
        raise PreconditionViolated("inflow/outflow denominator > 0", {"denominator": denominator})
    return q.nuclear / denominator


def bound_inflow_outflow(model: TransitionModel) -> float:
    """Inflow/outflow bound; requires ``zeta n I - B^2`` to be diagonally dominant."""
    q = _quantities(model)
    return _inflow_outflow(model, q, diagonal_dominance(q.shifted))


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------
BoundValue = Union[float, PreconditionViolated]


@dataclass
class BoundReport:
    arp: ArpResult
    bound_spectral: BoundValue
    bound_variance: BoundValue
    bound_inflow_outflow: BoundValue
    sigma_min_used: float
    sigma_min_gershgorin: float
    rank_b2: int
    precondition: PreconditionCheck
    diagonally_dominant: DominanceCheck
    bound_variance_tightened: Optional[BoundValue] = None
    extras: Dict[str, object] = field(default_factory=dict)

    @property
    def arp_exact(self) -> Optional[float]:
        return self.arp.value if self.arp.converged else None

    def chain_holds(self, rel_tol: float = 1e-9) -> bool:
        """``exact <= spectral <= variance`` and ``exact <= spectral <= inflow/outflow`` where defined."""
        if self.arp_exact is None or not isinstance(self.bound_spectral, float):
            return True

        def le(x: float, y: float) -> bool:
            return x <= y * (1.0 + rel_tol) + rel_tol

        ok = le(self.arp_exact, self.bound_spectral)
        if isinstance(self.bound_variance, float):
            ok = ok and le(self.bound_spectral, self.bound_variance)
        if isinstance(self.bound_inflow_outflow, float):
            ok = ok and le(self.bound_spectral, self.bound_inflow_outflow)
        return ok

    def as_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "n": self.extras.get("n"),
            "zeta": self.extras.get("zeta"),
            "zeta_n": self.precondition.zeta_n,
            "rho_b2": self.precondition.rho,
            "arp": self.arp.as_dict(),
            "arp_exact": self.arp_exact,
            "diverged": self.arp.diverged,
            "bound_spectral": _render(self.bound_spectral),
            "bound_variance": _render(self.bound_variance),
            "bound_inflow_outflow": _render(self.bound_inflow_outflow),
            "sigma_min_used": self.sigma_min_used,
            "sigma_min_gershgorin": self.sigma_min_gershgorin,
            "rank_b2": self.rank_b2,
            "preconditions": {
                "convergence": self.precondition.as_dict(),
                "diagonal_dominance": self.diagonally_dominant._asdict(),
            },
        }
        if self.bound_variance_tightened is not None:
            out["bound_variance_tightened"] = _render(self.bound_variance_tightened)
        return out


def _render(value: BoundValue) -> object:
    if isinstance(value, PreconditionViolated):
        return {"precondition_violated": value.to_dict()}
    return value


def _attempt(fn, *args) -> BoundValue:
    try:
        return float(fn(*args))
    except PreconditionViolated as exc:
        logger.debug("%s: %s", fn.__name__, exc)
        return exc


def bound_report(
    model: TransitionModel,
    rank_tol: float = linalg.RANK_TOL,
    tightened: bool = False,
    k_max: int = 200,
) -> BoundReport:
    """Exact ARP plus every bound, with precondition failures kept as data."""
    q = _quantities(model, rank_tol)
    arp = exact_arp(model, k_max=k_max)
    check = arp.precondition
    dominance = diagonal_dominance(q.shifted)
    report = BoundReport(
        arp=arp,
        bound_spectral=_attempt(_spectral, q, check),
        bound_variance=_attempt(_variance, model, q, False),
        bound_inflow_outflow=_attempt(_inflow_outflow, model, q, dominance),
        sigma_min_used=q.sigma_min,
        sigma_min_gershgorin=sigma_min_lower_bound(q.shifted),
        rank_b2=q.rank,
        precondition=check,
        diagonally_dominant=dominance,
        extras={"n": model.n, "zeta": model.zeta},
    )
    if tightened:
        report.bound_variance_tightened = _attempt(_variance, model, q, True)
    logger.info("bound report: arp=%s diverged=%s", report.arp.value, report.arp.diverged)
    return report


__all__ = [
    "bound_spectral",
    "bound_variance",
    "row_variance_term",
    "bound_inflow_outflow",
    "inflow_outflow_denominator",
    "sigma_min_lower_bound",
    "diagonal_dominance",
    "DominanceCheck",
    "WordFlow",
    "word_flow",
    "high_inflow_pairs",
    "high_inflow_words",
    "BoundReport",
    "bound_report",
]
