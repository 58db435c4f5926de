"""Markov generation model built from a token corpus, and its Average Repetition Probability.

The model keeps the sub-transition matrix ``B`` among the ``n`` vocabulary words
and the end-of-sentence column ``b``; the full chain ``A = [[B, b], [0, 1]]`` has
EOS as an absorbing state. ARP is

    R = sum_{k>=1} tr(B^{2k}) / (zeta n)^k

and, whenever ``zeta n > rho(B^2)``, ``R = tr(B^2 (zeta n I - B^2)^{-1})``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse

from . import linalg
from .errors import (
    ConvergenceFailure,
    EmptyCorpus,
    InvalidMatrix,
    NumericalInstability,
    PreconditionViolated,
    UnknownToken,
)

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-12
SERIES_EPS = 1e-12
SERIES_K_MAX = 10_000
TRACE_TOL = 1e-9


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Vocabulary:
    """Frozen token list; ids are positions, EOS is the reserved id ``n``."""

    tokens: Tuple[str, ...]
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        tokens = tuple(self.tokens)
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary tokens must be distinct")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "index", {tok: i for i, tok in enumerate(tokens)})

    @classmethod
    def from_corpus(cls, sequences: Iterable[Sequence[str]]) -> "Vocabulary":
        return cls(tuple(sorted({tok for seq in sequences for tok in seq})))

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self.index

    @property
    def eos_id(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise UnknownToken(token) from None

    def token_of(self, idx: int) -> str:
        return self.tokens[idx]


# ---------------------------------------------------------------------------
# Transition model
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class TransitionModel:
    vocab: Vocabulary
    B: np.ndarray
    b: np.ndarray
    zeta: float
    counts: scipy.sparse.csr_matrix

    @classmethod
    def from_arrays(
        cls,
        vocab: Vocabulary,
        B,
        b,
        counts: Optional[scipy.sparse.spmatrix] = None,
    ) -> "TransitionModel":
        """Validate ``B``/``b`` against the sub-stochastic invariants and compute zeta."""
        n = len(vocab)
        if n < 1:
            raise EmptyCorpus("vocabulary is empty")
        B = linalg.as_matrix(B, square=True, name="B").copy()
        b = np.asarray(b, dtype=np.float64).copy()
        if B.shape[0] != n or b.shape != (n,):
            raise InvalidMatrix(f"B must be {n}x{n} and b of length {n}")
        if np.any(B < 0) or np.any(b < 0) or not np.all(np.isfinite(b)):
            raise InvalidMatrix("transition probabilities must be finite and nonnegative")
        sums = B.sum(axis=1) + b
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            i = int(bad[0])
            raise InvalidMatrix(f"row {vocab.token_of(i)!r} sums to {sums[i]!r}, expected 1")
        if counts is None:
            counts = scipy.sparse.csr_matrix((n, n + 1), dtype=np.int64)
        counts = scipy.sparse.csr_matrix(counts, dtype=np.int64)
        B.setflags(write=False)
        b.setflags(write=False)
        return cls(vocab=vocab, B=B, b=b, zeta=sparsity(B), counts=counts)

    @property
    def n(self) -> int:
        return len(self.vocab)

    @property
    def zeta_n(self) -> float:
        return self.zeta * self.n

    def row(self, i: int) -> np.ndarray:
        """Next-token distribution of word ``i``; index ``n`` is EOS."""
        return np.append(self.B[i], self.b[i])

    def full_matrix(self) -> np.ndarray:
        n = self.n
        a = np.zeros((n + 1, n + 1))
        a[:n, :n] = self.B
        a[:n, n] = self.b
        a[n, n] = 1.0
        return a

    def squared(self) -> np.ndarray:
        return self.B @ self.B


def build_model(corpus: Sequence[Sequence[str]], vocab: Optional[Vocabulary] = None) -> TransitionModel:
    """Count bigrams per sentence (one EOS event per sentence end) and normalize rows.

    Words that never have a successor keep an all-zero ``B`` row and ``b = 1``.
    """
    if not corpus:
        raise EmptyCorpus("corpus has no sequences")
    if vocab is None:
        vocab = Vocabulary.from_corpus(corpus)
    n = len(vocab)
    rows: List[int] = []
    cols: List[int] = []
    for pos, seq in enumerate(corpus):
        if not seq:
            raise EmptyCorpus(f"sequence {pos} is empty")
        ids = [vocab.id_of(tok) for tok in seq]
        rows.extend(ids)
        cols.extend(ids[1:])
        cols.append(vocab.eos_id)
    data = np.ones(len(rows), dtype=np.int64)
    counts = scipy.sparse.coo_matrix((data, (rows, cols)), shape=(n, n + 1)).tocsr()
    counts.sum_duplicates()

    totals = np.asarray(counts.sum(axis=1)).ravel().astype(np.float64)
    observed = totals > 0
    inverse = np.zeros(n)
    inverse[observed] = 1.0 / totals[observed]
    probs = scipy.sparse.diags(inverse) @ counts.astype(np.float64)
    B = probs[:, :n].toarray()
    b = probs[:, n].toarray().ravel()
    b[~observed] = 1.0
    # exact renormalization keeps every row sum at 1 within rounding
    b[observed] = 1.0 - B[observed].sum(axis=1)
    np.clip(b, 0.0, 1.0, out=b)

    model = TransitionModel.from_arrays(vocab, B, b, counts)
    logger.info("built model: n=%d zeta=%.6g zeta_n=%.6g from %d sequences", n, model.zeta, model.zeta_n, len(corpus))
    return model


def sparsity(B) -> float:
    """Fraction of strictly positive entries of ``B``."""
    B = np.asarray(B, dtype=np.float64)
    n = B.shape[0]
    return float(np.count_nonzero(B > 0)) / float(n * n)


# ---------------------------------------------------------------------------
# Convergence precondition
# ---------------------------------------------------------------------------
class PreconditionCheck(NamedTuple):
    zeta_n: float
    rho: Optional[float]
    holds: bool
    verified_by: str  # "power_iteration", "row_sum_bound" or "unverifiable"

    def as_dict(self) -> Dict[str, object]:
        return self._asdict()


def convergence_precondition_matrix(B2: np.ndarray, zeta_n: float, tol: float = linalg.POWER_TOL) -> PreconditionCheck:
    """Check ``zeta_n > rho(B^2)``.

    Falls back to ``rho <= max row sum`` when power iteration does not converge.
    """
    try:
        rho = linalg.spectral_radius(B2, tol=tol)
    except ConvergenceFailure as exc:
        bound = linalg.max_row_sum(B2)
        logger.debug("power iteration failed (%s); row-sum bound %.6g", exc, bound)
        if zeta_n > bound:
            return PreconditionCheck(zeta_n, exc.estimate, True, "row_sum_bound")
        return PreconditionCheck(zeta_n, exc.estimate, False, "unverifiable")
    return PreconditionCheck(zeta_n, rho, zeta_n > rho, "power_iteration")


def convergence_precondition(model: TransitionModel, tol: float = linalg.POWER_TOL) -> PreconditionCheck:
    return convergence_precondition_matrix(model.squared(), model.zeta_n, tol)


# ---------------------------------------------------------------------------
# ARP
# ---------------------------------------------------------------------------
class SeriesResult(NamedTuple):
    value: float
    converged: bool
    terms_used: int


def arp_series_matrix(B, zeta_n: float, k_max: int = SERIES_K_MAX, eps: float = SERIES_EPS) -> SeriesResult:
    """Partial sums of ``tr(B^{2k}) / zeta_n^k`` until a term drops below ``eps``."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    B = linalg.as_matrix(B, square=True, name="B")
    if zeta_n <= 0.0 or not np.any(B):
        return SeriesResult(0.0, True, 0)
    step = (B @ B) / zeta_n
    power = step.copy()
    total = 0.0
    for k in range(1, k_max + 1):
        term = float(np.trace(power))
        total += term
        if abs(term) < eps:
            logger.debug("ARP series converged after %d terms: %.12g", k, total)
            return SeriesResult(total, True, k)
        if not np.isfinite(total):
            logger.debug("ARP series overflowed at term %d", k)
            return SeriesResult(total, False, k)
        power = power @ step
    logger.debug("ARP series hit k_max=%d with partial sum %.6g", k_max, total)
    return SeriesResult(total, False, k_max)


def arp_series(model: TransitionModel, k_max: int = SERIES_K_MAX, eps: float = SERIES_EPS) -> SeriesResult:
    """Definition of ARP evaluated as a truncated series; zeta = 0 gives 0 by convention."""
    if model.zeta == 0.0:
        return SeriesResult(0.0, True, 0)
    return arp_series_matrix(model.B, model.zeta_n, k_max=k_max, eps=eps)


def arp_closed_form_matrix(B, zeta_n: float) -> float:
    B = linalg.as_matrix(B, square=True, name="B")
    if not np.any(B):
        return 0.0
    B2 = B @ B
    check = convergence_precondition_matrix(B2, zeta_n)
    if not check.holds:
        raise PreconditionViolated(
            "zeta_n > rho(B^2)",
            {"zeta_n": zeta_n, "rho": check.rho},
            detail=f"series diverges ({check.verified_by})",
        )
    n = B.shape[0]
    x = linalg.solve_linear(zeta_n * np.eye(n) - B2, B2)
    trace = float(np.trace(x))
    if trace >= 0.0:
        return trace
    # tr(B^2 (zeta n I - B^2)^{-1}) is a sum of nonnegative series terms
    tolerance = TRACE_TOL * max(1.0, float(np.abs(x).max()))
    if trace < -tolerance:
        raise NumericalInstability("closed-form ARP trace", trace, tolerance)
    logger.debug("closed-form ARP trace %.3e is round-off below zero; reporting 0", trace)
    return 0.0


def arp_closed_form(model: TransitionModel) -> float:
    """``tr(B^2 (zeta n I - B^2)^{-1})``; raises PreconditionViolated when the series diverges."""
    if model.zeta == 0.0:
        return 0.0
    return arp_closed_form_matrix(model.B, model.zeta_n)


@dataclass(frozen=True)
class ArpResult:
    value: float
    method: str  # "closed_form" or "series"
    converged: bool
    terms_used: int
    precondition: PreconditionCheck

    @property
    def diverged(self) -> bool:
        return not self.converged

    def as_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "method": self.method,
            "converged": self.converged,
            "diverged": self.diverged,
            "terms_used": self.terms_used,
            "precondition": self.precondition.as_dict(),
        }


def exact_arp(model: TransitionModel, k_max: int = 200, eps: float = SERIES_EPS) -> ArpResult:
    """Closed form when ``zeta n > rho(B^2)``, else the truncated series flagged as divergent."""
    if model.zeta == 0.0:
        check = PreconditionCheck(0.0, 0.0, True, "power_iteration")
        return ArpResult(0.0, "closed_form", True, 0, check)
    check = convergence_precondition(model)
    if check.holds:
        value = arp_closed_form(model)
        return ArpResult(value, "closed_form", True, 0, check)
    series = arp_series(model, k_max=k_max, eps=eps)
    return ArpResult(series.value, "series", series.converged, series.terms_used, check)


__all__ = [
    "ROW_SUM_TOL",
    "SERIES_EPS",
    "SERIES_K_MAX",
    "TRACE_TOL",
    "Vocabulary",
    "TransitionModel",
    "build_model",
    "sparsity",
    "PreconditionCheck",
    "convergence_precondition",
    "convergence_precondition_matrix",
    "SeriesResult",
    "arp_series",
    "arp_series_matrix",
    "arp_closed_form",
    "arp_closed_form_matrix",
    "ArpResult",
    "exact_arp",
]
