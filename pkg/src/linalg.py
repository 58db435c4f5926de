"""Dense real-matrix kernel: solves, singular values, spectral radius, norms.

Matrices are ``numpy.ndarray`` of dtype float64 with shape ``(rows, cols)``.
Everything here is pure; inputs are never modified.
"""

from __future__ import annotations

import logging
import warnings
from typing import List

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, InvalidMatrix, SingularMatrix

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
SVD_TOL = 1e-10
RANK_TOL = 1e-10
POWER_TOL = 1e-10
POWER_MAX_ITER = 20_000


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite float64 2-D array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidMatrix(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise InvalidMatrix(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{name} contains NaN or Inf entries")
    return arr


def solve_linear(a, c) -> np.ndarray:
    """Return X with ``A X = C`` using partial-pivot LU elimination."""
    a = as_matrix(a, square=True, name="A")
    c = as_matrix(c, name="C")
    if c.shape[0] != a.shape[0]:
        raise InvalidMatrix(f"C has {c.shape[0]} rows, expected {a.shape[0]}")
    with warnings.catch_warnings():
        # singularity is reported through the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diagonal(lu))
    worst = int(np.argmin(pivots))
    if pivots[worst] < PIVOT_TOL:
        raise SingularMatrix(float(pivots[worst]), worst)
    return scipy.linalg.lu_solve((lu, piv), c, check_finite=False)


def singular_values(a) -> List[float]:
    """Singular values of ``a`` in descending order."""
    a = as_matrix(a)
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure("singular value decomposition", 100 * min(a.shape)) from exc
    return [float(v) for v in np.sort(np.abs(s))[::-1]]


def smallest_singular_value(a) -> float:
    return singular_values(a)[-1]


def nuclear_norm(a) -> float:
    return float(sum(singular_values(a)))


def numerical_rank(a, rank_tol: float = RANK_TOL) -> int:
    """Count singular values above ``rank_tol`` relative to the largest one."""
    s = singular_values(a)
    if not s or s[0] == 0.0:
        return 0
    return sum(1 for v in s if v > rank_tol * s[0])


def spectral_radius(a, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Perron root of a nonnegative square matrix by power iteration.

    Iterates on ``A + I`` from the all-ones vector. For nonnegative ``A`` the
    dominant eigenvalue of ``A + I`` is exactly ``rho(A) + 1`` and no other
    eigenvalue shares its modulus, so periodic chains converge too. Stops when
    the residual ``|A x - rho x|_1`` drops below ``tol * max(rho, 1)``.
    """
    a = as_matrix(a, square=True)
    if np.any(a < 0):
        raise InvalidMatrix("spectral_radius requires an entrywise nonnegative matrix")
    n = a.shape[0]
    if not np.any(a):
        return 0.0
    x = np.ones(n) / n
    rho = 0.0
    for it in range(1, max_iter + 1):
        ax = a @ x
        rho = float(np.sum(ax))  # x sums to one
        residual = float(np.sum(np.abs(ax - rho * x)))
        if residual <= tol * max(rho, 1.0):
            logger.debug("spectral_radius converged after %d iterations: %.12g", it, rho)
            return max(rho, 0.0)
        y = ax + x
        x = y / np.sum(y)
    raise ConvergenceFailure("spectral radius power iteration", max_iter, rho)


def max_row_sum(a) -> float:
    return float(np.max(np.sum(np.abs(as_matrix(a)), axis=1)))


def trace(a) -> float:
    return float(np.trace(as_matrix(a, square=True)))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def max_abs(a) -> float:
    return float(np.max(np.abs(as_matrix(a))))


__all__ = [
    "PIVOT_TOL",
    "SVD_TOL",
    "RANK_TOL",
    "POWER_TOL",
    "POWER_MAX_ITER",
    "as_matrix",
    "solve_linear",
    "singular_values",
    "smallest_singular_value",
    "nuclear_norm",
    "numerical_rank",
    "spectral_radius",
    "max_row_sum",
    "trace",
    "frobenius_norm",
    "max_abs",
]
