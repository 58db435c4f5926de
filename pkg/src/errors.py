"""Exception hierarchy shared by every arplab module."""

from __future__ import annotations

from typing import Any, Dict, Optional


class ArpLabError(Exception):
    """Root of all errors raised by the library."""


# ---------------------------------------------------------------------------
# Numerical kernel
# ---------------------------------------------------------------------------
class InvalidMatrix(ArpLabError, ValueError):
    """Input is not a finite, non-empty 2-D real matrix."""


class SingularMatrix(ArpLabError, ArithmeticError):
    def __init__(self, pivot: float, index: int) -> None:
        super().__init__(f"pivot {pivot:.3e} at position {index} is below tolerance")
        self.pivot = pivot
        self.index = index


class ConvergenceFailure(ArpLabError, ArithmeticError):
    def __init__(self, what: str, iterations: int, estimate: Optional[float] = None) -> None:
        msg = f"{what} did not converge after {iterations} iterations"
        if estimate is not None:
            msg += f" (last estimate {estimate:.6g})"
        super().__init__(msg)
        self.what = what
        self.iterations = iterations
        self.estimate = estimate


class NumericalInstability(ArpLabError, ArithmeticError):
    """A computed quantity that must be nonnegative came out clearly negative."""

    def __init__(self, what: str, value: float, tolerance: float) -> None:
        super().__init__(f"{what} = {value:.6g} is below -{tolerance:.3g}")
        self.what = what
        self.value = value
        self.tolerance = tolerance


# ---------------------------------------------------------------------------
# Theory preconditions
# ---------------------------------------------------------------------------
class PreconditionViolated(ArpLabError):
    """A hypothesis of a theorem does not hold for the given model.

    Callers that produce reports render this as data (see ``to_dict``); it is a
    finding about the model, not an operational failure.
    """

    def __init__(self, condition: str, measured: Optional[Dict[str, Any]] = None, detail: str = "") -> None:
        self.condition = condition
        self.measured = dict(measured or {})
        self.detail = detail
        parts = [f"precondition '{condition}' violated"]
        if self.measured:
            parts.append(", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items()))
        if detail:
            parts.append(detail)
        super().__init__(": ".join(parts))

    def to_dict(self) -> Dict[str, Any]:
        return {"condition": self.condition, "measured": dict(self.measured), "detail": self.detail}


class DegenerateSparsity(ArpLabError, ValueError):
    """The sub-transition matrix has no positive entry (zeta = 0)."""


# ---------------------------------------------------------------------------
# Vocabulary and corpora
# ---------------------------------------------------------------------------
class UnknownToken(ArpLabError, KeyError):
    def __init__(self, token: str) -> None:
        super().__init__(token)
        self.token = token

    def __str__(self) -> str:
        return f"unknown token {self.token!r}"


class EmptyCorpus(ArpLabError, ValueError):
    pass


class EmptyInput(ArpLabError, ValueError):
    pass


class CorpusEncodingError(ArpLabError, ValueError):
    def __init__(self, path: str, offset: int) -> None:
        super().__init__(f"{path}: invalid UTF-8 at byte offset {offset}")
        self.path = path
        self.offset = offset


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------
class InvalidDistribution(ArpLabError, ValueError):
    pass


class DegenerateSupport(ArpLabError, ValueError):
    pass


class InvalidTransform(ArpLabError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------
class EmptySequenceSet(ArpLabError, ValueError):
    pass


class SequenceTooShort(ArpLabError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------
class InvalidGamma(ArpLabError, ValueError):
    pass


class MalformedMarkers(ArpLabError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Perturbations
# ---------------------------------------------------------------------------
class InvalidDelta(ArpLabError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------
class SchemaError(ArpLabError, ValueError):
    pass


class TypeMismatch(SchemaError):
    pass


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


__all__ = [
    "ArpLabError",
    "InvalidMatrix",
    "SingularMatrix",
    "ConvergenceFailure",
    "NumericalInstability",
    "PreconditionViolated",
    "DegenerateSparsity",
    "UnknownToken",
    "EmptyCorpus",
    "EmptyInput",
    "CorpusEncodingError",
    "InvalidDistribution",
    "DegenerateSupport",
    "InvalidTransform",
    "EmptySequenceSet",
    "SequenceTooShort",
    "InvalidGamma",
    "MalformedMarkers",
    "InvalidDelta",
    "SchemaError",
    "TypeMismatch",
]
