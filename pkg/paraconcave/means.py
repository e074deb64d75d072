"""
Weighted power means M_p for every exponent p in [-inf, +inf].

Extended exponents are plain floats: math.inf and -math.inf are exact values,
so the formulas keep their symbolic limits. Zero entries follow the usual
convention that M_p vanishes for p < 0 as soon as one entry vanishes.
"""
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from paraconcave.errors import (
    DimensionMismatchError,
    ExponentDomainError,
    InvalidWeightsError,
    NegativeInputError,
)

logger = logging.getLogger(__name__)

ExtendedExponent = float

GEOMETRIC_CUTOFF = 1e-8
LOG_SPACE_CUTOFF = 100.0
WEIGHT_SUM_TOLERANCE = 1e-12
# Decimal weights from config files are accepted up to this drift, then renormalized
WEIGHT_INPUT_TOLERANCE = 1e-6

_INFINITY_SPELLINGS = {
    "inf": math.inf, "+inf": math.inf, "infinity": math.inf, "+infinity": math.inf, "∞": math.inf, "+∞": math.inf,
    "-inf": -math.inf, "-infinity": -math.inf, "-∞": -math.inf,
}


def parse_exponent(value: Union[str, float, int]) -> ExtendedExponent:
    """Parse an extended exponent from a number or one of the spellings of +-inf."""
    if isinstance(value, bool):
        raise ExponentDomainError(f"not an exponent: {value!r}")
    if isinstance(value, (int, float)):
        if math.isnan(value):
            raise ExponentDomainError("exponent must not be NaN")
        return float(value)
    if isinstance(value, str):
        key = value.strip().lower()
        if key in _INFINITY_SPELLINGS:
            return _INFINITY_SPELLINGS[key]
        try:
            parsed = float(key)
        except ValueError:
            raise ExponentDomainError(f"not an exponent: {value!r}") from None
        if math.isnan(parsed):
            raise ExponentDomainError("exponent must not be NaN")
        return parsed
    raise ExponentDomainError(f"not an exponent: {value!r}")


def format_exponent(p: ExtendedExponent) -> Union[str, float]:
    """JSON-safe form of an exponent."""
    if p == math.inf:
        return "inf"
    if p == -math.inf:
        return "-inf"
    return float(p)


@dataclass(frozen=True)
class WeightVector:
    """A point of the open simplex: m >= 2 weights in (0,1) summing to one."""
    weights: Tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise InvalidWeightsError(f"need at least two weights, got {self.weights!r}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0) or np.any(w >= 1.0):
            raise InvalidWeightsError(f"weights must lie in (0,1): {self.weights!r}")
        total = float(w.sum())
        if abs(total - 1.0) > WEIGHT_INPUT_TOLERANCE:
            raise InvalidWeightsError(f"weights sum to {total}, not 1")
        w = w / total
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise InvalidWeightsError(f"weights cannot be normalized: {self.weights!r}")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @classmethod
    def uniform(cls, m: int) -> "WeightVector":
        return cls(tuple([1.0 / m] * m))

    @classmethod
    def pair(cls, lam: float) -> "WeightVector":
        """Weights (1 - lam, lam) of a two-point convex combination."""
        return cls((1.0 - lam, lam))

    @property
    def size(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


def power_mean(values: np.ndarray, weights: np.ndarray, p: ExtendedExponent) -> np.ndarray:
    """
    Vectorized weighted p-mean along the last axis.

    Args:
        values: nonnegative array of shape (..., m)
        weights: positive weights broadcastable to values, each row summing to one
        p: extended exponent

    Returns:
        Array of shape values.shape[:-1]
    """
    values = np.asarray(values, dtype=float)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), values.shape)
    if np.any(values < 0.0):
        raise NegativeInputError("power means are defined for nonnegative entries only")

    if p == math.inf:
        return values.max(axis=-1)
    if p == -math.inf:
        return values.min(axis=-1)

    has_zero = np.any(values == 0.0, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        logs = np.log(values)
        if abs(p) < GEOMETRIC_CUTOFF:
            out = np.exp(np.sum(weights * logs, axis=-1))
        elif abs(p) > LOG_SPACE_CUTOFF:
            out = np.exp(logsumexp(p * logs, b=weights, axis=-1) / p)
        else:
            # log of sum w a^p computed as log1p(sum w (a^p - 1)) to stay accurate for small |p|
            shifted = np.sum(weights * np.expm1(p * logs), axis=-1)
            out = np.exp(np.log1p(shifted) / p)
    if p <= 0.0 or abs(p) < GEOMETRIC_CUTOFF:
        out = np.where(has_zero, 0.0, out)
    return out


def p_mean(a: Sequence[float], lam: WeightVector, p: ExtendedExponent) -> float:
    """
    The lam-weighted p-mean of a.

    [sum lam_i a_i^p]^(1/p) for finite nonzero p, the weighted geometric mean
    for p = 0, max/min for p = +-inf, and 0 when p < 0 and some a_i = 0.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1 or arr.size != lam.size:
        raise DimensionMismatchError(f"got {arr.size} entries for {lam.size} weights")
    return float(power_mean(arr, lam.as_array(), p))


def p_mean_limit_check(a: Sequence[float], lam: WeightVector) -> Tuple[float, float]:
    """Evaluate M_p at p = 1e6 and p = -1e6, approximating max and min."""
    arr = np.asarray(a, dtype=float)
    if np.any(arr <= 0.0):
        raise NegativeInputError("limit check needs strictly positive entries")
    return p_mean(arr, lam, 1e6), p_mean(arr, lam, -1e6)
