"""
Closed-form exponent relations between source concavity, solution concavity
and energy concavity.

q is the concavity exponent of the source in x (q >= 1, or +inf for a
constant source), gamma the growth exponent in u, n the dimension.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

from paraconcave.energy import energy_concavity_exponent
from paraconcave.errors import ExponentDomainError
from paraconcave.means import ExtendedExponent, format_exponent, parse_exponent

logger = logging.getLogger(__name__)


def _check_source(q: ExtendedExponent, gamma: float) -> float:
    q = parse_exponent(q)
    if not (q >= 1.0):
        raise ExponentDomainError(f"source exponent q must be >= 1 or inf, got {q}")
    if not 0.0 <= gamma <= 0.5:
        raise ExponentDomainError(f"gamma must lie in [0, 1/2], got {gamma}")
    return q


def _check_dimension(n: int) -> None:
    if n < 1:
        raise ExponentDomainError(f"dimension must be positive, got {n}")


def solution_exponent(q: ExtendedExponent, gamma: float = 0.0) -> float:
    """p = q / (1 + 2q + 2 gamma q), and 1 / (2 (1 + gamma)) for q = inf."""
    q = _check_source(q, gamma)
    if q == math.inf:
        return 1.0 / (2.0 * (1.0 + gamma))
    return q / (1.0 + 2.0 * q + 2.0 * gamma * q)


def sharpness_threshold(q: ExtendedExponent, gamma: float = 0.0) -> float:
    """Exponent above which parabolic p-concavity fails for sources of this type."""
    return solution_exponent(q, gamma)


def energy_exponent(q: ExtendedExponent, gamma: float, n: int) -> float:
    """r = q / ((n + 2 + gamma) q + 1), and 1 / (n + 2 + gamma) for q = inf."""
    q = _check_source(q, gamma)
    _check_dimension(n)
    if q == math.inf:
        return 1.0 / (n + 2.0 + gamma)
    return q / ((n + 2.0 + gamma) * q + 1.0)


def semilinear_exponents(gamma: float, n: int) -> Tuple[float, float]:
    """(p, q_energy) for the maximal solution of u_t = Δu + u^gamma."""
    if not 0.0 < gamma < 1.0:
        raise ExponentDomainError(f"semilinear gamma must lie in (0, 1), got {gamma}")
    _check_dimension(n)
    return (1.0 - gamma) / 2.0, (1.0 - gamma) / (n * (1.0 - gamma) + 2.0)


def elliptic_exponent(q: ExtendedExponent) -> float:
    """Concavity exponent q / (1 + 2q) of the steady state of Δv + f = 0."""
    q = _check_source(q, 0.0)
    if q == math.inf:
        return 0.5
    return q / (1.0 + 2.0 * q)


@dataclass(frozen=True)
class StructureBeta:
    inverse_beta: float
    beta: float
    valid: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"inverse_beta": self.inverse_beta, "beta": format_exponent(self.beta), "valid": self.valid}


def structure_beta(p: float, q: ExtendedExponent, gamma: float, alpha: float = 0.5) -> StructureBeta:
    """
    1/beta = 3 - 1/p + gamma/alpha + 1/q.

    The structure function is concave when 1/beta < 1 and v^(3 - 1/p) has a
    nonnegative power.
    """
    if not 0.0 < p < 1.0:
        raise ExponentDomainError(f"p must lie in (0, 1), got {p}")
    if not alpha > 0.0:
        raise ExponentDomainError(f"alpha must be positive, got {alpha}")
    q = parse_exponent(q)
    if not q > 0.0:
        raise ExponentDomainError(f"q must be positive, got {q}")
    inverse = 3.0 - 1.0 / p + gamma / alpha + (0.0 if q == math.inf else 1.0 / q)
    beta = math.inf if inverse == 0.0 else 1.0 / inverse
    return StructureBeta(inverse, beta, (3.0 - 1.0 / p) >= 0.0 and inverse < 1.0)


@dataclass
class TheoremInputs:
    q: ExtendedExponent = math.inf
    gamma: float = 0.0
    n: int = 1
    p: Optional[ExtendedExponent] = None
    m: float = 1.0

    def __post_init__(self):
        self.q = parse_exponent(self.q)
        if self.p is not None:
            self.p = parse_exponent(self.p)
        _check_dimension(self.n)
        if not self.m > 0.0:
            raise ExponentDomainError(f"m must be positive, got {self.m}")


@dataclass(frozen=True)
class Prediction:
    name: str
    value: Any
    relation: str

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if isinstance(self.value, float):
            data["value"] = format_exponent(self.value)
        return data


def predict(inputs: TheoremInputs) -> List[Prediction]:
    """Every relation that applies to the given inputs, in a fixed order."""
    rows: List[Prediction] = []
    q, gamma, n = inputs.q, inputs.gamma, inputs.n
    if 0.0 <= gamma <= 0.5:
        p = solution_exponent(q, gamma)
        rows.append(Prediction("solution_exponent", p, "q/(1+2q+2*gamma*q)"))
        rows.append(Prediction("sharpness_threshold", sharpness_threshold(q, gamma), "fails above"))
        rows.append(Prediction("energy_exponent", energy_exponent(q, gamma, n), "q/((n+2+gamma)q+1)"))
        if gamma == 0.0:
            rows.append(Prediction("elliptic_exponent", elliptic_exponent(q), "q/(1+2q)"))
    if 0.0 < gamma < 1.0:
        p_semi, q_semi = semilinear_exponents(gamma, n)
        rows.append(Prediction("semilinear_solution_exponent", p_semi, "(1-gamma)/2"))
        rows.append(Prediction("semilinear_energy_exponent", q_semi, "(1-gamma)/(n(1-gamma)+2)"))
    if inputs.p is not None:
        rows.append(Prediction("energy_concavity_exponent", energy_concavity_exponent(inputs.p, n, inputs.m),
                               "p/(np+m)"))
        if 0.0 < inputs.p < 1.0 and q >= 1.0:
            sb = structure_beta(inputs.p, q, gamma)
            rows.append(Prediction("structure_inverse_beta", sb.inverse_beta, "3-1/p+2*gamma+1/q"))
            rows.append(Prediction("structure_valid", sb.valid, "1/beta < 1"))
    logger.debug(f"Predicted {len(rows)} exponents for {inputs}")
    return rows
