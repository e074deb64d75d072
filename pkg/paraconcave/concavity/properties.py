"""
Empirical checks of the structural properties of alpha-parabolic p-concavity.

Each property is an implication; a PropertyVerdict holds when the premise
fails or the conclusion passes.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from paraconcave.errors import DimensionMismatchError, ExponentDomainError
from paraconcave.fields import SpaceTimeField, SteadyField
from paraconcave.means import ExtendedExponent, format_exponent, parse_exponent
from paraconcave.solver import time_monotonicity_check
from paraconcave.concavity.checks import (
    DEFAULT_C_TOL,
    ConcavityQuery,
    certification_tolerance,
    check_parabolic_concavity,
    check_spatial_concavity,
    evaluate_triples,
    transformed_defects,
)
from paraconcave.concavity.sampling import draw_triples

logger = logging.getLogger(__name__)

EXTENSION_LEVELS = 11


@dataclass
class PropertyVerdict:
    name: str
    premise: bool
    conclusion: bool
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return (not self.premise) or self.conclusion

    def to_dict(self) -> Dict[str, Any]:
        return {"property": self.name, "premise": self.premise, "conclusion": self.conclusion,
                "holds": self.holds, **self.details}


def extend_in_time(w: SteadyField, times: Optional[np.ndarray] = None, T: float = 1.0) -> SpaceTimeField:
    """Time-constant extension of a spatial function."""
    if times is None:
        times = np.linspace(0.0, T, EXTENSION_LEVELS)
    values = np.broadcast_to(w.values, (len(times),) + w.values.shape).copy()
    return SpaceTimeField(w.grid, np.asarray(times, dtype=float), values, scheme="time-constant",
                          metadata={"time_constant": True})


def distance_function(grid) -> SteadyField:
    """dist(x, boundary) on the interior of grid, a 1-concave function."""
    return SteadyField(grid, np.where(grid.interior, grid.distance, 0.0))


def product_field(u: SpaceTimeField, w: SpaceTimeField) -> SpaceTimeField:
    if u.grid.lattice_shape != w.grid.lattice_shape or not np.allclose(u.times, w.times):
        raise DimensionMismatchError("product needs fields on the same grid and times")
    return u.with_values(u.values * w.values, product=True)


def _spatial_tolerance(u: SpaceTimeField, c_tol: float) -> float:
    return c_tol * u.grid.h ** 2 * max(u.max_value, 1e-300)


def property_a(u: SpaceTimeField, p: float, t_min: float, n_samples: int = 2048, seed: int = 0,
               c_tol: float = DEFAULT_C_TOL) -> PropertyVerdict:
    """At alpha = 1 the parabolic check is joint concavity of u^p in (x, t)."""
    if not (p > 0.0 and math.isfinite(p)):
        raise ExponentDomainError("joint concavity of u^p is compared for finite p > 0")
    tol = certification_tolerance(u, 1.0, c_tol)
    sample = draw_triples(u.grid, t_min, u.T, n_samples, seed=seed)
    parabolic = evaluate_triples(u, sample, 1.0).defects(p)
    joint = transformed_defects(u, sample, 1.0, p)
    clear = np.abs(parabolic) > tol
    disagreements = int(np.count_nonzero(np.sign(parabolic[clear]) != np.sign(joint[clear])))
    return PropertyVerdict("a", True, disagreements == 0,
                           {"compared": int(np.count_nonzero(clear)), "disagreements": disagreements})


def property_b(w: SteadyField, p: float, alphas: Sequence[float], n_samples: int = 2048, seed: int = 0,
               c_tol: float = DEFAULT_C_TOL) -> PropertyVerdict:
    """A p-concave spatial function is alpha-parabolically p-concave for every alpha."""
    extension = extend_in_time(w)
    tol = _spatial_tolerance(extension, c_tol)
    premise = check_spatial_concavity(extension, extension.T, p, n_samples=n_samples, tol=tol, seed=seed)
    t_min = 2.0 * extension.dt
    results = {}
    for alpha in alphas:
        report = check_parabolic_concavity(
            extension, ConcavityQuery(alpha=alpha, p=p, n_samples=n_samples, tolerance=tol, seed=seed), t_min)
        results[str(alpha)] = report.worst_defect
        if not report.passed:
            return PropertyVerdict("b", premise.passed, False, {"failed_alpha": alpha, "defects": results})
    return PropertyVerdict("b", premise.passed, True, {"defects": results})


def property_c(u: SpaceTimeField, alpha: float, p: float, times: Sequence[float], t_min: float,
               n_samples: int = 2048, seed: int = 0, c_tol: float = DEFAULT_C_TOL) -> PropertyVerdict:
    """Each time slice of an alpha-parabolically p-concave field is p-concave."""
    premise = check_parabolic_concavity(u, ConcavityQuery(alpha=alpha, p=p, n_samples=n_samples, seed=seed,
                                                          c_tol=c_tol), t_min)
    tol = certification_tolerance(u, alpha, c_tol)
    slices = [check_spatial_concavity(u, t, p, n_samples=n_samples, tol=tol, seed=seed) for t in times]
    return PropertyVerdict("c", premise.passed, all(r.passed for r in slices),
                           {"slice_defects": [r.worst_defect for r in slices]})


def property_d(u: SpaceTimeField, alpha: float, p: float, q_values: Sequence[ExtendedExponent], t_min: float,
               n_samples: int = 2048, seed: int = 0, c_tol: float = DEFAULT_C_TOL) -> PropertyVerdict:
    """A pass at p implies a pass at every q <= p on the identical sample set."""
    q_values = [parse_exponent(q) for q in q_values]
    if any(q > p for q in q_values):
        raise ExponentDomainError(f"q values must not exceed p={p}")
    tol = certification_tolerance(u, alpha, c_tol)
    sample = draw_triples(u.grid, t_min ** alpha, u.T ** alpha, n_samples, seed=seed)
    values = evaluate_triples(u, sample, alpha)
    premise = float(np.max(values.defects(p))) <= tol
    worst = {str(format_exponent(q)): float(np.max(values.defects(q))) for q in q_values}
    return PropertyVerdict("d", premise, all(d <= tol for d in worst.values()), {"defects": worst})


def property_e(u: SpaceTimeField, alpha: float, p: float, betas: Sequence[float], t_min: float,
               n_samples: int = 2048, seed: int = 0, c_tol: float = DEFAULT_C_TOL) -> PropertyVerdict:
    """For time-nondecreasing fields, a pass at alpha implies a pass at every beta >= alpha."""
    if any(beta < alpha for beta in betas):
        raise ExponentDomainError(f"beta values must not be below alpha={alpha}")
    monotone = time_monotonicity_check(u).passed
    base = check_parabolic_concavity(u, ConcavityQuery(alpha=alpha, p=p, n_samples=n_samples, seed=seed,
                                                       c_tol=c_tol), t_min)
    reports = {str(beta): check_parabolic_concavity(
        u, ConcavityQuery(alpha=beta, p=p, n_samples=n_samples, seed=seed, c_tol=c_tol), t_min)
        for beta in betas}
    return PropertyVerdict("e", monotone and base.passed, all(r.passed for r in reports.values()),
                           {"monotone": monotone, "defects": {b: r.worst_defect for b, r in reports.items()}})


def property_g(u: SpaceTimeField, w: SpaceTimeField, alpha: float, p: float, q: float, t_min: float,
               n_samples: int = 2048, seed: int = 0, c_tol: float = DEFAULT_C_TOL) -> PropertyVerdict:
    """If u is p-concave and w is q-concave (both alpha-parabolically), u w is r-concave with 1/r = 1/p + 1/q."""
    if not (p > 0.0 and q > 0.0):
        raise ExponentDomainError("the product rule is checked for positive exponents")
    r = 1.0 / (1.0 / p + 1.0 / q) if math.isfinite(p) and math.isfinite(q) else min(p, q)
    query = lambda e: ConcavityQuery(alpha=alpha, p=e, n_samples=n_samples, seed=seed, c_tol=c_tol)
    first = check_parabolic_concavity(u, query(p), t_min)
    second = check_parabolic_concavity(w, query(q), t_min)
    product = check_parabolic_concavity(product_field(u, w), query(r), t_min)
    return PropertyVerdict("g", first.passed and second.passed, product.passed,
                           {"r": r, "product_defect": product.worst_defect})


def property_suite(
    u: SpaceTimeField,
    w: SteadyField,
    alpha: float,
    p: float,
    q_values: Sequence[ExtendedExponent] = (0.0, -math.inf),
    *,
    w_p: float = 1.0,
    betas: Sequence[float] = (0.75, 1.0),
    t_min: Optional[float] = None,
    n_samples: int = 2048,
    seed: int = 0,
    c_tol: float = DEFAULT_C_TOL,
) -> List[PropertyVerdict]:
    """
    Run properties (a), (b), (c), (d), (e) and (g); (a) needs a finite p > 0.

    Args:
        u: solved field, expected alpha-parabolically p-concave
        w: spatial function, expected w_p-concave
        alpha, p: exponents at which u is tested
        q_values: exponents below p for the downgrade property
        w_p: concavity exponent of w
        betas: time exponents at or above alpha for the monotone upgrade
    """
    if w.grid.lattice_shape != u.grid.lattice_shape:
        raise DimensionMismatchError("u and w must share the grid")
    t_min = t_min if t_min is not None else 20.0 * u.dt
    slice_times = [t for t in (0.25 * u.T, 0.5 * u.T, u.T) if t >= t_min]
    verdicts = [
        property_b(w, w_p, sorted({alpha, *betas}), n_samples=n_samples, seed=seed, c_tol=c_tol),
        property_c(u, alpha, p, slice_times, t_min, n_samples=n_samples, seed=seed, c_tol=c_tol),
        property_d(u, alpha, p, q_values, t_min, n_samples=n_samples, seed=seed, c_tol=c_tol),
        property_e(u, alpha, p, [b for b in betas if b >= alpha], t_min, n_samples=n_samples, seed=seed,
                   c_tol=c_tol),
        property_g(u, extend_in_time(w, u.times), alpha, p, w_p, t_min, n_samples=n_samples, seed=seed,
                   c_tol=c_tol),
    ]
    if p > 0.0 and math.isfinite(p):
        verdicts.insert(0, property_a(u, p, t_min, n_samples=n_samples, seed=seed, c_tol=c_tol))
    for verdict in verdicts:
        logger.info(f"Property ({verdict.name}): premise={verdict.premise} conclusion={verdict.conclusion}")
    return verdicts
