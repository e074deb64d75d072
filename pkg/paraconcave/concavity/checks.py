"""
Midpoint tests of alpha-parabolic p-concavity.

A field u passes when, on every sampled triple,

    u((1-lam) x1 + lam x2, M_alpha(t1, t2; lam)) >= M_p(u(x1, t1), u(x2, t2); lam) - tolerance.

Times are handled in the transformed coordinate tau = t^alpha, where the
alpha-mean of times becomes the arithmetic mean.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import reduce
from typing import Any, Dict, Optional, Tuple

import numpy as np

from paraconcave.errors import (
    BracketError,
    EmptySampleError,
    ExponentDomainError,
    InterpolationError,
    NegativeInputError,
    ToleranceError,
)
from paraconcave.fields import SpaceTimeField
from paraconcave.means import ExtendedExponent, format_exponent, parse_exponent, power_mean
from paraconcave.solver import time_monotonicity_check
from paraconcave.concavity.sampling import TripleSample, draw_slice_pairs, draw_triples

logger = logging.getLogger(__name__)

DEFAULT_C_TOL = 5.0
DEFAULT_SAMPLES = 4096
CERTIFICATION_SAMPLES = 1000
BATCH_SIZE = 8192


class Verdict(Enum):
    """Outcome of a concavity test"""
    PASS = "pass"
    FAIL = "fail"


@dataclass
class WorstTriple:
    """Location of the largest defect"""
    x1: Tuple[float, ...]
    t1: float
    x2: Tuple[float, ...]
    t2: float
    lam: float


@dataclass
class ConcavityReport:
    """Verdict of a midpoint test; the verdict is fail iff worst_defect > tolerance."""
    verdict: Verdict
    worst_defect: float
    worst_triple: Optional[WorstTriple]
    samples_tested: int
    tolerance: float
    seed: int = 0
    alpha: Optional[float] = None
    p: Optional[ExtendedExponent] = None
    kind: str = "parabolic"
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    @property
    def defect_ratio(self) -> float:
        """worst_defect / tolerance"""
        return self.worst_defect / self.tolerance if self.tolerance > 0 else math.inf

    def merge(self, other: "ConcavityReport") -> "ConcavityReport":
        """Combine reports over disjoint sample batches by max-defect reduction."""
        worst = self if self.worst_defect >= other.worst_defect else other
        tolerance = max(self.tolerance, other.tolerance)
        return ConcavityReport(
            verdict=Verdict.FAIL if worst.worst_defect > tolerance else Verdict.PASS,
            worst_defect=worst.worst_defect,
            worst_triple=worst.worst_triple,
            samples_tested=self.samples_tested + other.samples_tested,
            tolerance=tolerance,
            seed=self.seed,
            alpha=self.alpha,
            p=self.p,
            kind=self.kind,
            details={**other.details, **self.details},
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["verdict"] = self.verdict.value
        data["p"] = None if self.p is None else format_exponent(self.p)
        return data


@dataclass(frozen=True)
class ConcavityQuery:
    """Parameters of a parabolic concavity test."""
    alpha: float = 0.5
    p: ExtendedExponent = 0.5
    n_samples: int = DEFAULT_SAMPLES
    tolerance: Optional[float] = None
    seed: int = 0
    c_tol: float = DEFAULT_C_TOL
    sweep: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p", parse_exponent(self.p))
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ExponentDomainError(f"alpha must be positive, got {self.alpha}")
        if self.n_samples < 0:
            raise EmptySampleError("n_samples must be nonnegative")
        if self.tolerance is not None and not self.tolerance > 0.0:
            raise ToleranceError(f"tolerance must be positive, got {self.tolerance}")
        if self.c_tol <= 0.0:
            raise ToleranceError(f"c_tol must be positive, got {self.c_tol}")
        if self.n_samples < CERTIFICATION_SAMPLES:
            logger.debug(f"{self.n_samples} samples is below the certification count {CERTIFICATION_SAMPLES}")


def certification_tolerance(u: SpaceTimeField, alpha: float, c_tol: float = DEFAULT_C_TOL) -> float:
    """C_tol (h^2 + dt^min(1, 2 alpha)) max|u|"""
    dt = u.level_spacing
    return c_tol * (u.grid.h ** 2 + dt ** min(1.0, 2.0 * alpha)) * u.max_value


def slice_tolerance(u: SpaceTimeField, t: float, c_tol: float = DEFAULT_C_TOL) -> float:
    """C_tol h^2 max|u|, plus the time term when t falls between stored levels."""
    scale = u.grid.h ** 2
    if not np.any(np.isclose(u.times, t, rtol=0.0, atol=1e-12 * max(1.0, u.T))):
        scale += u.level_spacing
    return c_tol * scale * u.max_value


def _to_times(taus: np.ndarray, alpha: float) -> np.ndarray:
    return np.maximum(taus, 0.0) ** (1.0 / alpha)


@dataclass
class SampledValues:
    """u evaluated at both ends and the midpoint of every triple; reusable across p."""
    sample: TripleSample
    alpha: float
    u1: np.ndarray
    u2: np.ndarray
    u_mid: np.ndarray

    def defects(self, p: ExtendedExponent) -> np.ndarray:
        """M_p(u1, u2; lam) - u(midpoint)"""
        lam = self.sample.lam
        means = power_mean(np.column_stack([self.u1, self.u2]), np.column_stack([1.0 - lam, lam]), p)
        return means - self.u_mid

    def report(self, p: ExtendedExponent, tolerance: float, seed: int = 0, kind: str = "parabolic") -> ConcavityReport:
        defects = self.defects(p)
        worst = int(np.argmax(defects))
        s = self.sample
        triple = WorstTriple(
            x1=tuple(float(c) for c in s.x1[worst]),
            t1=float(_to_times(s.tau1[worst:worst + 1], self.alpha)[0]),
            x2=tuple(float(c) for c in s.x2[worst]),
            t2=float(_to_times(s.tau2[worst:worst + 1], self.alpha)[0]),
            lam=float(s.lam[worst]),
        )
        worst_defect = float(defects[worst])
        return ConcavityReport(
            verdict=Verdict.FAIL if worst_defect > tolerance else Verdict.PASS,
            worst_defect=worst_defect,
            worst_triple=triple,
            samples_tested=len(s),
            tolerance=float(tolerance),
            seed=seed,
            alpha=self.alpha,
            p=p,
            kind=kind,
            details={"random_samples": s.n_random},
        )


def evaluate_triples(u: SpaceTimeField, sample: TripleSample, alpha: float) -> SampledValues:
    """Interpolate u at the ends and the midpoint of each triple, in coordinates (x, t^alpha)."""
    if len(sample) == 0:
        raise EmptySampleError("empty sample set")
    u1 = u.interpolate(sample.x1, sample.tau1, alpha)
    u2 = u.interpolate(sample.x2, sample.tau2, alpha)
    u_mid = u.interpolate(sample.x_mid, sample.tau_mid, alpha)
    return SampledValues(sample, alpha, u1, u2, u_mid)


def transformed_defects(u: SpaceTimeField, sample: TripleSample, alpha: float, p: float) -> np.ndarray:
    """
    Plain midpoint concavity defects of v(x, tau) = u(x, tau^(1/alpha))^p.

    For p > 0 these equal M_p(u1, u2)^p - u(mid)^p.
    """
    if not p > 0.0:
        raise ExponentDomainError("transformed defects need p > 0")
    v1 = u.interpolate(sample.x1, sample.tau1, alpha) ** p
    v2 = u.interpolate(sample.x2, sample.tau2, alpha) ** p
    v_mid = u.interpolate(sample.x_mid, sample.tau_mid, alpha) ** p
    return (1.0 - sample.lam) * v1 + sample.lam * v2 - v_mid


def _time_window(u: SpaceTimeField, alpha: float, t_min: float) -> Tuple[float, float]:
    if t_min < 2.0 * u.dt * (1.0 - 1e-12):
        raise InterpolationError(f"t_min={t_min} must be at least 2 dt = {2.0 * u.dt}")
    if t_min >= u.T:
        raise EmptySampleError(f"t_min={t_min} leaves no time window below T={u.T}")
    return t_min ** alpha, u.T ** alpha


def check_parabolic_concavity(u: SpaceTimeField, q: ConcavityQuery, t_min: float) -> ConcavityReport:
    """
    Certify or refute alpha-parabolic p-concavity of u on sampled triples.

    Returns:
        ConcavityReport with the worst defect M_p(u1, u2; lam) - u(midpoint)
    """
    if u.values.min() < -1e-12:
        raise NegativeInputError("concavity tests need a nonnegative field")
    if q.alpha > 1.0:
        if not time_monotonicity_check(u).passed:
            logger.warning(f"alpha={q.alpha} > 1 on a field that is not time-nondecreasing; verdict not covered")
    tau_lo, tau_hi = _time_window(u, q.alpha, t_min)
    tolerance = q.tolerance if q.tolerance is not None else certification_tolerance(u, q.alpha, q.c_tol)
    sample = draw_triples(u.grid, tau_lo, tau_hi, q.n_samples, seed=q.seed, sweep=q.sweep)

    batches = [sample.take(slice(k, k + BATCH_SIZE)) for k in range(0, len(sample), BATCH_SIZE)]

    def run(batch: TripleSample) -> ConcavityReport:
        return evaluate_triples(u, batch, q.alpha).report(q.p, tolerance, seed=q.seed)

    u.interpolator(q.alpha)
    if q.workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=q.workers) as pool:
            reports = list(pool.map(run, batches))
    else:
        reports = [run(batch) for batch in batches]
    report = reduce(lambda a, b: a.merge(b), reports)
    report.details = {"random_samples": sample.n_random, "t_min": t_min}
    logger.info(
        f"Parabolic check alpha={q.alpha} p={q.p}: {report.verdict.value}, "
        f"worst defect {report.worst_defect:.3e} vs tolerance {tolerance:.3e} over {report.samples_tested} triples")
    return report


def check_spatial_concavity(
    u: SpaceTimeField,
    t: float,
    p: ExtendedExponent,
    n_samples: int = DEFAULT_SAMPLES,
    tol: Optional[float] = None,
    seed: int = 0,
    c_tol: float = DEFAULT_C_TOL,
    sweep: bool = True,
) -> ConcavityReport:
    """Midpoint test of p-concavity of the slice u(., t)."""
    p = parse_exponent(p)
    if not 0.0 < t <= u.T * (1.0 + 1e-12):
        raise InterpolationError(f"time {t} outside (0, {u.T}]")
    tolerance = tol if tol is not None else slice_tolerance(u, t, c_tol)
    sample = draw_slice_pairs(u.grid, t, n_samples, seed=seed, sweep=sweep)
    report = evaluate_triples(u, sample, 1.0).report(p, tolerance, seed=seed, kind="spatial")
    report.details["t"] = t
    logger.info(f"Spatial check t={t:.4g} p={p}: {report.verdict.value}, worst defect {report.worst_defect:.3e}")
    return report


def estimate_max_exponent(
    u: SpaceTimeField,
    alpha: float,
    p_lo: float,
    p_hi: float,
    tol_p: float = 0.01,
    *,
    t_min: Optional[float] = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    tolerance: Optional[float] = None,
    c_tol: float = DEFAULT_C_TOL,
) -> float:
    """
    Bisection for the largest p at which the parabolic check passes.

    The sample set is drawn and evaluated once; only the mean changes with p.
    """
    if not p_lo < p_hi:
        raise BracketError(f"empty bracket [{p_lo}, {p_hi}]")
    t_min = t_min if t_min is not None else 20.0 * u.dt
    tau_lo, tau_hi = _time_window(u, alpha, t_min)
    tolerance = tolerance if tolerance is not None else certification_tolerance(u, alpha, c_tol)
    values = evaluate_triples(u, draw_triples(u.grid, tau_lo, tau_hi, n_samples, seed=seed), alpha)

    def passes(p: float) -> bool:
        return float(np.max(values.defects(p))) <= tolerance

    if not passes(p_lo):
        raise BracketError(f"check fails at the lower end p={p_lo}")
    if passes(p_hi):
        raise BracketError(f"check passes at the upper end p={p_hi}")
    lo, hi = p_lo, p_hi
    while hi - lo > tol_p:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
        logger.debug(f"Bisection bracket [{lo:.4f}, {hi:.4f}]")
    estimate = 0.5 * (lo + hi)
    logger.info(f"Estimated maximal exponent {estimate:.4f} (bracket [{lo:.4f}, {hi:.4f}])")
    return estimate
