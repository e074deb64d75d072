"""
Heat energy H(t) = int u dx, generalized energies H_m(t) = (int u^m dx)^(1/m),
and power concavity tests of such curves in time.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from paraconcave.concavity.checks import DEFAULT_C_TOL, ConcavityReport, Verdict, WorstTriple
from paraconcave.concavity.sampling import SWEEP_LAMBDAS, LAMBDA_CLIP
from paraconcave.domain import SpaceGrid
from paraconcave.errors import EmptySampleError, ExponentDomainError
from paraconcave.fields import SpaceTimeField
from paraconcave.means import ExtendedExponent, parse_exponent, power_mean

logger = logging.getLogger(__name__)

CURVE_SWEEP_NODES = 33


@dataclass
class EnergyCurve:
    """H_m sampled at the field's stored times."""
    times: np.ndarray
    values: np.ndarray
    m: float = 1.0
    quadrature: str = "trapezoid"
    h: float = 0.0
    dt: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ExponentDomainError("times and values must have the same length")
        if np.any(self.values < 0.0):
            raise ExponentDomainError("energies are nonnegative")

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, np.column_stack([self.times, self.values]), delimiter=",", header="t,value",
                   comments="", fmt="%.17g")
        return path

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "energy-curve",
            "m": self.m,
            "quadrature": self.quadrature,
            "points": len(self.times),
            "final_value": float(self.values[-1]),
        }


def quadrature_weights(grid: SpaceGrid) -> np.ndarray:
    """
    Masked-cell weights on the 2D lattice: a full cell for interior nodes whose
    stencil stays interior, half a cell for interior nodes next to the boundary.
    """
    full = grid.interior.copy()
    for axis in range(grid.dimension):
        for shift in (-1, 1):
            full &= np.roll(grid.interior, shift, axis=axis)
    weights = np.where(grid.interior, 0.5, 0.0)
    weights[full] = 1.0
    return weights * grid.cell_volume


def heat_energy(u: SpaceTimeField, m: float = 1.0) -> EnergyCurve:
    """H_m(t) by the trapezoidal rule in 1D and masked-cell quadrature in 2D."""
    if not m > 0.0:
        raise ExponentDomainError(f"m must be positive, got {m}")
    powered = np.power(np.maximum(u.values, 0.0), m)
    if u.grid.dimension == 1:
        integral = trapezoid(powered, x=u.grid.axes[0], axis=1)
        quadrature = "trapezoid"
    else:
        weights = quadrature_weights(u.grid)
        integral = np.tensordot(powered, weights, axes=u.grid.dimension)
        quadrature = "masked-cell"
    values = np.power(np.maximum(integral, 0.0), 1.0 / m)
    return EnergyCurve(u.times.copy(), values, m=m, quadrature=quadrature, h=u.grid.h,
                       dt=u.dt, metadata={"dimension": u.grid.dimension, "level_spacing": u.level_spacing})


def energy_concavity_exponent(p: ExtendedExponent, n: int, m: float = 1.0) -> ExtendedExponent:
    """
    q such that H_m is q-concave when u is parabolically p-concave.

    p / (n p + m), with 1/n at p = +inf and -inf at p = -m/n.
    """
    p = parse_exponent(p)
    if n < 1 or not m > 0.0:
        raise ExponentDomainError(f"need n >= 1 and m > 0, got n={n}, m={m}")
    if p == math.inf:
        return 1.0 / n
    if p < -m / n:
        raise ExponentDomainError(f"p={p} is below -m/n={-m / n}")
    if p == -m / n:
        return -math.inf
    return p / (n * p + m)


def check_time_reparametrized(
    c: EnergyCurve,
    alpha: float,
    q: ExtendedExponent,
    tol: Optional[float] = None,
    t_min: Optional[float] = None,
    n_samples: int = 4096,
    seed: int = 0,
    c_tol: float = DEFAULT_C_TOL,
) -> ConcavityReport:
    """
    Midpoint test of q-concavity of s -> H(s^(1/alpha)) on [t_min^alpha, T^alpha].

    The curve is resampled with monotone cubic interpolation.
    """
    q = parse_exponent(q)
    if not 0.0 < alpha <= 1.0:
        raise ExponentDomainError(f"alpha must lie in (0, 1], got {alpha}")
    t_min = t_min if t_min is not None else 20.0 * c.dt
    if not 0.0 < t_min < c.T:
        raise EmptySampleError(f"t_min={t_min} leaves no window below T={c.T}")
    window = c.times >= t_min
    if np.any(c.values[window] <= 0.0):
        raise EmptySampleError("curve must be positive on [t_min, T]")
    curve = PchipInterpolator(c.times, c.values)
    top = float(np.max(c.values))
    if tol is None:
        tol = c_tol * (c.h ** 2 + c.dt ** min(1.0, 2.0 * alpha)) * top

    lo, hi = t_min ** alpha, c.T ** alpha
    rng = np.random.default_rng(seed)
    s1 = rng.uniform(lo, hi, n_samples)
    s2 = rng.uniform(lo, hi, n_samples)
    lam = np.clip(rng.uniform(0.0, 1.0, n_samples), LAMBDA_CLIP, 1.0 - LAMBDA_CLIP)
    nodes = np.linspace(lo, hi, CURVE_SWEEP_NODES)
    i, j = np.triu_indices(len(nodes), k=1)
    lams = np.asarray(SWEEP_LAMBDAS)
    s1 = np.concatenate([s1, np.repeat(nodes[i], len(lams))])
    s2 = np.concatenate([s2, np.repeat(nodes[j], len(lams))])
    lam = np.concatenate([lam, np.tile(lams, len(i))])
    mid = (1.0 - lam) * s1 + lam * s2

    def at(s):
        return np.maximum(curve(np.clip(s, lo, hi) ** (1.0 / alpha)), 0.0)

    means = power_mean(np.column_stack([at(s1), at(s2)]), np.column_stack([1.0 - lam, lam]), q)
    defects = means - at(mid)
    worst = int(np.argmax(defects))
    report = ConcavityReport(
        verdict=Verdict.FAIL if defects[worst] > tol else Verdict.PASS,
        worst_defect=float(defects[worst]),
        worst_triple=WorstTriple(x1=(), t1=float(s1[worst] ** (1.0 / alpha)), x2=(),
                                 t2=float(s2[worst] ** (1.0 / alpha)), lam=float(lam[worst])),
        samples_tested=len(lam),
        tolerance=float(tol),
        seed=seed,
        alpha=alpha,
        p=q,
        kind="energy",
        details={"m": c.m, "t_min": t_min},
    )
    logger.info(f"Energy H_{c.m:g} alpha={alpha} q={q}: {report.verdict.value} "
                f"(worst defect {report.worst_defect:.3e}, tolerance {report.tolerance:.3e})")
    return report


def check_curve_concavity(
    c: EnergyCurve,
    q: ExtendedExponent,
    t_min: Optional[float] = None,
    tol: Optional[float] = None,
    n_samples: int = 4096,
    seed: int = 0,
    c_tol: float = DEFAULT_C_TOL,
) -> ConcavityReport:
    """Midpoint test of q-concavity of the curve in t."""
    return check_time_reparametrized(c, 1.0, q, tol=tol, t_min=t_min, n_samples=n_samples, seed=seed, c_tol=c_tol)
