"""
Structure condition: concavity of g(x, t, v) = v^(3 - 1/p) f(x, t^(1/alpha), v^(1/p)) in (x, t, v).
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from paraconcave.domain import ConvexDomain
from paraconcave.errors import ExponentDomainError, OutsideDomainError
from paraconcave.sources import SourceSpec
from paraconcave.concavity.checks import ConcavityReport, Verdict, WorstTriple
from paraconcave.concavity.sampling import SWEEP_LAMBDAS, draw_pairs_in_box

logger = logging.getLogger(__name__)

RELATIVE_TOLERANCE = 1e-9
SWEEP_POINTS_PER_AXIS = 5


@dataclass(frozen=True)
class StructureRegion:
    """Box of (x, t, v) values on which g is tested; t is the transformed time."""
    x_lo: Sequence[float] = (0.1,)
    x_hi: Sequence[float] = (0.4,)
    t_lo: float = 0.1
    t_hi: float = 1.0
    v_lo: float = 0.1
    v_hi: float = 1.0

    def __post_init__(self):
        if len(self.x_lo) != len(self.x_hi):
            raise ExponentDomainError("x_lo and x_hi must have the same dimension")
        if not (0.0 < self.t_lo < self.t_hi and 0.0 < self.v_lo < self.v_hi):
            raise ExponentDomainError("t and v ranges must be positive and nonempty")
        if any(lo >= hi for lo, hi in zip(self.x_lo, self.x_hi)):
            raise ExponentDomainError("x box must be nonempty")

    @property
    def lower(self) -> np.ndarray:
        return np.array(list(self.x_lo) + [self.t_lo, self.v_lo], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array(list(self.x_hi) + [self.t_hi, self.v_hi], dtype=float)


def structure_function(src: SourceSpec, dom: ConvexDomain, alpha: float, p: float, z: np.ndarray) -> np.ndarray:
    """g at points z = (x..., t, v), shape (N, n + 2)."""
    x, t, v = z[:, :-2], z[:, -2], z[:, -1]
    f = src.evaluate_at(dom, x, t ** (1.0 / alpha), v ** (1.0 / p))
    return v ** (3.0 - 1.0 / p) * f


def _ray_and_axis_pairs(lo: np.ndarray, hi: np.ndarray):
    """
    Deterministic pairs: z1 = s z2 on the ray to the origin (s chosen so z1
    hits the box), and pairs spanning the box along each axis.
    """
    d = len(lo)
    ticks = [np.linspace(a, b, SWEEP_POINTS_PER_AXIS + 2)[1:-1] for a, b in zip(lo, hi)]
    mesh = np.stack([m.ravel() for m in np.meshgrid(*ticks, indexing="ij")], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.nanmax(lo[None, :] / mesh, axis=1)
    ray = scale < 1.0
    z2_ray = mesh[ray]
    z1_ray = scale[ray, None] * z2_ray

    z1_axis, z2_axis = [], []
    for k in range(d):
        a = mesh.copy()
        b = mesh.copy()
        a[:, k] = lo[k]
        b[:, k] = hi[k]
        z1_axis.append(a)
        z2_axis.append(b)
    z1 = np.concatenate([z1_ray] + z1_axis)
    z2 = np.concatenate([z2_ray] + z2_axis)
    lams = np.asarray(SWEEP_LAMBDAS)
    return np.repeat(z1, len(lams), axis=0), np.repeat(z2, len(lams), axis=0), np.tile(lams, len(z1))


def _default_region(domain: ConvexDomain) -> StructureRegion:
    """(0.1, 0.4) scaled to an interval; a box around the inscribed center in 2D."""
    if domain.dimension == 1:
        return StructureRegion(x_lo=(domain.a + 0.1 * (domain.b - domain.a),),
                               x_hi=(domain.a + 0.4 * (domain.b - domain.a),))
    half = 0.5 * domain.inradius
    center = domain.inner_center
    return StructureRegion(x_lo=tuple(float(c) for c in center - half), x_hi=tuple(float(c) for c in center + half))


def check_structure_condition(
    src: SourceSpec,
    alpha: float,
    p: float,
    theta_samples: Optional[Sequence] = None,
    region: Optional[StructureRegion] = None,
    n_samples: int = 4096,
    tol: Optional[float] = None,
    seed: int = 0,
    domain: Optional[ConvexDomain] = None,
) -> ConcavityReport:
    """
    Midpoint test of concavity of g over random pairs in the region plus a ray and axis sweep.

    Gradient samples theta are accepted for interface compatibility; supported
    sources do not depend on the gradient, so they are ignored.
    """
    if not 0.0 < p < 1.0:
        raise ExponentDomainError(f"structure condition needs p in (0, 1), got {p}")
    if not alpha > 0.0:
        raise ExponentDomainError(f"alpha must be positive, got {alpha}")
    if theta_samples:
        logger.debug(f"Ignoring {len(theta_samples)} gradient samples for a gradient-free source")
    domain = domain or ConvexDomain.interval(0.0, 1.0)
    region = region or _default_region(domain)
    if len(region.x_lo) != domain.dimension:
        raise ExponentDomainError(f"region is {len(region.x_lo)}-dimensional, domain is {domain.dimension}-dimensional")
    corners = np.stack([m.ravel() for m in np.meshgrid(*zip(region.x_lo, region.x_hi), indexing="ij")], axis=-1)
    if not np.all(domain.in_closure(corners)):
        raise OutsideDomainError("structure region leaves the domain")

    lo, hi = region.lower, region.upper
    z1, z2, lam = draw_pairs_in_box(lo, hi, n_samples, seed=seed)
    s1, s2, slam = _ray_and_axis_pairs(lo, hi)
    z1, z2, lam = np.concatenate([z1, s1]), np.concatenate([z2, s2]), np.concatenate([lam, slam])
    mid = (1.0 - lam)[:, None] * z1 + lam[:, None] * z2

    g1 = structure_function(src, domain, alpha, p, z1)
    g2 = structure_function(src, domain, alpha, p, z2)
    gm = structure_function(src, domain, alpha, p, mid)
    defects = (1.0 - lam) * g1 + lam * g2 - gm
    if tol is None:
        tol = RELATIVE_TOLERANCE * max(float(np.max(np.abs(np.concatenate([g1, g2])))), 1.0) + 1e-12

    worst = int(np.argmax(defects))
    n = domain.dimension
    report = ConcavityReport(
        verdict=Verdict.FAIL if defects[worst] > tol else Verdict.PASS,
        worst_defect=float(defects[worst]),
        worst_triple=WorstTriple(
            x1=tuple(float(c) for c in z1[worst, :n]),
            t1=float(z1[worst, n]),
            x2=tuple(float(c) for c in z2[worst, :n]),
            t2=float(z2[worst, n]),
            lam=float(lam[worst]),
        ),
        samples_tested=len(lam),
        tolerance=float(tol),
        seed=seed,
        alpha=alpha,
        p=p,
        kind="structure",
        details={"v1": float(z1[worst, -1]), "v2": float(z2[worst, -1]), "source": src.kind},
    )
    logger.info(f"Structure condition {src.kind} alpha={alpha} p={p}: {report.verdict.value} "
                f"(worst defect {report.worst_defect:.3e})")
    return report
