"""
Finite-difference solvers for du/dt = Lap u + f(x, t, u) with zero Dirichlet data.

Diffusion is advanced by backward Euler and the source is evaluated at the
previous time level:

    (I - dt L) u^{k+1} = u^k + dt f(t_k, u^k)

The matrix is factorized once per run. The first step is split into
`initial_substeps` substeps to resolve the initial layer.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve

from paraconcave.domain import ConvexDomain, SpaceGrid, build_grid
from paraconcave.errors import (
    ExponentUndefinedError,
    InterpolationError,
    MonotonicityError,
    OutsideDomainError,
    SolverError,
    SourceSpecError,
    StagnationError,
)
from paraconcave.fields import NONNEGATIVITY_TOLERANCE, SpaceTimeField, SteadyField
from paraconcave.sources import SourceSpec

logger = logging.getLogger(__name__)

SCHEME_NAME = "imex-backward-euler"
EPS_FLOOR = 1e-8
ORDERING_TOLERANCE = 1e-10


def laplacian(grid: SpaceGrid) -> sp.csr_matrix:
    """Second-order central Laplacian on the interior nodes, zero values off the interior."""
    n = grid.n_interior
    index = -np.ones(grid.lattice_shape, dtype=np.int64)
    index[grid.interior] = np.arange(n)
    positions = np.argwhere(grid.interior)
    inv_h2 = 1.0 / grid.h ** 2

    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, -2.0 * grid.dimension * inv_h2)]
    for axis in range(grid.dimension):
        for shift in (-1, 1):
            neighbor = positions.copy()
            neighbor[:, axis] += shift
            target = index[tuple(neighbor.T)]
            keep = target >= 0
            rows.append(np.arange(n)[keep])
            cols.append(target[keep])
            vals.append(np.full(int(keep.sum()), inv_h2))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _factorize(matrix: sp.spmatrix):
    try:
        return splu(matrix.tocsc())
    except RuntimeError as e:
        raise SolverError(f"factorization failed: {e}") from e


def _explicit_source_budget(src: SourceSpec) -> float:
    """Largest dt for which the explicit source step stays monotone."""
    if src.kind == "semilinear_regularized":
        return 1.0 / (src.gamma * src.eps ** (src.gamma - 1.0))
    return math.inf


def solve_parabolic(
    dom: ConvexDomain,
    src: SourceSpec,
    h: float,
    dt: float,
    T: float,
    *,
    save_every: int = 1,
    initial_substeps: int = 10,
    grid: Optional[SpaceGrid] = None,
) -> SpaceTimeField:
    """
    Solve the heat equation with source src on dom x (0, T], u = 0 on the parabolic boundary.

    Args:
        dom: convex domain
        src: declared source kind
        h: grid spacing
        dt: time step
        T: final time, rounded up to a whole number of steps
        save_every: store every k-th time level (the final level is always kept)
        initial_substeps: number of substeps for the first step
        grid: prebuilt grid for dom and h, reused across runs

    Returns:
        SpaceTimeField with metadata on clamped negatives and the distance to steady state
    """
    if not (dt > 0.0 and T > 0.0):
        raise SolverError(f"dt and T must be positive, got dt={dt}, T={T}")
    if dt > _explicit_source_budget(src):
        raise SolverError(f"dt={dt} exceeds the explicit source budget {_explicit_source_budget(src):.3e}")
    if src.kind == "semilinear_power":
        logger.warning("Unregularized u^gamma source from zero data stays on the trivial branch")
    save_every = max(1, int(save_every))
    grid = grid or build_grid(dom, h)
    n_steps = int(math.ceil(T / dt - 1e-9))
    if abs(n_steps * dt - T) > 1e-12 * T:
        logger.info(f"Final time rounded up from {T} to {n_steps * dt}")

    start = time.time()
    lap = laplacian(grid)
    identity = sp.identity(grid.n_interior, format="csr")
    step = _factorize(identity - dt * lap)
    substep_dt = dt / max(1, initial_substeps)
    substep = _factorize(identity - substep_dt * lap) if initial_substeps > 1 else step
    rate = src.bind(grid)

    saved = [k for k in range(n_steps + 1) if k % save_every == 0 or k == n_steps]
    values = np.zeros((len(saved),) + grid.lattice_shape)
    times = np.array(saved, dtype=float) * dt
    slot = 1

    u = np.zeros(grid.n_interior)
    clamped = 0
    worst_negative = 0.0
    for k in range(n_steps):
        t = k * dt
        if k == 0 and initial_substeps > 1:
            for j in range(initial_substeps):
                u = substep.solve(u + substep_dt * rate(j * substep_dt, u))
        else:
            u = step.solve(u + dt * rate(t, u))

        if not np.all(np.isfinite(u)):
            raise SolverError(f"non-finite values at t={t + dt:.6g}")
        lowest = float(u.min())
        if lowest < 0.0:
            if lowest < -NONNEGATIVITY_TOLERANCE:
                clamped += int(np.sum(u < -NONNEGATIVITY_TOLERANCE))
                worst_negative = min(worst_negative, lowest)
            u = np.maximum(u, 0.0)

        if slot < len(saved) and saved[slot] == k + 1:
            values[slot][grid.interior] = u
            slot += 1

    if clamped:
        logger.warning(f"Clamped {clamped} negative values (lowest {worst_negative:.3e})")

    field_ = SpaceTimeField(grid, times, values, scheme=SCHEME_NAME, dt=dt, source=src)
    half = field_.slice_at(field_.T / 2.0)
    top = field_.max_value
    steady_gap = float(np.max(np.abs(values[-1] - half))) / top if top > 0 else 0.0
    field_.metadata.update({
        "clamped": clamped,
        "worst_negative": worst_negative,
        "steady_gap": steady_gap,
        "save_every": save_every,
        "initial_substeps": initial_substeps,
        "n_steps": n_steps,
    })
    logger.info(
        f"Solved {src.kind} on {dom.shape}: {grid.n_interior} unknowns, {n_steps} steps, "
        f"max u={top:.4g}, steady gap={steady_gap:.2e} in {time.time() - start:.2f}s")
    return field_


def solve_semilinear_maximal(
    dom: ConvexDomain,
    gamma: float,
    h: float,
    dt: float,
    T: float,
    eps_sequence: Sequence[float],
    *,
    save_every: int = 1,
) -> SpaceTimeField:
    """
    Approximate the maximal solution of du/dt = Lap u + u^gamma by the (u + eps)^gamma problems.

    The returned field belongs to the smallest eps. Its metadata records the
    sequence, the ordering margins and the Cauchy gap between the last two
    solutions.
    """
    eps = [float(e) for e in eps_sequence]
    if len(eps) < 3:
        raise SourceSpecError("eps_sequence needs at least three values")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise SourceSpecError(f"eps_sequence must decrease strictly: {eps}")
    if eps[-1] < EPS_FLOOR:
        raise SourceSpecError(f"eps_sequence must stay above {EPS_FLOOR}")

    grid = build_grid(dom, h)
    previous: Optional[SpaceTimeField] = None
    ordering: List[float] = []
    cauchy_gap = math.nan
    for e in eps:
        current = solve_parabolic(dom, SourceSpec.semilinear_regularized(gamma, e), h, dt, T,
                                  save_every=save_every, grid=grid)
        if previous is not None:
            excess = float(np.max(current.values - previous.values))
            ordering.append(excess)
            if excess > ORDERING_TOLERANCE:
                raise MonotonicityError(
                    f"solution for eps={e} exceeds the previous one by {excess:.3e}")
            cauchy_gap = float(np.max(np.abs(current.values - previous.values)))
            logger.info(f"eps={e:.1e}: Cauchy gap {cauchy_gap:.3e}")
        previous = current

    previous.source = SourceSpec.semilinear_power(gamma)
    previous.metadata.update({
        "eps_sequence": eps,
        "ordering_excess": ordering,
        "cauchy_gap": cauchy_gap,
    })
    return previous


def solve_steady(
    dom: ConvexDomain,
    src: SourceSpec,
    h: float,
    *,
    damping: float = 0.9,
    tol: float = 1e-10,
    max_iter: int = 500,
    patience: int = 25,
) -> SteadyField:
    """
    Solve Lap v + f = 0 in dom with v = 0 on the boundary.

    Linear sources use one direct solve. Semilinear sources use the damped
    fixed point v <- (1 - damping) v + damping (-L)^{-1} f(v), started from
    the solution for f = 1, until |Lap v + f(v)|_inf < tol.
    """
    if not src.is_time_independent:
        raise SourceSpecError(f"steady problems need a time-independent source, got gamma={src.gamma}")
    grid = build_grid(dom, h)
    lap = laplacian(grid)
    values = np.zeros(grid.lattice_shape)

    if not src.is_semilinear:
        rhs = src.spatial_profile(grid)[grid.interior]
        v = spsolve((-lap).tocsc(), rhs)
        values[grid.interior] = v
        residual = float(np.max(np.abs(lap @ v + rhs))) if len(v) else 0.0
        return SteadyField(grid, values, residual=residual, iterations=1)

    rate = src.bind(grid)
    solver = _factorize(-lap)
    v = solver.solve(np.ones(grid.n_interior))
    best = math.inf
    stalled = 0
    for iteration in range(1, max_iter + 1):
        v = (1.0 - damping) * v + damping * solver.solve(rate(0.0, v))
        v = np.maximum(v, 0.0)
        residual = float(np.max(np.abs(lap @ v + rate(0.0, v))))
        logger.debug(f"Fixed point iteration {iteration}: residual {residual:.3e}")
        if residual < tol:
            values[grid.interior] = v
            logger.info(f"Steady {src.kind} converged in {iteration} iterations, residual {residual:.2e}")
            return SteadyField(grid, values, residual=residual, iterations=iteration)
        if residual < 0.999 * best:
            best = residual
            stalled = 0
        else:
            stalled += 1
            if stalled >= patience:
                raise StagnationError(f"fixed point stalled at residual {best:.3e} after {iteration} iterations")
    raise StagnationError(f"no convergence in {max_iter} iterations (residual {best:.3e})")


@dataclass
class MonotonicityReport:
    """Outcome of the test u(x, t_{k+1}) >= u(x, t_k) - tolerance."""
    passed: bool
    margin: float
    tolerance: float
    worst_node: Tuple[float, ...]
    worst_time: float

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "time-monotonicity",
            "verdict": self.verdict,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "worst_node": list(self.worst_node),
            "worst_time": self.worst_time,
        }


def time_monotonicity_check(u: SpaceTimeField, tolerance: Optional[float] = None) -> MonotonicityReport:
    """Minimum over nodes and consecutive stored levels of u(t_{k+1}) - u(t_k)."""
    if tolerance is None:
        tolerance = 1e-10 * u.max_value
    increments = np.diff(u.values, axis=0)
    flat = int(np.argmin(increments))
    margin = float(increments.flat[flat])
    level, *node = np.unravel_index(flat, increments.shape)
    location = tuple(float(ax[i]) for ax, i in zip(u.grid.axes, node))
    report = MonotonicityReport(
        passed=margin >= -tolerance,
        margin=margin,
        tolerance=float(tolerance),
        worst_node=location,
        worst_time=float(u.times[level + 1]),
    )
    logger.info(f"Time monotonicity {report.verdict}: margin {margin:.3e}")
    return report


@dataclass
class ScalingFit:
    """Least-squares fit log u(x* + nu rho, rho^(1/alpha)) = s log rho + c."""
    exponent: float
    intercept: float
    alpha: float
    rhos: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def max_admissible_p(self) -> float:
        """Boundary growth stays unbounded for every p below 1/s."""
        return 1.0 / self.exponent if self.exponent > 0 else math.inf

    def condition_ii_holds(self, p: float) -> bool:
        return p < self.max_admissible_p

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "boundary-exponent",
            "exponent": self.exponent,
            "intercept": self.intercept,
            "alpha": self.alpha,
            "max_admissible_p": self.max_admissible_p,
            "rhos": self.rhos.tolist(),
            "values": self.values.tolist(),
        }


def boundary_scaling_exponent(
    u: SpaceTimeField,
    x_star,
    y_star,
    alpha: float,
    rho_range: Optional[Tuple[float, float]] = None,
    n_samples: int = 9,
) -> ScalingFit:
    """
    Fit the growth exponent of u along the space-time curve rho -> (x* + nu rho, rho^(1/alpha)).

    nu points from x* towards y* (zero when they coincide) and rho ranges
    over [4h, 16h] unless rho_range is given. Values are interpolated
    linearly in t.
    """
    dom = u.grid.domain
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))
    direction = y_star - x_star
    norm = float(np.linalg.norm(direction))
    nu = direction / norm if norm > 0 else np.zeros_like(direction)

    lo, hi = rho_range or (4.0 * u.grid.h, 16.0 * u.grid.h)
    rhos = np.geomspace(lo, hi, n_samples)
    points = x_star[None, :] + rhos[:, None] * nu[None, :]
    if not np.all(dom.in_closure(points)):
        raise OutsideDomainError("scaling curve leaves the closed domain")
    times = rhos ** (1.0 / alpha)
    if times[-1] > u.T:
        raise InterpolationError(f"scaling curve needs t up to {times[-1]:.4g} but the field ends at {u.T:.4g}")

    values = u.interpolate(points, times, alpha=1.0)
    if np.any(values <= 0.0):
        raise ExponentUndefinedError(f"u vanishes at {int(np.sum(values <= 0.0))} sampled point(s)")
    slope, intercept = np.polyfit(np.log(rhos), np.log(values), 1)
    fit = ScalingFit(exponent=float(slope), intercept=float(intercept), alpha=alpha, rhos=rhos, values=values)
    logger.info(f"Boundary scaling exponent s={fit.exponent:.3f} (p < {fit.max_admissible_p:.3f})")
    return fit
