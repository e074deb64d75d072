"""
alpha-parabolically p-concave envelopes of gridded fields.

Both envelopes work on the transformed cylinder: v(x, tau) = u(x, tau^(1/alpha))^p
sampled on a lattice uniform in x and tau. The full envelope is the upper
concave hull of the graph of v; the lambda-envelope maximizes the weighted
mean sum lam_i v(z_i) over tuples whose lam-combination is the node.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from paraconcave.errors import DimensionMismatchError, ExponentDomainError
from paraconcave.fields import SpaceTimeField
from paraconcave.means import WeightVector

logger = logging.getLogger(__name__)

HULL_TOLERANCE = 1e-9
DEFAULT_HULL_LEVELS = 96
DEFAULT_SEARCH_LEVELS = 48
PLANE_CHUNK = 2048
SEARCH_CHUNK = 256


@dataclass
class EnvelopeResult:
    """Envelope values on the grid lattice at the transformed time levels."""
    u: SpaceTimeField = field(repr=False)
    alpha: float
    p: float
    times: np.ndarray = field(repr=False)
    base: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)
    method: str = "hull"
    support_points: int = 0
    infeasible: int = 0
    infeasible_mask: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def gap(self) -> np.ndarray:
        return self.envelope - self.base

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gap))

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gap))

    @property
    def relative_gap(self) -> float:
        top = float(np.max(self.base))
        return self.max_gap / top if top > 0 else 0.0

    @property
    def gap_location(self) -> Tuple[Tuple[float, ...], float]:
        flat = int(np.argmax(self.gap))
        level, *node = np.unravel_index(flat, self.gap.shape)
        return tuple(float(ax[i]) for ax, i in zip(self.u.grid.axes, node)), float(self.times[level])

    @property
    def infeasible_locations(self) -> List[Tuple[Tuple[float, ...], float]]:
        """(x, t) of the nodes where no tuple was feasible."""
        if self.infeasible_mask is None:
            return []
        return [(tuple(float(ax[i]) for ax, i in zip(self.u.grid.axes, node)), float(self.times[level]))
                for level, *node in np.argwhere(self.infeasible_mask)]

    def passes(self, relative_tolerance: float) -> bool:
        return self.relative_gap <= relative_tolerance

    def as_field(self) -> SpaceTimeField:
        """The envelope as a field on its own time levels."""
        return SpaceTimeField(self.u.grid, self.times.copy(), self.envelope.copy(), scheme=f"envelope-{self.method}",
                              dt=self.u.dt, metadata={"envelope": self.method, "alpha": self.alpha, "p": self.p})

    def to_dict(self) -> Dict[str, Any]:
        x, t = self.gap_location
        return {
            "kind": "envelope",
            "method": self.method,
            "alpha": self.alpha,
            "p": self.p,
            "max_gap": self.max_gap,
            "relative_gap": self.relative_gap,
            "gap_location": {"x": list(x), "t": t},
            "levels": len(self.times),
            "support_points": self.support_points,
            "infeasible_nodes": self.infeasible,
            "infeasible_at": [{"x": list(x), "t": t} for x, t in self.infeasible_locations],
        }


def _validate(alpha: float, p: float) -> None:
    if not 0.0 < p <= 1.0:
        raise ExponentDomainError(f"envelopes are computed for p in (0, 1], got {p}")
    if not 0.0 < alpha <= 1.0:
        raise ExponentDomainError(f"envelopes are computed for alpha in (0, 1], got {alpha}")


def transformed_levels(u: SpaceTimeField, alpha: float, n_levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform tau levels on [0, T^alpha] and u there, linear in tau between stored levels."""
    stored = u.times ** alpha
    taus = np.linspace(0.0, stored[-1], n_levels)
    k = np.clip(np.searchsorted(stored, taus, side="right") - 1, 0, len(stored) - 2)
    w = np.clip((taus - stored[k]) / (stored[k + 1] - stored[k]), 0.0, 1.0)
    shape = (-1,) + (1,) * u.grid.dimension
    values = (1.0 - w).reshape(shape) * u.values[k] + w.reshape(shape) * u.values[k + 1]
    values[:, ~u.grid.closure] = 0.0
    return taus, np.maximum(values, 0.0)


def _exact(u: SpaceTimeField, alpha: float, p: float, taus: np.ndarray, base: np.ndarray,
           method: str) -> EnvelopeResult:
    return EnvelopeResult(u, alpha, p, taus ** (1.0 / alpha), base, base.copy(), method=method)


def full_envelope(u: SpaceTimeField, alpha: float, p: float, n_levels: int = DEFAULT_HULL_LEVELS) -> EnvelopeResult:
    """
    Smallest alpha-parabolically p-concave majorant of u on the lattice.

    Computed as the upper hull of the points (x, tau, u^p) over closure nodes,
    which uses up to n + 2 support points per value.
    """
    _validate(alpha, p)
    grid = u.grid
    taus, base = transformed_levels(u, alpha, n_levels)
    w = base ** p
    scale = float(w.max())
    if scale == 0.0 or float(np.ptp(w[:, grid.closure])) <= HULL_TOLERANCE * scale:
        return _exact(u, alpha, p, taus, base, "hull")

    nodes = grid.lattice_points[grid.closure.ravel()]
    n_nodes = len(nodes)
    coords = np.column_stack([np.tile(nodes, (len(taus), 1)), np.repeat(taus, n_nodes)])
    lo = coords.min(axis=0)
    span = np.where(np.ptp(coords, axis=0) > 0, np.ptp(coords, axis=0), 1.0)
    base_coords = (coords - lo) / span
    heights = w[:, grid.closure].ravel() / scale
    try:
        hull = ConvexHull(np.column_stack([base_coords, heights]))
    except QhullError as e:
        logger.warning(f"Degenerate hull, treating the field as exactly concave: {str(e).splitlines()[0]}")
        return _exact(u, alpha, p, taus, base, "hull")

    normals = hull.equations[:, :-1]
    offsets = hull.equations[:, -1]
    upper = normals[:, -1] > HULL_TOLERANCE
    a = normals[upper, :-1]
    c = normals[upper, -1]
    d = offsets[upper]
    env = np.empty_like(heights)
    for start in range(0, len(heights), PLANE_CHUNK):
        chunk = base_coords[start:start + PLANE_CHUNK]
        planes = -(chunk @ a.T + d[None, :]) / c[None, :]
        env[start:start + PLANE_CHUNK] = planes.min(axis=1)
    env = np.maximum(env, heights)

    envelope = np.zeros_like(base)
    envelope[:, grid.closure] = (env * scale).reshape(len(taus), n_nodes) ** (1.0 / p)
    result = EnvelopeResult(u, alpha, p, taus ** (1.0 / alpha), base, envelope, method="hull",
                            support_points=grid.dimension + 2)
    logger.info(f"Full envelope alpha={alpha} p={p}: {int(upper.sum())} upper facets, "
                f"relative gap {result.relative_gap:.3e}")
    return result


class _UniformLattice:
    """Multilinear interpolation on the uniform (tau, x...) lattice."""

    def __init__(self, taus: np.ndarray, axes, values: np.ndarray):
        self.axes = (taus,) + tuple(axes)
        self.origin = np.array([ax[0] for ax in self.axes])
        self.step = np.array([ax[1] - ax[0] for ax in self.axes])
        self.shape = np.array(values.shape)
        self.values = values

    def __call__(self, z: np.ndarray) -> np.ndarray:
        pos = (z - self.origin) / self.step
        base = np.clip(np.floor(pos).astype(np.int64), 0, self.shape - 2)
        frac = np.clip(pos - base, 0.0, 1.0)
        out = np.zeros(len(z))
        dims = z.shape[1]
        for corner in range(2 ** dims):
            bits = np.array([(corner >> k) & 1 for k in range(dims)])
            weight = np.prod(np.where(bits, frac, 1.0 - frac), axis=1)
            out += weight * self.values[tuple((base + bits).T)]
        return out


def lambda_envelope(
    u: SpaceTimeField,
    alpha: float,
    p: float,
    lam: WeightVector,
    n_levels: int = DEFAULT_SEARCH_LEVELS,
    stride: int = 4,
    max_tuples: int = 4096,
    max_sweeps: int = 20,
    seed: int = 0,
) -> EnvelopeResult:
    """
    Envelope over tuples (z_1, ..., z_m) with sum lam_i z_i equal to the node in (x, tau).

    The first m - 1 points run over lattice nodes at the given stride, the
    last one is determined by the constraint and evaluated by multilinear
    interpolation. The best tuple per node is then refined by coordinate
    descent at stride 1. Nodes with no feasible tuple keep u; they are counted
    and flagged in infeasible_mask.
    """
    _validate(alpha, p)
    grid = u.grid
    dom = grid.domain
    weights = lam.as_array()
    if lam.size < 2:
        raise DimensionMismatchError("lambda needs at least two weights")
    if lam.size != grid.dimension + 1:
        logger.info(f"Using {lam.size} support points in dimension {grid.dimension}")
    free = lam.size - 1

    taus, base = transformed_levels(u, alpha, n_levels)
    w = base ** p
    lattice = _UniformLattice(taus, grid.axes, w)
    tau_max = taus[-1]

    index_grids = np.meshgrid(*[np.arange(len(ax)) for ax in lattice.axes], indexing="ij")
    all_index = np.stack([g.ravel() for g in index_grids], axis=-1)
    valid = np.broadcast_to(grid.closure, w.shape).ravel()
    node_index = all_index[valid]
    node_z = lattice.origin + node_index * lattice.step
    node_w = w.reshape(-1)[valid]

    on_stride = np.all(node_index % stride == 0, axis=1) | (node_index[:, 0] == len(taus) - 1)
    cand_index = node_index[on_stride]
    cand_z = node_z[on_stride]
    cand_w = node_w[on_stride]
    if free == 1:
        tuples = np.arange(len(cand_z))[:, None]
    else:
        rng = np.random.default_rng(seed)
        tuples = rng.integers(0, len(cand_z), size=(max_tuples, free))

    def evaluate(targets: np.ndarray, z_free: np.ndarray, w_free: np.ndarray):
        """Weighted sums for targets (B, d) and free points (B, K, free, d)."""
        partial = np.einsum("i,bkid->bkd", weights[:free], z_free)
        z_last = (targets[:, None, :] - partial) / weights[-1]
        flat = z_last.reshape(-1, z_last.shape[-1])
        ok = (flat[:, 0] >= -1e-12) & (flat[:, 0] <= tau_max * (1 + 1e-12)) & dom.in_closure(flat[:, 1:])
        for k, ax in enumerate(grid.axes):
            ok &= (flat[:, k + 1] >= ax[0] - 1e-12) & (flat[:, k + 1] <= ax[-1] + 1e-12)
        vals = np.full(len(flat), -np.inf)
        if ok.any():
            vals[ok] = lattice(flat[ok])
        total = np.einsum("i,bki->bk", weights[:free], w_free) + weights[-1] * vals.reshape(z_last.shape[:2])
        return total

    best = node_w.copy()
    best_free = np.repeat(node_index[:, None, :], free, axis=1)
    feasible = np.zeros(len(node_z), dtype=bool)
    for start in range(0, len(node_z), SEARCH_CHUNK):
        sl = slice(start, start + SEARCH_CHUNK)
        targets = node_z[sl]
        z_free = np.broadcast_to(cand_z[tuples][None], (len(targets),) + cand_z[tuples].shape)
        w_free = np.broadcast_to(cand_w[tuples][None], (len(targets),) + cand_w[tuples].shape)
        total = evaluate(targets, z_free, w_free)
        feasible[sl] = np.isfinite(total).any(axis=1)
        pick = np.argmax(total, axis=1)
        value = total[np.arange(len(targets)), pick]
        improve = value > best[sl]
        best[sl] = np.where(improve, value, best[sl])
        chosen = cand_index[tuples[pick]]
        best_free[sl] = np.where(improve[:, None, None], chosen, best_free[sl])

    shape = np.array(w.shape)
    closure_flat = np.broadcast_to(grid.closure, w.shape)
    for sweep in range(max_sweeps):
        improved = 0
        for i in range(free):
            for coord in range(len(shape)):
                for sign in (-1, 1):
                    proposal = best_free.copy()
                    proposal[:, i, coord] += sign
                    inside = np.all((proposal[:, i] >= 0) & (proposal[:, i] < shape), axis=1)
                    idx = np.clip(proposal[:, i], 0, shape - 1)
                    inside &= closure_flat[tuple(idx.T)]
                    if not inside.any():
                        continue
                    rows = np.flatnonzero(inside)
                    z_free = lattice.origin + proposal[rows] * lattice.step
                    w_free = w[tuple(proposal[rows].reshape(-1, len(shape)).T)].reshape(len(rows), free)
                    total = evaluate(node_z[rows], z_free[:, None], w_free[:, None])[:, 0]
                    gain = total > best[rows] + HULL_TOLERANCE * max(float(w.max()), 1e-300)
                    if gain.any():
                        hit = rows[gain]
                        best[hit] = total[gain]
                        best_free[hit] = proposal[hit]
                        feasible[hit] = True
                        improved += int(gain.sum())
        logger.debug(f"Refinement sweep {sweep + 1}: {improved} improvements")
        if not improved:
            break

    envelope = np.zeros_like(base)
    env_flat = envelope.reshape(-1)
    env_flat[np.flatnonzero(valid)] = np.maximum(best, node_w) ** (1.0 / p)
    infeasible = int((~feasible).sum())
    mask = np.zeros(w.shape, dtype=bool)
    mask.reshape(-1)[np.flatnonzero(valid)] = ~feasible
    result = EnvelopeResult(u, alpha, p, taus ** (1.0 / alpha), base, envelope, method="lambda",
                            support_points=lam.size, infeasible=infeasible, infeasible_mask=mask)
    logger.info(f"Lambda envelope alpha={alpha} p={p} lam={lam.weights}: relative gap "
                f"{result.relative_gap:.3e}, {infeasible} infeasible nodes")
    return result


def compare_envelopes(u: SpaceTimeField, alpha: float, p: float, n_levels: int = DEFAULT_SEARCH_LEVELS) -> Dict[str, Any]:
    """Measured difference between the hull envelope and the uniform-weight lambda-envelope."""
    grid = u.grid
    hull = full_envelope(u, alpha, p, n_levels=n_levels)
    search = lambda_envelope(u, alpha, p, WeightVector.uniform(grid.dimension + 1), n_levels=n_levels)
    difference = hull.envelope - search.envelope
    return {
        "hull_relative_gap": hull.relative_gap,
        "lambda_relative_gap": search.relative_gap,
        "hull_above_lambda": float(np.max(difference)),
        "lambda_above_hull": float(np.max(-difference)),
        "support_points": {"hull": hull.support_points, "lambda": search.support_points},
    }
