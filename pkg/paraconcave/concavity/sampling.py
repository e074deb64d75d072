"""
Sample sets for midpoint concavity tests.

Random triples come from a scrambled Sobol sequence with rejection to the
domain; a deterministic sweep adds axis-aligned pairs (same point at two
times, two points at the same time) with lambda in {1/4, 1/2, 3/4}.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from paraconcave.domain import ConvexDomain, SpaceGrid
from paraconcave.errors import EmptySampleError

logger = logging.getLogger(__name__)

LAMBDA_CLIP = 1e-3
SWEEP_LAMBDAS = (0.25, 0.5, 0.75)
SWEEP_POSITIONS = 17
SWEEP_LEVELS = 16
MAX_DRAW_ROUNDS = 64


@dataclass
class TripleSample:
    """Pairs of space-time points in transformed time tau = t^alpha, with weights lam."""
    x1: np.ndarray
    tau1: np.ndarray
    x2: np.ndarray
    tau2: np.ndarray
    lam: np.ndarray
    n_random: int = 0

    def __len__(self) -> int:
        return len(self.lam)

    @property
    def x_mid(self) -> np.ndarray:
        return (1.0 - self.lam)[:, None] * self.x1 + self.lam[:, None] * self.x2

    @property
    def tau_mid(self) -> np.ndarray:
        return (1.0 - self.lam) * self.tau1 + self.lam * self.tau2

    def take(self, index) -> "TripleSample":
        return TripleSample(self.x1[index], self.tau1[index], self.x2[index], self.tau2[index], self.lam[index])

    @classmethod
    def concatenate(cls, parts: List["TripleSample"]) -> "TripleSample":
        parts = [p for p in parts if len(p)]
        if not parts:
            raise EmptySampleError("no samples to combine")
        return cls(
            np.concatenate([p.x1 for p in parts]),
            np.concatenate([p.tau1 for p in parts]),
            np.concatenate([p.x2 for p in parts]),
            np.concatenate([p.tau2 for p in parts]),
            np.concatenate([p.lam for p in parts]),
            n_random=sum(p.n_random for p in parts),
        )


def _sobol_points(dom: ConvexDomain, n_samples: int, n_extra: int, seed: int):
    """n_samples rows of (x1, x2, extra...) with both points inside dom."""
    n = dom.dimension
    lo, hi = dom.bounding_box
    sampler = qmc.Sobol(d=2 * n + n_extra, scramble=True, seed=seed)
    m = max(4, int(math.ceil(math.log2(max(n_samples, 2) * 1.5))))
    accepted = []
    count = 0
    for round_ in range(MAX_DRAW_ROUNDS):
        raw = sampler.random_base2(m) if round_ == 0 else sampler.random(2 ** m)
        x1 = lo + raw[:, :n] * (hi - lo)
        x2 = lo + raw[:, n:2 * n] * (hi - lo)
        keep = dom.contains_points(x1) & dom.contains_points(x2)
        if keep.any():
            accepted.append(np.column_stack([x1[keep], x2[keep], raw[keep, 2 * n:]]))
            count += int(keep.sum())
        if count >= n_samples:
            break
    if count < n_samples:
        raise EmptySampleError(f"drew only {count} of {n_samples} admissible samples")
    rows = np.concatenate(accepted)[:n_samples]
    return rows[:, :n], rows[:, n:2 * n], rows[:, 2 * n:]


def _clip_lambda(raw: np.ndarray) -> np.ndarray:
    return np.clip(raw, LAMBDA_CLIP, 1.0 - LAMBDA_CLIP)


def sweep_lines(grid: SpaceGrid) -> List[np.ndarray]:
    """Per axis, interior nodes along the lattice line through the most central interior node."""
    interior = grid.interior_points
    depth = grid.distance[grid.interior]
    center = np.argwhere(grid.interior)[int(np.argmax(depth))]
    lines = []
    for axis in range(grid.dimension):
        index = [slice(None) if k == axis else int(center[k]) for k in range(grid.dimension)]
        mask = grid.interior[tuple(index)]
        coords = np.meshgrid(*[ax if k == axis else np.array([ax[center[k]]]) for k, ax in enumerate(grid.axes)],
                             indexing="ij")
        line = np.stack([c.ravel() for c in coords], axis=-1)[mask.ravel()]
        if len(line) > SWEEP_POSITIONS:
            line = line[np.unique(np.linspace(0, len(line) - 1, SWEEP_POSITIONS).round().astype(int))]
        lines.append(line)
    logger.debug(f"Sweep lines over {len(interior)} interior nodes: {[len(l) for l in lines]} positions")
    return lines


def sweep_levels(tau_lo: float, tau_hi: float) -> np.ndarray:
    levels = np.concatenate([np.linspace(tau_lo, tau_hi, SWEEP_LEVELS), np.geomspace(tau_lo, tau_hi, SWEEP_LEVELS)])
    return np.unique(levels)


def _pairs(count: int):
    i, j = np.triu_indices(count, k=1)
    return i, j


def _sweep(grid: SpaceGrid, levels: np.ndarray, time_pairs: bool) -> TripleSample:
    lams = np.asarray(SWEEP_LAMBDAS)
    parts = []
    lines = sweep_lines(grid)
    if time_pairs and len(levels) > 1:
        positions = np.unique(np.concatenate(lines), axis=0)
        i, j = _pairs(len(levels))
        x = np.repeat(positions, len(i) * len(lams), axis=0)
        tau1 = np.tile(np.repeat(levels[i], len(lams)), len(positions))
        tau2 = np.tile(np.repeat(levels[j], len(lams)), len(positions))
        lam = np.tile(lams, len(positions) * len(i))
        parts.append(TripleSample(x, tau1, x.copy(), tau2, lam))
    for line in lines:
        if len(line) < 2:
            continue
        i, j = _pairs(len(line))
        k = len(i) * len(lams)
        x1 = np.tile(np.repeat(line[i], len(lams), axis=0), (len(levels), 1))
        x2 = np.tile(np.repeat(line[j], len(lams), axis=0), (len(levels), 1))
        tau = np.repeat(levels, k)
        lam = np.tile(lams, len(i) * len(levels))
        parts.append(TripleSample(x1, tau, x2, tau.copy(), lam))
    if not parts:
        return TripleSample(np.empty((0, grid.dimension)), np.empty(0), np.empty((0, grid.dimension)),
                            np.empty(0), np.empty(0))
    return TripleSample.concatenate(parts)


def draw_triples(
    grid: SpaceGrid,
    tau_lo: float,
    tau_hi: float,
    n_samples: int,
    seed: int = 0,
    sweep: bool = True,
) -> TripleSample:
    """Random space-time triples with x1, x2 in the domain and tau in [tau_lo, tau_hi], plus the sweep."""
    if n_samples < 1 and not sweep:
        raise EmptySampleError("n_samples must be positive")
    if not tau_hi > tau_lo:
        raise EmptySampleError(f"empty time window [{tau_lo}, {tau_hi}]")
    parts = []
    if n_samples > 0:
        x1, x2, extra = _sobol_points(grid.domain, n_samples, 3, seed)
        tau1 = tau_lo + extra[:, 0] * (tau_hi - tau_lo)
        tau2 = tau_lo + extra[:, 1] * (tau_hi - tau_lo)
        parts.append(TripleSample(x1, tau1, x2, tau2, _clip_lambda(extra[:, 2]), n_random=n_samples))
    if sweep:
        parts.append(_sweep(grid, sweep_levels(tau_lo, tau_hi), time_pairs=True))
    return TripleSample.concatenate(parts)


def draw_slice_pairs(
    grid: SpaceGrid,
    tau: float,
    n_samples: int,
    seed: int = 0,
    sweep: bool = True,
) -> TripleSample:
    """Random pairs of points in one time slice, plus the spatial part of the sweep."""
    parts = []
    if n_samples > 0:
        x1, x2, extra = _sobol_points(grid.domain, n_samples, 1, seed)
        taus = np.full(n_samples, tau)
        parts.append(TripleSample(x1, taus, x2, taus.copy(), _clip_lambda(extra[:, 0]), n_random=n_samples))
    if sweep:
        parts.append(_sweep(grid, np.array([tau]), time_pairs=False))
    return TripleSample.concatenate(parts)


def draw_pairs_in_box(
    lo: np.ndarray,
    hi: np.ndarray,
    n_samples: int,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random pairs z1, z2 in the box [lo, hi] and weights lam."""
    d = len(lo)
    sampler = qmc.Sobol(d=2 * d + 1, scramble=True, seed=seed)
    raw = sampler.random_base2(max(1, int(math.ceil(math.log2(max(n_samples, 2))))))[:n_samples]
    z1 = lo + raw[:, :d] * (hi - lo)
    z2 = lo + raw[:, d:2 * d] * (hi - lo)
    return z1, z2, _clip_lambda(raw[:, 2 * d])
