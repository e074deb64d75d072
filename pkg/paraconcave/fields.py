"""
Gridded solutions: space-time fields and steady states.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from paraconcave.domain import SpaceGrid
from paraconcave.errors import DimensionMismatchError, InterpolationError, SolverError
from paraconcave.sources import SourceSpec

logger = logging.getLogger(__name__)

NONNEGATIVITY_TOLERANCE = 1e-12


@dataclass(eq=False)
class SpaceTimeField:
    """
    Values of u on grid lattice x stored times.

    `values` has shape (len(times), *grid.lattice_shape) and vanishes off the
    interior. Interpolation is multilinear in the coordinates (t^alpha, x).
    """
    grid: SpaceGrid
    times: np.ndarray
    values: np.ndarray = field(repr=False)
    scheme: str = "imex-backward-euler"
    dt: Optional[float] = None
    source: Optional[SourceSpec] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    _interpolators: Dict[float, RegularGridInterpolator] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise DimensionMismatchError("a field needs at least two time levels")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0.0):
            raise DimensionMismatchError("times must start at 0 and increase strictly")
        expected = (len(self.times),) + self.grid.lattice_shape
        if self.values.shape != expected:
            raise DimensionMismatchError(f"values have shape {self.values.shape}, expected {expected}")
        if self.dt is None:
            self.dt = float(np.max(np.diff(self.times)))

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def level_spacing(self) -> float:
        """Largest gap between stored time levels."""
        return float(np.max(np.diff(self.times)))

    @property
    def max_value(self) -> float:
        return float(np.max(np.abs(self.values)))

    def slice_at(self, t: float) -> np.ndarray:
        """Lattice values at time t, linear in t between stored levels."""
        if not 0.0 <= t <= self.T * (1.0 + 1e-12):
            raise InterpolationError(f"time {t} outside [0, {self.T}]")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.times) - 2)
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        w = min(max(w, 0.0), 1.0)
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]

    def node_values(self, t: Optional[float] = None) -> np.ndarray:
        """Values at active nodes at time t (default T)."""
        return self.slice_at(self.T if t is None else t)[self.grid.active]

    def interpolator(self, alpha: float = 1.0) -> RegularGridInterpolator:
        key = float(alpha)
        if key not in self._interpolators:
            taus = self.times ** key
            self._interpolators[key] = RegularGridInterpolator(
                (taus,) + tuple(self.grid.axes), self.values, method="linear", bounds_error=False, fill_value=None)
        return self._interpolators[key]

    def interpolate(self, points: np.ndarray, taus: np.ndarray, alpha: float = 1.0) -> np.ndarray:
        """
        Evaluate u at (points, t) with taus = t^alpha.

        Args:
            points: array (N, dimension)
            taus: array (N,) of transformed times
            alpha: exponent of the time transform

        Returns:
            Array (N,) of nonnegative values
        """
        points = np.asarray(points, dtype=float).reshape(len(taus), self.grid.dimension)
        taus = np.asarray(taus, dtype=float)
        tau_max = self.T ** alpha
        if np.any(taus < -1e-12) or np.any(taus > tau_max * (1.0 + 1e-12)):
            raise InterpolationError(f"transformed times outside [0, {tau_max}]")
        for k, ax in enumerate(self.grid.axes):
            if np.any(points[:, k] < ax[0] - 1e-12) or np.any(points[:, k] > ax[-1] + 1e-12):
                raise InterpolationError(f"points outside the lattice along axis {k}")
        query = np.column_stack([np.clip(taus, 0.0, tau_max), points])
        return np.maximum(self.interpolator(alpha)(query), 0.0)

    def validate_dirichlet(self, tolerance: float = NONNEGATIVITY_TOLERANCE) -> None:
        """Zero initial data, zero off the interior, nonnegative everywhere."""
        if np.any(self.values[0] != 0.0):
            raise SolverError("field does not vanish at t = 0")
        if np.any(self.values[:, ~self.grid.interior] != 0.0):
            raise SolverError("field does not vanish off the interior")
        if np.min(self.values) < -tolerance:
            raise SolverError(f"field has negative values down to {np.min(self.values):.3e}")

    def with_values(self, values: np.ndarray, **metadata) -> "SpaceTimeField":
        """Field on the same grid and times with new values."""
        return SpaceTimeField(self.grid, self.times.copy(), values, scheme=self.scheme, dt=self.dt,
                              source=None, metadata=dict(metadata))


@dataclass(eq=False)
class SteadyField:
    """Steady state v on the lattice, zero off the interior."""
    grid: SpaceGrid
    values: np.ndarray = field(repr=False)
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.lattice_shape:
            raise DimensionMismatchError(f"values have shape {self.values.shape}, expected {self.grid.lattice_shape}")

    @property
    def max_value(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def node_values(self) -> np.ndarray:
        return self.values[self.grid.active]

    def as_space_time(self, T: float = 1.0) -> SpaceTimeField:
        """Time-constant extension on [0, T]."""
        values = np.stack([self.values, self.values])
        return SpaceTimeField(self.grid, np.array([0.0, T]), values, scheme="steady", dt=T,
                              metadata={"time_constant": True})
