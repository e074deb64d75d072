"""
Declarative source terms f(x, t, u) for the supported problem families.

Sources never depend on the gradient of u. A SourceSpec is bound to a grid
once (`bind`) and the bound evaluator is then called on interior vectors at
every time step.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from paraconcave.domain import ConvexDomain, SpaceGrid
from paraconcave.errors import SourceSpecError

logger = logging.getLogger(__name__)

SOURCE_KINDS = (
    "constant",
    "dist_power",
    "time_weighted",
    "semilinear_power",
    "semilinear_regularized",
    "tabulated",
)


@dataclass(frozen=True)
class SpatialProfile:
    """Spatial factor of a time_weighted source: scale * dist(x, boundary)^exponent."""
    scale: float = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale >= 0.0):
            raise SourceSpecError(f"profile scale must be nonnegative, got {self.scale}")
        if not (math.isfinite(self.exponent) and self.exponent >= 0.0):
            raise SourceSpecError(f"profile exponent must be nonnegative, got {self.exponent}")

    @classmethod
    def constant(cls, value: float = 1.0) -> "SpatialProfile":
        return cls(scale=value, exponent=0.0)

    @property
    def concavity_exponent(self) -> float:
        """q such that the profile is q-concave: dist^e is (1/e)-concave on convex domains."""
        return math.inf if self.exponent == 0.0 else 1.0 / self.exponent

    def evaluate(self, distance: np.ndarray) -> np.ndarray:
        return self.scale * np.power(distance, self.exponent)

    def to_dict(self) -> Dict[str, Any]:
        return {"scale": self.scale, "exponent": self.exponent}


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """
    One of the supported source families.

    constant(c)                      f = c
    dist_power(d, gamma)             f = t^gamma dist(x)^d
    time_weighted(gamma, profile)    f = t^gamma profile(x)
    semilinear_power(gamma)          f = u^gamma
    semilinear_regularized(gamma, e) f = (u + e)^gamma
    tabulated(values)                f = values on the grid lattice
    """
    kind: str
    c: float = 0.0
    d: float = 0.0
    gamma: float = 0.0
    eps: float = 0.0
    profile: Optional[SpatialProfile] = None
    table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if callable(self.kind):
            raise SourceSpecError("general f(x, t, u, grad u) callbacks are not supported; use a declared kind")
        if self.kind not in SOURCE_KINDS:
            raise SourceSpecError(f"unknown source kind {self.kind!r}; expected one of {', '.join(SOURCE_KINDS)}")
        for name in ("c", "d", "gamma", "eps"):
            if not math.isfinite(getattr(self, name)):
                raise SourceSpecError(f"{name} must be finite")
        if self.kind == "constant" and self.c < 0.0:
            raise SourceSpecError(f"constant source must be nonnegative, got {self.c}")
        if self.kind in ("dist_power", "time_weighted") and not 0.0 <= self.gamma <= 0.5:
            raise SourceSpecError(f"time exponent gamma must lie in [0, 1/2], got {self.gamma}")
        if self.kind == "dist_power" and self.d < 0.0:
            raise SourceSpecError(f"distance exponent d must be nonnegative, got {self.d}")
        if self.kind == "time_weighted" and self.profile is None:
            object.__setattr__(self, "profile", SpatialProfile())
        if self.kind in ("semilinear_power", "semilinear_regularized") and not 0.0 < self.gamma < 1.0:
            raise SourceSpecError(f"semilinear gamma must lie in (0, 1), got {self.gamma}")
        if self.kind == "semilinear_regularized" and self.eps <= 0.0:
            raise SourceSpecError(f"regularization eps must be positive, got {self.eps}")
        if self.kind == "tabulated":
            if self.table is None:
                raise SourceSpecError("tabulated source needs values")
            table = np.asarray(self.table, dtype=float)
            if not np.all(np.isfinite(table)) or np.any(table < 0.0):
                raise SourceSpecError("tabulated source must be finite and nonnegative")
            table.setflags(write=False)
            object.__setattr__(self, "table", table)

    @classmethod
    def constant(cls, c: float) -> "SourceSpec":
        return cls("constant", c=float(c))

    @classmethod
    def dist_power(cls, d: float, gamma: float = 0.0) -> "SourceSpec":
        return cls("dist_power", d=float(d), gamma=float(gamma))

    @classmethod
    def time_weighted(cls, gamma: float, profile: Optional[SpatialProfile] = None) -> "SourceSpec":
        return cls("time_weighted", gamma=float(gamma), profile=profile or SpatialProfile())

    @classmethod
    def semilinear_power(cls, gamma: float) -> "SourceSpec":
        return cls("semilinear_power", gamma=float(gamma))

    @classmethod
    def semilinear_regularized(cls, gamma: float, eps: float) -> "SourceSpec":
        return cls("semilinear_regularized", gamma=float(gamma), eps=float(eps))

    @classmethod
    def tabulated(cls, values) -> "SourceSpec":
        return cls("tabulated", table=np.asarray(values, dtype=float))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SourceSpec":
        data = dict(data)
        kind = data.pop("kind", None)
        try:
            if kind == "constant":
                return cls.constant(data.get("c", 1.0))
            if kind == "dist_power":
                return cls.dist_power(data["d"], data.get("gamma", 0.0))
            if kind == "time_weighted":
                profile = data.get("profile")
                return cls.time_weighted(data.get("gamma", 0.0), SpatialProfile(**profile) if profile else None)
            if kind == "semilinear_power":
                return cls.semilinear_power(data["gamma"])
            if kind == "semilinear_regularized":
                return cls.semilinear_regularized(data["gamma"], data["eps"])
            if kind == "tabulated":
                return cls.tabulated(data["values"])
        except KeyError as e:
            raise SourceSpecError(f"{kind} source is missing {e.args[0]!r}") from None
        except TypeError as e:
            raise SourceSpecError(f"invalid {kind} parameters: {e}") from None
        raise SourceSpecError(f"unknown source kind {kind!r}; expected one of {', '.join(SOURCE_KINDS)}")

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        if self.kind == "dist_power":
            return {"kind": "dist_power", "d": self.d, "gamma": self.gamma}
        if self.kind == "time_weighted":
            return {"kind": "time_weighted", "gamma": self.gamma, "profile": self.profile.to_dict()}
        if self.kind == "semilinear_power":
            return {"kind": "semilinear_power", "gamma": self.gamma}
        if self.kind == "semilinear_regularized":
            return {"kind": "semilinear_regularized", "gamma": self.gamma, "eps": self.eps}
        return {"kind": "tabulated", "values": self.table.tolist()}

    @property
    def is_semilinear(self) -> bool:
        return self.kind in ("semilinear_power", "semilinear_regularized")

    @property
    def is_time_independent(self) -> bool:
        if self.kind in ("dist_power", "time_weighted"):
            return self.gamma == 0.0
        return True

    @property
    def spatial_concavity(self) -> Optional[float]:
        """
        q such that the spatial factor is q-concave, or None when unknown.

        Constants are +inf-concave and dist^d is (1/d)-concave on convex domains.
        """
        if self.kind == "constant":
            return math.inf
        if self.kind == "dist_power":
            return math.inf if self.d == 0.0 else 1.0 / self.d
        if self.kind == "time_weighted":
            return self.profile.concavity_exponent
        return None

    def _spatial(self, distance: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full_like(distance, self.c, dtype=float)
        if self.kind == "dist_power":
            return np.power(distance, self.d)
        if self.kind == "time_weighted":
            return self.profile.evaluate(distance)
        raise SourceSpecError(f"{self.kind} source has no closed-form spatial factor")

    def evaluate_at(self, dom: ConvexDomain, x, t, u) -> np.ndarray:
        """Pointwise f at arbitrary points in the closure; t and u broadcast against x."""
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.kind == "semilinear_power":
            return np.power(np.maximum(u, 0.0), self.gamma)
        if self.kind == "semilinear_regularized":
            return np.power(np.maximum(u, 0.0) + self.eps, self.gamma)
        if self.kind == "tabulated":
            raise SourceSpecError("tabulated sources are only defined on their grid")
        distance = dom.boundary_distances(x)
        values = self._spatial(distance)
        if self.kind in ("dist_power", "time_weighted"):
            values = values * np.power(t, self.gamma)
        return np.broadcast_to(values, np.broadcast_shapes(values.shape, t.shape, u.shape)).astype(float)

    def spatial_profile(self, grid: SpaceGrid) -> np.ndarray:
        """Time-independent spatial factor on the lattice."""
        if self.kind == "tabulated":
            if self.table.shape != grid.lattice_shape:
                raise SourceSpecError(f"tabulated shape {self.table.shape} does not match lattice {grid.lattice_shape}")
            return np.asarray(self.table)
        return self._spatial(grid.distance)

    def bind(self, grid: SpaceGrid) -> Callable[[float, np.ndarray], np.ndarray]:
        """Evaluator f(t, u) over interior vectors of grid."""
        if self.kind == "semilinear_power":
            gamma = self.gamma
            return lambda t, u: np.power(np.maximum(u, 0.0), gamma)
        if self.kind == "semilinear_regularized":
            gamma, eps = self.gamma, self.eps
            return lambda t, u: np.power(np.maximum(u, 0.0) + eps, gamma)

        base = self.spatial_profile(grid)[grid.interior].copy()
        if self.is_time_independent:
            return lambda t, u: base
        gamma = self.gamma
        return lambda t, u: base * t ** gamma
