"""
Bounded convex domains in dimension 1 and 2 and their finite-difference grids.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from paraconcave.errors import (
    DimensionMismatchError,
    DomainError,
    GridTooCoarseError,
    OutsideDomainError,
)

logger = logging.getLogger(__name__)

BOUNDARY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ConvexDomain:
    """
    Bounded convex domain: an interval, a disk or a convex polygon.

    Polygon vertices are stored counterclockwise; clockwise input is reoriented.
    """
    shape: str
    a: float = 0.0
    b: float = 1.0
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    vertices: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.shape == "interval":
            if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
                raise DomainError(f"interval needs a < b, got ({self.a}, {self.b})")
        elif self.shape == "disk":
            if not (math.isfinite(self.radius) and self.radius > 0.0):
                raise DomainError(f"disk radius must be positive, got {self.radius}")
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))
            if len(self.center) != 2:
                raise DomainError("disk center must be a 2D point")
        elif self.shape == "polygon":
            object.__setattr__(self, "vertices", _normalize_polygon(self.vertices))
        else:
            raise DomainError(f"unknown domain shape: {self.shape!r}")

    @classmethod
    def interval(cls, a: float, b: float) -> "ConvexDomain":
        return cls("interval", a=float(a), b=float(b))

    @classmethod
    def disk(cls, center: Sequence[float], radius: float) -> "ConvexDomain":
        return cls("disk", center=tuple(center), radius=float(radius))

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]]) -> "ConvexDomain":
        return cls("polygon", vertices=tuple(tuple(float(c) for c in v) for v in vertices))

    @classmethod
    def unit_square(cls) -> "ConvexDomain":
        return cls.polygon([(0, 0), (1, 0), (1, 1), (0, 1)])

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConvexDomain":
        data = dict(data)
        shape = data.pop("shape", None)
        try:
            if shape == "interval":
                return cls.interval(data.pop("a"), data.pop("b"))
            if shape == "disk":
                return cls.disk(data.pop("center"), data.pop("radius"))
            if shape == "polygon":
                return cls.polygon(data.pop("vertices"))
        except KeyError as e:
            raise DomainError(f"{shape} domain is missing {e.args[0]!r}") from None
        except (TypeError, ValueError) as e:
            raise DomainError(f"invalid {shape} parameters: {e}") from None
        raise DomainError(f"unknown domain shape: {shape!r}")

    def to_dict(self) -> Dict[str, Any]:
        if self.shape == "interval":
            return {"shape": "interval", "a": self.a, "b": self.b}
        if self.shape == "disk":
            return {"shape": "disk", "center": list(self.center), "radius": self.radius}
        return {"shape": "polygon", "vertices": [list(v) for v in self.vertices]}

    @property
    def dimension(self) -> int:
        return 1 if self.shape == "interval" else 2

    @property
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.shape == "interval":
            return np.array([self.a]), np.array([self.b])
        if self.shape == "disk":
            c = np.asarray(self.center)
            return c - self.radius, c + self.radius
        v = np.asarray(self.vertices)
        return v.min(axis=0), v.max(axis=0)

    @property
    def inradius(self) -> float:
        if self.shape == "interval":
            return 0.5 * (self.b - self.a)
        if self.shape == "disk":
            return self.radius
        return _chebyshev_disk(np.asarray(self.vertices))[1]

    @property
    def inner_center(self) -> np.ndarray:
        """Center of the largest inscribed ball."""
        if self.shape == "interval":
            return np.array([0.5 * (self.a + self.b)])
        if self.shape == "disk":
            return np.asarray(self.center, dtype=float)
        return _chebyshev_disk(np.asarray(self.vertices))[0]

    def _as_points(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if self.dimension == 1 and pts.ndim <= 1 and pts.size >= 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts.reshape(-1, 1)
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.dimension:
            raise DimensionMismatchError(
                f"{self.shape} is {self.dimension}-dimensional, got points of dimension {pts.shape[-1]}")
        return pts

    def signed_distance(self, x) -> np.ndarray:
        """Positive inside, negative outside. Exact inside for all shapes."""
        pts = self._as_points(x)
        if self.shape == "interval":
            return np.minimum(pts[:, 0] - self.a, self.b - pts[:, 0])
        if self.shape == "disk":
            return self.radius - np.linalg.norm(pts - np.asarray(self.center), axis=1)
        v = np.asarray(self.vertices)
        edges = np.roll(v, -1, axis=0) - v
        lengths = np.linalg.norm(edges, axis=1)
        rel = pts[:, None, :] - v[None, :, :]
        cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
        return (cross / lengths[None, :]).min(axis=1)

    def contains_points(self, x) -> np.ndarray:
        return self.signed_distance(x) > BOUNDARY_TOLERANCE

    def in_closure(self, x) -> np.ndarray:
        return self.signed_distance(x) >= -BOUNDARY_TOLERANCE

    def boundary_distances(self, x) -> np.ndarray:
        sd = self.signed_distance(x)
        if np.any(sd < -BOUNDARY_TOLERANCE):
            raise OutsideDomainError(f"{int(np.sum(sd < -BOUNDARY_TOLERANCE))} point(s) outside the closed {self.shape}")
        return np.maximum(sd, 0.0)


def _normalize_polygon(vertices) -> Tuple[Tuple[float, float], ...]:
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise DomainError("polygon needs at least three 2D vertices")
    if not np.all(np.isfinite(v)):
        raise DomainError("polygon vertices must be finite")
    edges = np.roll(v, -1, axis=0) - v
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    area = 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
    if abs(area) <= BOUNDARY_TOLERANCE:
        raise DomainError("polygon is degenerate (zero area)")
    if not (np.all(cross >= -BOUNDARY_TOLERANCE) or np.all(cross <= BOUNDARY_TOLERANCE)):
        raise DomainError("polygon is not convex")
    if area < 0:
        logger.debug("Reorienting clockwise polygon")
        v = v[::-1]
    return tuple((float(x), float(y)) for x, y in v)


def _chebyshev_disk(v: np.ndarray) -> Tuple[np.ndarray, float]:
    """Center and radius of the largest inscribed disk, as a linear program in (cx, cy, r)."""
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    # inward distance of c to edge i: (e_x (c_y - v_y) - e_y (c_x - v_x)) / |e| >= r
    A = np.column_stack([edges[:, 1] / lengths, -edges[:, 0] / lengths, np.ones(len(v))])
    b = (edges[:, 1] * v[:, 0] - edges[:, 0] * v[:, 1]) / lengths
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A, b_ub=b, bounds=[(None, None), (None, None), (0, None)],
                  method="highs")
    if not res.success:
        raise DomainError(f"inradius computation failed: {res.message}")
    return np.asarray(res.x[:2], dtype=float), float(res.x[2])


def contains(dom: ConvexDomain, x) -> bool:
    """True iff x lies in the open domain; points within 1e-12 of the boundary are excluded."""
    pts = dom._as_points(x)
    if len(pts) != 1:
        raise DimensionMismatchError("contains expects a single point")
    return bool(dom.contains_points(pts)[0])


def boundary_distance(dom: ConvexDomain, x) -> float:
    """Euclidean distance from x in the closure to the boundary."""
    pts = dom._as_points(x)
    if len(pts) != 1:
        raise DimensionMismatchError("boundary_distance expects a single point")
    return float(dom.boundary_distances(pts)[0])


@dataclass(frozen=True, eq=False)
class SpaceGrid:
    """
    Uniform lattice over the bounding box, clipped to the domain.

    `active` marks the nodes kept by the discretization: lattice points in the
    closure plus outside points that close the 5-point stencil of an interior
    node (zero Dirichlet value is imposed there). Field arrays are stored on
    the full lattice and vanish off the interior.
    """
    domain: ConvexDomain
    h: float
    axes: Tuple[np.ndarray, ...]
    active: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    closure: np.ndarray = field(repr=False)
    distance: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def lattice_shape(self) -> Tuple[int, ...]:
        return tuple(len(ax) for ax in self.axes)

    @property
    def lattice_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def nodes(self) -> np.ndarray:
        """Coordinates of the active nodes, shape (n_nodes, dimension)."""
        return self.lattice_points[self.active.ravel()]

    @property
    def interior_mask(self) -> np.ndarray:
        """Interior flag per active node."""
        return self.interior[self.active]

    @property
    def node_distance(self) -> np.ndarray:
        """Boundary distance per active node."""
        return self.distance[self.active]

    @property
    def n_nodes(self) -> int:
        return int(self.active.sum())

    @property
    def n_interior(self) -> int:
        return int(self.interior.sum())

    @property
    def interior_points(self) -> np.ndarray:
        return self.lattice_points[self.interior.ravel()]

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dimension


def build_grid(dom: ConvexDomain, h: float) -> SpaceGrid:
    """
    Lattice of spacing h clipped to dom.

    1D grids place nodes on both endpoints (h is adjusted to divide the
    interval). 2D lattices start at the lower-left corner of the bounding box
    and are padded by one node so every interior stencil stays on the lattice.
    """
    if not (math.isfinite(h) and h > 0.0):
        raise GridTooCoarseError(f"grid spacing must be positive, got {h}")
    inradius = dom.inradius
    if h > inradius * (1.0 + 1e-12):
        raise GridTooCoarseError(f"h={h} exceeds the inradius {inradius:.6g} of the {dom.shape}")
    if h > inradius / 4.0:
        logger.warning(f"Coarse grid: h={h} is above a quarter of the inradius {inradius:.6g}")

    lo, hi = dom.bounding_box
    if dom.dimension == 1:
        n_cells = max(1, int(round((hi[0] - lo[0]) / h)))
        effective = (hi[0] - lo[0]) / n_cells
        if abs(effective - h) > 1e-12 * max(1.0, h):
            logger.info(f"Adjusted spacing from {h} to {effective} to fit the interval")
        h = effective
        axes = (np.linspace(lo[0], hi[0], n_cells + 1),)
    else:
        axes = tuple(
            lo[k] + h * np.arange(-1, int(math.floor((hi[k] - lo[k]) / h + 1e-9)) + 2)
            for k in range(dom.dimension)
        )

    shape = tuple(len(ax) for ax in axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    sd = dom.signed_distance(points).reshape(shape)
    interior = sd > BOUNDARY_TOLERANCE
    closure = sd >= -BOUNDARY_TOLERANCE

    ring = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        for shift in (-1, 1):
            ring |= np.roll(interior, shift, axis=axis)
    active = closure | ring

    if not interior.any():
        raise GridTooCoarseError(f"no interior node at h={h}")

    grid = SpaceGrid(
        domain=dom,
        h=float(h),
        axes=axes,
        active=active,
        interior=interior,
        closure=closure,
        distance=np.where(closure, np.maximum(sd, 0.0), 0.0),
    )
    logger.debug(f"Built {dom.shape} grid: h={h:.6g}, {grid.n_nodes} nodes, {grid.n_interior} interior")
    return grid
