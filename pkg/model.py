"""
Domain types for the ply partitioner

Offsets, widths and coordinates all share one normalized length unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient

class GeometryError(ValueError):
    """Raised for degenerate or invalid polygons"""

class ConfigError(ValueError):
    """Raised for inconsistent manufacturing or cost parameters"""

class Point2(NamedTuple):
    x: float
    y: float

class LineStd(NamedTuple):
    """Line a*x + b*y + c = 0 with a^2 + b^2 = 1"""
    a: float
    b: float
    c: float

def as_points(coords: Iterable[Sequence[float]]) -> Tuple[Point2, ...]:
    """
    Convert coordinate pairs to a tuple of Point2, rejecting non-finite values

    Args:
        coords: Iterable of (x, y) pairs

    Returns:
        Tuple[Point2, ...]: The points
    """
    points = []
    for xy in coords:
        x, y = float(xy[0]), float(xy[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GeometryError(f"Non-finite coordinate ({x}, {y})")
        points.append(Point2(x, y))
    return tuple(points)

def simple_ccw_polygon(coords: Iterable[Sequence[float]], what: str = "polygon") -> Tuple[Point2, ...]:
    """
    Validate a simple polygon and return its vertices in counter-clockwise order

    Args:
        coords: Vertex coordinates, open ring (first vertex not repeated)
        what: Name used in error messages

    Returns:
        Tuple[Point2, ...]: CCW vertices
    """
    points = list(as_points(coords))
    if len(points) >= 2 and points[0] == points[-1]:
        points = points[:-1]
    if len(points) < 3:
        raise GeometryError(f"{what} needs at least 3 vertices, got {len(points)}")

    shape = Polygon(points)
    if not shape.is_valid:
        raise GeometryError(f"{what} is not simple (self-intersecting or degenerate)")
    if shape.area <= 0.0:
        raise GeometryError(f"{what} has zero area")

    ring = orient(shape, sign=1.0).exterior.coords[:-1]
    if shape.exterior.is_ccw:
        return tuple(points)
    return as_points(ring)

@dataclass(frozen=True)
class Ply:
    """
    A flattened ply: simple CCW polygon, fiber angle in [0, pi), stack position

    The fiber direction is d = (cos t, sin t) and the transverse axis is
    d_perp = (-sin t, cos t). Seam offsets are measured along d_perp from the
    origin O, the vertex with the smallest d_perp projection (ties broken by
    the smallest projection onto d), so every offset is nonnegative.
    """

    id: str
    stack_index: int
    polygon: Tuple[Point2, ...]
    fiber_angle: float

    def __post_init__(self):
        if self.stack_index < 0:
            raise ConfigError(f"Ply {self.id}: stack_index must be >= 0")
        if not (0.0 <= self.fiber_angle < math.pi) or not math.isfinite(self.fiber_angle):
            raise ConfigError(f"Ply {self.id}: fiber_angle {self.fiber_angle} outside [0, pi)")
        object.__setattr__(self, "polygon", simple_ccw_polygon(self.polygon, f"Ply {self.id} polygon"))

    @cached_property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.fiber_angle), math.sin(self.fiber_angle)])

    @cached_property
    def normal(self) -> np.ndarray:
        return np.array([-math.sin(self.fiber_angle), math.cos(self.fiber_angle)])

    @cached_property
    def vertices(self) -> np.ndarray:
        return np.asarray(self.polygon, dtype=float)

    @cached_property
    def origin(self) -> Point2:
        across = self.vertices @ self.normal
        along = self.vertices @ self.direction
        # lexicographic: transverse projection first, then fiber projection
        best = min(range(len(self.polygon)), key=lambda k: (across[k], along[k]))
        return self.polygon[best]

    @cached_property
    def base(self) -> float:
        """Projection of the origin onto d_perp; c = -(base + offset)"""
        return float(np.dot(self.normal, self.origin))

    @cached_property
    def width(self) -> float:
        across = self.vertices @ self.normal
        return float(across.max() - across.min())

    @cached_property
    def shape(self) -> Polygon:
        return Polygon(self.polygon)

    @property
    def area(self) -> float:
        return float(self.shape.area)

    def offset_of(self, point: Sequence[float]) -> float:
        """Transverse offset of a point relative to the ply origin"""
        return float(np.dot(self.normal, point)) - self.base

    def point_at(self, offset: float) -> np.ndarray:
        """Point O + offset * d_perp"""
        return np.asarray(self.origin, dtype=float) + offset * self.normal

@dataclass(frozen=True)
class Seam:
    ply_id: str
    offset: float

    def __post_init__(self):
        if self.offset < 0.0:
            raise ConfigError(f"Seam on ply {self.ply_id}: negative offset {self.offset}")

@dataclass(frozen=True)
class StayOutZone:
    polygon: Tuple[Point2, ...]

    def __post_init__(self):
        object.__setattr__(self, "polygon", simple_ccw_polygon(self.polygon, "Stay-out zone"))

    @cached_property
    def shape(self) -> Polygon:
        return Polygon(self.polygon)

@dataclass(frozen=True)
class ManufacturingConfig:
    """
    Manufacturing requirements

    Thickness tolerance is given either as the ratio ``tolerance`` (delta) or
    explicitly as ``ply_count`` (M) and ``max_overlaps`` (N).
    """

    spool_width: float
    overlap_width: float
    min_subply_width: float = 0.0
    flimsy_min: float = 0.0
    small_min: float = 0.0
    tolerance: Optional[float] = 1.0
    ply_count: Optional[int] = None
    max_overlaps: Optional[int] = None
    base_overlaps: int = 2

    def __post_init__(self):
        if not self.spool_width > 0.0:
            raise ConfigError("spool_width must be > 0")
        if self.overlap_width < 0.0:
            raise ConfigError("overlap_width must be >= 0")
        if not self.overlap_width < self.spool_width:
            raise ConfigError("overlap_width must be smaller than spool_width")
        for name in ("min_subply_width", "flimsy_min", "small_min"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0")
        if self.min_subply_width > self.spool_width - self.overlap_width + 1e-12:
            raise ConfigError("min_subply_width must not exceed spool_width - overlap_width")
        if self.base_overlaps < 2:
            raise ConfigError("base_overlaps must be >= 2")
        explicit = self.ply_count is not None or self.max_overlaps is not None
        if explicit:
            if self.ply_count is None or self.max_overlaps is None:
                raise ConfigError("ply_count and max_overlaps must be given together")
            if not 1 <= self.max_overlaps <= self.ply_count:
                raise ConfigError("max_overlaps must lie in [1, ply_count]")
        elif self.tolerance is None or not 0.0 < self.tolerance <= 1.0:
            raise ConfigError("tolerance must lie in (0, 1]")

    @property
    def max_gap(self) -> float:
        """Largest seam gap allowed by the spool width, w_s - w_l"""
        return self.spool_width - self.overlap_width

    @property
    def half_overlap(self) -> float:
        return 0.5 * self.overlap_width

    def overlap_counts(self, layup_size: int) -> Tuple[int, int]:
        """
        Resolve (M, N) for a layup

        Args:
            layup_size: Number of plies in the layup

        Returns:
            Tuple[int, int]: Ply count M and maximum intersecting overlaps N
        """
        if self.ply_count is not None:
            return self.ply_count, self.max_overlaps
        total = max(1, layup_size)
        allowed = int(math.floor(self.tolerance * total + 1e-9))
        return total, min(total, max(self.base_overlaps, allowed))

@dataclass(frozen=True)
class CostParams:
    a_mat: float
    b_mat: float
    c_seam: float
    mean_subply_length: Optional[float] = None
    spool_min: Optional[float] = None
    spool_max: Optional[float] = None

    def __post_init__(self):
        for name in ("a_mat", "b_mat", "c_seam"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0")
        if self.mean_subply_length is not None and self.mean_subply_length < 0.0:
            raise ConfigError("mean_subply_length must be >= 0")
        if self.spool_min is not None and self.spool_max is not None and self.spool_min > self.spool_max:
            raise ConfigError("spool_min must not exceed spool_max")

    def unit_cost(self, spool_width: float) -> float:
        """Material cost per area, linear in the spool width"""
        return self.a_mat * spool_width + self.b_mat

@dataclass(frozen=True)
class Design:
    """
    Seam offsets for every ply, sorted ascending with the boundary seam at 0

    The objective is the local coverage objective: the negated sum of the
    last offset of each ply.
    """

    seams: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        clean: Dict[str, Tuple[float, ...]] = {}
        for ply_id in sorted(self.seams):
            offsets = tuple(float(x) for x in self.seams[ply_id])
            if any(b <= a for a, b in zip(offsets, offsets[1:])):
                raise ConfigError(f"Design: offsets on ply {ply_id} are not strictly increasing")
            clean[ply_id] = offsets
        object.__setattr__(self, "seams", clean)

    @property
    def objective(self) -> float:
        return -sum(offsets[-1] for offsets in self.seams.values() if offsets)

    def offsets(self, ply_id: str) -> Tuple[float, ...]:
        return self.seams.get(ply_id, ())

    def last_offset(self, ply_id: str) -> float:
        offsets = self.seams.get(ply_id, ())
        return offsets[-1] if offsets else 0.0

    def with_offsets(self, ply_id: str, offsets: Sequence[float]) -> "Design":
        seams = dict(self.seams)
        seams[ply_id] = tuple(offsets)
        return Design(seams)

    def merged(self, other: "Design") -> "Design":
        seams = dict(self.seams)
        seams.update(other.seams)
        return Design(seams)

    @property
    def seam_count(self) -> int:
        return sum(len(offsets) for offsets in self.seams.values())

    @property
    def interior_seam_count(self) -> int:
        return sum(max(0, len(offsets) - 1) for offsets in self.seams.values())

    def iter_seams(self) -> List[Seam]:
        return [Seam(ply_id, x) for ply_id, offsets in self.seams.items() for x in offsets]

    def key(self) -> Tuple:
        """Hashable identity used for deduplication and tie-breaking"""
        return tuple((ply_id, tuple(round(x, 9) for x in offsets)) for ply_id, offsets in self.seams.items())

def ply_width(ply: Ply) -> float:
    """
    Extent of the ply polygon along the fiber-transverse axis

    Args:
        ply: The ply

    Returns:
        float: max - min of the vertex projections onto d_perp
    """
    if ply.area <= 0.0:
        raise GeometryError(f"Ply {ply.id} is degenerate")
    return ply.width

def seam_to_line(ply: Ply, offset: float) -> LineStd:
    """
    Standard-form line of a seam: through O + offset * d_perp, along d

    Args:
        ply: The ply carrying the seam
        offset: Seam offset from the ply origin

    Returns:
        LineStd: (a, b) = d_perp, c = -(d_perp . O + offset)
    """
    a, b = float(ply.normal[0]), float(ply.normal[1])
    return LineStd(a, b, -(ply.base + offset))
