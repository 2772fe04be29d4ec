"""
Planar geometry for the ply partitioner: projections, seam lines, overlap
strips, polygon clipping and the triple-overlap oracle
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from shapely.geometry import LineString, MultiPolygon, Polygon, GeometryCollection
from shapely.geometry.base import BaseGeometry
from shapely.ops import polygonize, unary_union

import config
from model import GeometryError, LineStd, Ply, Point2, as_points, seam_to_line

PolygonLike = Union[Sequence[Sequence[float]], BaseGeometry]

class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo

def merge_intervals(intervals: Iterable[Interval]) -> List[Interval]:
    """
    Merge overlapping or touching intervals

    Args:
        intervals: Intervals in any order

    Returns:
        List[Interval]: Disjoint intervals sorted ascending
    """
    merged: List[Interval] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1].hi:
            if hi > merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, hi)
        else:
            merged.append(Interval(lo, hi))
    return merged

def subtract_intervals(window: Interval, prohibited: Iterable[Interval], min_length: float = 1e-12) -> List[Interval]:
    """
    Remove open prohibited intervals from a closed window

    Prohibited intervals are open, so a remaining piece may end exactly on a
    prohibited bound. Pieces shorter than ``min_length`` are dropped.

    Args:
        window: Closed window [lo, hi]
        prohibited: Open intervals (lo, hi) to remove
        min_length: Shortest piece worth keeping

    Returns:
        List[Interval]: Remaining closed pieces sorted ascending
    """
    if window.hi < window.lo:
        return []
    pieces: List[Interval] = []
    cursor = window.lo
    for lo, hi in merge_intervals(p for p in prohibited if p.hi > p.lo):
        if hi <= cursor:
            continue
        if lo >= window.hi:
            break
        if lo >= cursor:
            pieces.append(Interval(cursor, lo))
        cursor = hi
        if cursor > window.hi:
            break
    if cursor <= window.hi:
        pieces.append(Interval(cursor, window.hi))
    return [p for p in pieces if p.hi - p.lo >= min_length]

@dataclass(frozen=True)
class Strip:
    """Overlap band {p : |a*p.x + b*p.y + c| <= half_width}"""

    center_line: LineStd
    half_width: float

    def __post_init__(self):
        if self.half_width < 0.0:
            raise GeometryError("Strip half_width must be >= 0")

    def distance(self, point: Sequence[float]) -> float:
        a, b, c = self.center_line
        return a * point[0] + b * point[1] + c

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        return abs(self.distance(point)) <= self.half_width + tol

    def to_polygon(self, around: BaseGeometry) -> Polygon:
        """
        The strip as a finite rectangle covering every part of it that can
        meet ``around``
        """
        if self.half_width == 0.0:
            return Polygon()
        minx, miny, maxx, maxy = around.bounds
        center = np.array([(minx + maxx) / 2.0, (miny + maxy) / 2.0])
        reach = math.hypot(maxx - minx, maxy - miny) + 1.0
        a, b, c = self.center_line
        normal = np.array([a, b])
        tangent = np.array([-b, a])
        foot = center - self.distance(center) * normal
        h = self.half_width
        corners = [
            foot - reach * tangent - h * normal,
            foot + reach * tangent - h * normal,
            foot + reach * tangent + h * normal,
            foot - reach * tangent + h * normal,
        ]
        return Polygon([tuple(p) for p in corners])

def as_shape(polygon: PolygonLike) -> BaseGeometry:
    if isinstance(polygon, BaseGeometry):
        return polygon
    points = as_points(polygon)
    if len(points) < 3:
        raise GeometryError("Polygon needs at least 3 vertices")
    return Polygon(points)

def polygon_parts(geom: BaseGeometry, min_area: float = 0.0) -> List[Polygon]:
    """Polygons of positive area contained in a shapely result"""
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom] if geom.area > min_area else []
    if isinstance(geom, (MultiPolygon, GeometryCollection)):
        parts: List[Polygon] = []
        for part in geom.geoms:
            parts.extend(polygon_parts(part, min_area))
        return parts
    return []

def project_polygon(polygon: PolygonLike, axis: Sequence[float]) -> Interval:
    """
    Project polygon vertices onto an axis

    Args:
        polygon: Vertex list or shapely polygon
        axis: Unit vector

    Returns:
        Interval: [min, max] of the vertex dot products
    """
    if isinstance(polygon, BaseGeometry):
        if polygon.is_empty:
            raise GeometryError("Cannot project an empty polygon")
        coords = np.asarray(polygon.exterior.coords if isinstance(polygon, Polygon) else polygon.convex_hull.exterior.coords)
    else:
        coords = np.asarray(list(polygon), dtype=float)
    if coords.size == 0:
        raise GeometryError("Cannot project an empty polygon")
    values = coords.reshape(-1, 2) @ np.asarray(axis, dtype=float)
    return Interval(float(values.min()), float(values.max()))

def line_intersection(i: LineStd, j: LineStd) -> Optional[Point2]:
    """
    Intersection of two standard-form lines

    Args:
        i: First line
        j: Second line

    Returns:
        Optional[Point2]: The intersection, or None when the lines are parallel
    """
    det = i.a * j.b - j.a * i.b
    if abs(det) < config.PARALLEL_DET_TOL:
        return None
    x = (i.b * j.c - j.b * i.c) / det
    y = (j.a * i.c - i.a * j.c) / det
    return Point2(x, y)

def clip_polygon(subject: PolygonLike, clip: PolygonLike) -> List[Tuple[Point2, ...]]:
    """
    Boolean intersection of two simple polygons

    Args:
        subject: Polygon to clip
        clip: Clipping polygon

    Returns:
        List[Tuple[Point2, ...]]: Intersection pieces, empty when disjoint
    """
    result = as_shape(subject).intersection(as_shape(clip))
    return [as_points(part.exterior.coords[:-1]) for part in polygon_parts(result)]

def clipped_area(subject: PolygonLike, clip: PolygonLike) -> float:
    return float(as_shape(subject).intersection(as_shape(clip)).area)

def triple_overlap_area(s1: Strip, s2: Strip, s3: Strip, domain: PolygonLike) -> float:
    """
    Area of the intersection of three overlap strips inside a domain

    Args:
        s1, s2, s3: Overlap strips
        domain: Region the strips are clipped to (usually the common ply area)

    Returns:
        float: Area of s1 & s2 & s3 & domain
    """
    region = as_shape(domain)
    if region.is_empty:
        return 0.0
    # fixed order keeps the result symmetric in the arguments
    strips = sorted((s1, s2, s3), key=lambda s: (tuple(s.center_line), s.half_width))
    for strip in strips:
        region = region.intersection(strip.to_polygon(region))
        if region.is_empty:
            return 0.0
    return float(region.area)

def seam_polygon_intersects(ply: Ply, offset: float) -> bool:
    """True when the seam line crosses the interior of the ply polygon"""
    return 0.0 < offset < ply.width

def seam_chord(ply: Ply, offset: float) -> BaseGeometry:
    """Part of the seam line lying inside the ply polygon"""
    foot = ply.point_at(offset)
    minx, miny, maxx, maxy = ply.shape.bounds
    reach = 2.0 * math.hypot(maxx - minx, maxy - miny) + 1.0
    ends = [tuple(foot - reach * ply.direction), tuple(foot + reach * ply.direction)]
    return ply.shape.intersection(LineString(ends))

def seam_chord_length(ply: Ply, offset: float) -> float:
    return float(seam_chord(ply, offset).length)

def overlap_band(ply: Ply, offset: float, half_width: float) -> BaseGeometry:
    """Overlap strip of a seam clipped to its ply"""
    strip = Strip(seam_to_line(ply, offset), half_width)
    return ply.shape.intersection(strip.to_polygon(ply.shape))

def classify_vertices(ply: Ply) -> Tuple[FrozenSet[Point2], FrozenSet[Point2]]:
    """
    Find the cone-tip vertices that create small or flimsy sub-plies

    Edges are taken as vectors emanating from the vertex. A vertex counts when
    both edges project onto d_perp with the same nonzero sign, i.e. it is a
    local extreme of the offset. Convex tips are small, reflex tips
    flimsy. Edges parallel to the fiber (zero projection) disqualify a vertex.

    Args:
        ply: The ply

    Returns:
        Tuple[FrozenSet[Point2], FrozenSet[Point2]]: (small, flimsy)
    """
    pts = ply.vertices
    normal = ply.normal
    count = len(pts)
    small, flimsy = set(), set()
    for k in range(count):
        here = pts[k]
        back = pts[k - 1] - here
        ahead = pts[(k + 1) % count] - here
        p_back = float(back @ normal)
        p_ahead = float(ahead @ normal)
        if abs(p_back) < config.ZERO_PROJ_TOL or abs(p_ahead) < config.ZERO_PROJ_TOL:
            continue
        if math.copysign(1.0, p_back) != math.copysign(1.0, p_ahead):
            continue
        incoming = here - pts[k - 1]
        turn = incoming[0] * ahead[1] - incoming[1] * ahead[0]
        if turn >= 0.0:
            small.add(ply.polygon[k])
        else:
            flimsy.add(ply.polygon[k])
    return frozenset(small), frozenset(flimsy)

def stacking_faces(bands: Sequence[BaseGeometry]) -> List[Tuple[Polygon, int]]:
    """
    Planar arrangement of overlap bands with the stacking depth of each face

    Args:
        bands: Overlap band polygons, one per seam

    Returns:
        List[Tuple[Polygon, int]]: Faces covered by at least one band, with the
        number of bands covering each face
    """
    shapes = [b for b in bands if not b.is_empty and b.area > 0.0]
    if not shapes:
        return []
    boundaries = unary_union([s.boundary for s in shapes])
    faces = []
    for face in polygonize(boundaries):
        if face.area <= config.AREA_TOL:
            continue
        inner = face.representative_point()
        depth = sum(1 for s in shapes if s.contains(inner))
        if depth:
            faces.append((face, depth))
    faces.sort(key=lambda item: (item[0].bounds, -item[1]))
    return faces
