"""
Production cost of a seam design: sub-ply extraction, trim loss, nesting on
the spool and the spool-width sweep
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from shapely import affinity
from shapely.geometry import LineString, Polygon, box
from shapely.ops import unary_union

import config
from constraints import achieved_tolerance
from geometry import Strip, polygon_parts, project_polygon, seam_chord_length
from model import ConfigError, CostParams, Design, ManufacturingConfig, Ply, Point2, StayOutZone, as_points, seam_to_line
from search import InfeasibleError, max_stacking_depth, partition_layup

logger = logging.getLogger(__name__)

class NestingError(ValueError):
    """Raised when a piece cannot be placed on the spool"""

@dataclass(frozen=True)
class SubPlyPiece:
    ply_id: str
    index: int
    polygon: Tuple[Point2, ...]
    width: float
    length: float
    fiber_angle: float

    @property
    def piece_id(self) -> str:
        return f"{self.ply_id}:{self.index}"

    @property
    def shape(self) -> Polygon:
        return Polygon(self.polygon)

    @property
    def area(self) -> float:
        return float(self.shape.area)

@dataclass(frozen=True)
class Placement:
    piece_id: str
    start: float
    rotation180: bool
    mirrored: bool
    polygon: Tuple[Point2, ...]

@dataclass(frozen=True)
class NestLayout:
    placements: Tuple[Placement, ...]
    spool_width: float
    used_length: float
    trim_area: float

    def to_dict(self) -> Dict:
        return {
            "placements": [
                {"piece_id": p.piece_id, "start": p.start, "rotation180": p.rotation180, "mirrored": p.mirrored,
                 "polygon": [[q.x, q.y] for q in p.polygon]}
                for p in self.placements
            ],
            "spool_width": self.spool_width,
            "used_length": self.used_length,
            "trim_area": self.trim_area,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "NestLayout":
        """Layout as stored in a result file"""
        placements = tuple(
            Placement(str(p["piece_id"]), float(p["start"]), bool(p["rotation180"]), bool(p["mirrored"]),
                      as_points(p["polygon"]))
            for p in data["placements"]
        )
        return cls(placements, float(data["spool_width"]), float(data["used_length"]), float(data["trim_area"]))

@dataclass(frozen=True)
class CostBreakdown:
    A_d: float
    A_l: float
    A_trim: float
    material_cost: float
    seam_cost: float
    total: float
    n_seam: int
    spool_width: float

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)

@dataclass(frozen=True)
class SweepPoint:
    spool_width: float
    status: str
    cost: Optional[CostBreakdown] = None
    design: Optional[Design] = None

def subply_bounds(ply: Ply, offsets: Sequence[float], half_overlap: float) -> List[Tuple[float, float]]:
    """
    Offset range of every sub-ply, extended by half the overlap past each
    interior seam

    Args:
        ply: The ply
        offsets: Seam offsets, boundary seam first
        half_overlap: w_l / 2

    Returns:
        List[Tuple[float, float]]: (lo, hi) per sub-ply
    """
    cuts = list(offsets) + [ply.width]
    bounds = []
    for i in range(len(cuts) - 1):
        lo = cuts[i] - (half_overlap if i > 0 else 0.0)
        hi = cuts[i + 1] + (half_overlap if i + 1 < len(offsets) else 0.0)
        bounds.append((max(lo, 0.0), min(hi, ply.width)))
    return bounds

def extract_subplies(design: Design, plies: Sequence[Ply], config_: ManufacturingConfig) -> List[SubPlyPiece]:
    """
    Cut every ply into its sub-ply pieces

    A slab that splits the ply into disconnected parts yields one piece per
    part.

    Args:
        design: Seam offsets per ply
        plies: Plies of the design
        config_: Manufacturing requirements

    Returns:
        List[SubPlyPiece]: Pieces in ply order, then offset order
    """
    pieces = []
    for ply in plies:
        offsets = design.offsets(ply.id) or (0.0,)
        index = 0
        for lo, hi in subply_bounds(ply, offsets, config_.half_overlap):
            slab = Strip(seam_to_line(ply, 0.5 * (lo + hi)), 0.5 * (hi - lo)).to_polygon(ply.shape)
            for part in polygon_parts(ply.shape.intersection(slab), config.AREA_TOL):
                across = project_polygon(part, ply.normal)
                along = project_polygon(part, ply.direction)
                pieces.append(SubPlyPiece(
                    ply.id, index, as_points(part.exterior.coords[:-1]),
                    across.length, along.length, ply.fiber_angle,
                ))
                index += 1
    return pieces

def mean_fiber_extent(plies: Sequence[Ply]) -> float:
    """Mean extent of the plies along their fiber direction"""
    if not plies:
        return 0.0
    return float(np.mean([project_polygon(p.shape, p.direction).length for p in plies]))

def trim_loss_estimate(design: Design, config_: ManufacturingConfig, mean_subply_length: float) -> float:
    """
    Trim loss with sub-plies approximated as rectangles of length h_sp

    Args:
        design: Seam offsets per ply
        config_: Manufacturing requirements
        mean_subply_length: h_sp

    Returns:
        float: Sum over consecutive seam gaps of (w_s - gap) * h_sp
    """
    total = 0.0
    for offsets in design.seams.values():
        for a, b in zip(offsets, offsets[1:]):
            total += (config_.spool_width - (b - a)) * mean_subply_length
    return total

def overlap_area_estimate(design: Design, plies: Sequence[Ply], config_: ManufacturingConfig) -> float:
    """Overlap area: interior seams times w_l times each ply's mean seam length"""
    total = 0.0
    for ply in plies:
        interior = design.offsets(ply.id)[1:]
        if not interior:
            continue
        mean_length = float(np.mean([seam_chord_length(ply, x) for x in interior]))
        total += len(interior) * config_.overlap_width * mean_length
    return total

def estimate_cost(design: Design, plies: Sequence[Ply], config_: ManufacturingConfig,
                  cost_params: CostParams) -> CostBreakdown:
    """
    Linearized production cost of a design

    (A_d + A_l + A_trim) * (a_mat * w_s + b_mat) + n_seam * c_seam

    Args:
        design: Seam offsets per ply
        plies: Plies of the design
        config_: Manufacturing requirements
        cost_params: Cost coefficients

    Returns:
        CostBreakdown: Areas, cost terms and total
    """
    h_sp = cost_params.mean_subply_length
    if h_sp is None:
        h_sp = mean_fiber_extent(plies)
    A_d = float(sum(p.area for p in plies))
    A_l = overlap_area_estimate(design, plies, config_)
    A_trim = trim_loss_estimate(design, config_, h_sp)
    n_seam = sum(max(0, len(design.offsets(p.id)) - 1) for p in plies)
    material_cost = (A_d + A_l + A_trim) * cost_params.unit_cost(config_.spool_width)
    seam_cost = n_seam * cost_params.c_seam
    return CostBreakdown(A_d, A_l, A_trim, material_cost, seam_cost, material_cost + seam_cost, n_seam,
                         config_.spool_width)

def _spool_frame(piece: SubPlyPiece) -> Polygon:
    """Piece with the fiber along x and its bounding box at the origin"""
    d = np.array([np.cos(piece.fiber_angle), np.sin(piece.fiber_angle)])
    n = np.array([-d[1], d[0]])
    pts = np.asarray(piece.polygon, dtype=float)
    local = np.column_stack([pts @ d, pts @ n])
    local -= local.min(axis=0)
    return Polygon(local)

def _configurations(shape: Polygon) -> List[Tuple[bool, bool, Polygon]]:
    minx, miny, maxx, maxy = shape.bounds
    cx, cy = 0.5 * (minx + maxx), 0.5 * (miny + maxy)
    rotated = affinity.rotate(shape, 180.0, origin=(cx, cy))
    mirrored = affinity.scale(shape, 1.0, -1.0, origin=(cx, cy))
    both = affinity.rotate(mirrored, 180.0, origin=(cx, cy))
    return [(False, False, shape), (True, False, rotated), (False, True, mirrored), (True, True, both)]

def _row_span(shape, y: float, reach: float) -> Optional[Tuple[float, float]]:
    cut = shape.intersection(LineString([(-reach, y), (reach, y)]))
    if cut.is_empty:
        return None
    minx, _, maxx, _ = cut.bounds
    return minx, maxx

def _clearance(placed, shape: Polygon) -> float:
    """
    Smallest shift along x that puts ``shape`` right of everything placed

    Both outlines are piecewise linear, so the largest overlap occurs at one
    of their vertex heights.
    """
    if placed is None or placed.is_empty:
        return 0.0
    _, lo_a, _, hi_a = placed.bounds
    _, lo_b, _, hi_b = shape.bounds
    lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
    if hi < lo:
        return 0.0
    levels = {y for _, y in shape.exterior.coords}
    for part in polygon_parts(placed):
        levels.update(y for _, y in part.exterior.coords)
    levels = sorted(y for y in levels if lo <= y <= hi)
    levels += [0.5 * (a + b) for a, b in zip(levels, levels[1:])]
    reach = 1.0 + abs(placed.bounds[2]) + abs(shape.bounds[2]) + placed.bounds[2] - placed.bounds[0]
    shift = 0.0
    for y in levels:
        right = _row_span(placed, y, reach)
        left = _row_span(shape, y, reach)
        if right is not None and left is not None:
            shift = max(shift, right[1] - left[0])
    return shift

def _gap_area(previous: Optional[Polygon], shape: Polygon, spool_width: float) -> float:
    if previous is None:
        return 0.0
    hull = unary_union([previous, shape]).convex_hull
    _, _, maxx, _ = hull.bounds
    band = box(hull.bounds[0], 0.0, maxx, spool_width)
    return max(0.0, hull.intersection(band).area - previous.area - shape.area)

def nest(pieces: Sequence[SubPlyPiece], spool_width: float) -> NestLayout:
    """
    Place sub-ply pieces sequentially along the spool

    Pieces run with the fiber along the spool length and sit on the lower
    edge of the band. Each step tries every remaining piece in its four
    configurations (identity, rotated 180 degrees, mirrored, both) and keeps
    the one leaving the smallest gap against the previous placement.

    Args:
        pieces: Pieces to cut
        spool_width: Band width w_s

    Returns:
        NestLayout: Placements, used length and trim area
    """
    frames = {}
    for piece in pieces:
        frame = _spool_frame(piece)
        if frame.bounds[3] > spool_width + 1e-9:
            raise NestingError(f"Piece {piece.piece_id} is {frame.bounds[3]:.6g} wide, spool is {spool_width:.6g}")
        frames[piece.piece_id] = frame

    remaining = [p.piece_id for p in pieces]
    placements: List[Placement] = []
    placed = None
    previous = None
    used = 0.0
    while remaining:
        best = None
        for order, piece_id in enumerate(remaining):
            for config_rank, (rotated, mirrored, shape) in enumerate(_configurations(frames[piece_id])):
                shift = _clearance(placed, shape)
                moved = affinity.translate(shape, xoff=shift)
                gap = _gap_area(previous, moved, spool_width)
                growth = max(0.0, moved.bounds[2] - used)
                key = (round(gap, 12), round(growth, 12), order, config_rank)
                if best is None or key < best[0]:
                    best = (key, piece_id, rotated, mirrored, moved, shift)
        _, piece_id, rotated, mirrored, moved, shift = best
        remaining.remove(piece_id)
        placements.append(Placement(piece_id, shift, rotated, mirrored, as_points(moved.exterior.coords[:-1])))
        placed = moved if placed is None else unary_union([placed, moved])
        previous = moved
        used = max(used, moved.bounds[2])

    area = sum(Polygon(p.polygon).area for p in placements)
    trim = spool_width * used - area
    logger.debug("Nested %d pieces on %.6g of spool, trim %.6g", len(placements), used, trim)
    return NestLayout(tuple(placements), spool_width, used, trim)

def _sweep_point(plies: Sequence[Ply], zones: Sequence[StayOutZone], config_: ManufacturingConfig,
                 cost_params: CostParams, spool_width: float) -> SweepPoint:
    try:
        config_w = dataclasses.replace(config_, spool_width=float(spool_width))
        result = partition_layup(plies, zones, config_w)
    except (InfeasibleError, ConfigError) as exc:
        logger.info("Spool width %.6g infeasible: %s", spool_width, exc)
        return SweepPoint(float(spool_width), "infeasible")
    status = "complete" if not result.violations else "invalid"
    return SweepPoint(float(spool_width), status, estimate_cost(result.design, plies, config_w, cost_params),
                      result.design)

def spool_sweep(plies: Sequence[Ply], zones: Sequence[StayOutZone], config_: ManufacturingConfig,
                cost_params: CostParams, steps: int) -> List[SweepPoint]:
    """
    Partition and cost the plies over a uniform grid of spool widths

    Args:
        plies: Plies (a bundle or a whole layup)
        zones: Stay-out zones
        config_: Manufacturing requirements; spool_width is overridden
        cost_params: Cost coefficients with spool_min and spool_max
        steps: Number of grid points

    Returns:
        List[SweepPoint]: One point per width, ascending; failed widths are
        flagged with status "infeasible"
    """
    if steps < 2:
        raise ConfigError("steps must be >= 2")
    lo, hi = cost_params.spool_min, cost_params.spool_max
    if lo is None or hi is None or not lo < hi:
        raise ConfigError("spool_min < spool_max is required for a sweep")
    widths = np.linspace(lo, hi, steps)
    with ThreadPoolExecutor(max_workers=config.THREADS) as pool:
        points = list(pool.map(lambda w: _sweep_point(plies, zones, config_, cost_params, w), widths))
    if all(p.cost is None for p in points):
        raise InfeasibleError(f"No spool width in [{lo:.6g}, {hi:.6g}] gives a feasible design")
    return points

def design_metrics(design: Design, plies: Sequence[Ply], config_: ManufacturingConfig,
                   bundle_size: Optional[int] = None) -> Dict[str, float]:
    """Seam count, mean sub-ply width, stacking depth and achieved tolerance"""
    widths = [
        hi - lo
        for ply in plies
        for lo, hi in subply_bounds(ply, design.offsets(ply.id) or (0.0,), config_.half_overlap)
    ]
    metrics = {
        "seam_count": design.seam_count,
        "interior_seams": design.interior_seam_count,
        "mean_subply_width": float(np.mean(widths)) if widths else 0.0,
        "max_stacking_depth": max_stacking_depth(design, plies, config_),
    }
    if bundle_size is not None:
        metrics["achieved_tolerance"] = achieved_tolerance(bundle_size, config_.base_overlaps)
    return metrics
