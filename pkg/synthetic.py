"""
Synthetic plies, stay-out zones and example layups

Every random helper takes a ``numpy.random.Generator`` so one seed drives a
whole run.
"""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np
from shapely.geometry import MultiPoint

from model import ManufacturingConfig, Ply, StayOutZone

# spool, overlap and minimum sub-ply widths of the random-ply benchmark
BENCH_SPOOL_WIDTH = 0.2
BENCH_OVERLAP_WIDTH = 0.01
BENCH_MIN_SUBPLY_WIDTH = 0.1

def box_ply(ply_id: str, x0: float, y0: float, x1: float, y1: float, fiber_angle: float,
            stack_index: int = 0) -> Ply:
    """Axis-aligned rectangular ply"""
    return Ply(ply_id, stack_index, ((x0, y0), (x1, y0), (x1, y1), (x0, y1)), fiber_angle)

def square_zone(cx: float, cy: float, side: float) -> StayOutZone:
    h = 0.5 * side
    return StayOutZone(((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)))

def regular_polygon_ply(ply_id: str, sides: int, radius: float, fiber_angle: float,
                        center: Tuple[float, float] = (0.0, 0.0), stack_index: int = 0,
                        rotation: float = 0.0) -> Ply:
    """Regular polygon ply, e.g. the hexagon used for three-orientation bundles"""
    cx, cy = center
    points = [
        (cx + radius * math.cos(rotation + 2 * math.pi * k / sides),
         cy + radius * math.sin(rotation + 2 * math.pi * k / sides))
        for k in range(sides)
    ]
    return Ply(ply_id, stack_index, tuple(points), fiber_angle)

def random_ply(rng: np.random.Generator, ply_id: str = "P0", points: int = 8,
               radius: Tuple[float, float] = (0.35, 0.6), stack_index: int = 0) -> Ply:
    """
    Random convex ply with a random fiber angle

    Args:
        rng: Random generator
        ply_id: Ply id
        points: Number of sampled boundary points before taking the hull
        radius: Range of the sampled point distances from the center
        stack_index: Stack position

    Returns:
        Ply: Convex ply centered near (0.5, 0.5)
    """
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=points))
    radii = rng.uniform(radius[0], radius[1], size=points)
    xy = np.column_stack([0.5 + radii * np.cos(angles), 0.5 + radii * np.sin(angles)])
    hull = MultiPoint([tuple(p) for p in xy]).convex_hull
    coords = [tuple(p) for p in hull.exterior.coords[:-1]]
    fiber = float(rng.uniform(0.0, math.pi))
    return Ply(ply_id, stack_index, tuple(coords), fiber)

def random_square_zones(rng: np.random.Generator, ply: Ply, count: int,
                        side: Tuple[float, float] = (0.02, 0.1)) -> List[StayOutZone]:
    """Squares of random size centered at random points of the ply's bounding box"""
    minx, miny, maxx, maxy = ply.shape.bounds
    zones = []
    for _ in range(count):
        s = float(rng.uniform(*side))
        cx = float(rng.uniform(minx, maxx))
        cy = float(rng.uniform(miny, maxy))
        zones.append(square_zone(cx, cy, s))
    return zones

def bench_config() -> ManufacturingConfig:
    return ManufacturingConfig(
        spool_width=BENCH_SPOOL_WIDTH,
        overlap_width=BENCH_OVERLAP_WIDTH,
        min_subply_width=BENCH_MIN_SUBPLY_WIDTH,
    )

def bench_trial(rng: np.random.Generator) -> Tuple[Ply, List[StayOutZone], ManufacturingConfig]:
    """One random ply with 1 to 20 square stay-out zones"""
    ply = random_ply(rng)
    zones = random_square_zones(rng, ply, int(rng.integers(1, 21)))
    return ply, zones, bench_config()

def stacked_layup(template: Ply, angles: Sequence[float], copies: int) -> List[Ply]:
    """
    Layup of ``copies`` plies per angle sharing one outline

    Plies are interleaved (angle cycles fastest) in stack order.
    """
    plies = []
    for k in range(copies):
        for a, angle in enumerate(angles):
            index = k * len(angles) + a
            plies.append(Ply(f"P{index:02d}", index, template.polygon, angle))
    return plies

def wing_layup() -> Tuple[List[Ply], List[StayOutZone], ManufacturingConfig]:
    """
    Wing-like example: 24 tapered plies at 0/60/120 degrees

    Spool width 0.3 and overlap 1.2% of the normalized span; a 25% thickness
    tolerance gives bundles of 8 plies.
    """
    outline = Ply("wing", 0, ((0.0, 0.0), (1.0, 0.12), (1.0, 0.48), (0.0, 0.6)), 0.0)
    plies = stacked_layup(outline, [0.0, math.pi / 3, 2 * math.pi / 3], 8)
    config_ = ManufacturingConfig(spool_width=0.3, overlap_width=0.012, min_subply_width=0.05, tolerance=0.25)
    return plies, [], config_

def vehicle_layup() -> Tuple[List[Ply], List[StayOutZone], ManufacturingConfig]:
    """
    Vehicle-panel example: 24 plies in perpendicular pairs 0/90 and 45/135
    with two stay-out zones

    A 1/6 thickness tolerance gives N = 4 and bundles of 12 plies.
    """
    outline = Ply("panel", 0, ((0.0, 0.0), (0.6, 0.0), (0.6, 0.45), (0.45, 0.6), (0.0, 0.6)), 0.0)
    plies = stacked_layup(outline, [0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4], 6)
    zones = [square_zone(0.2, 0.3, 0.04), square_zone(0.45, 0.15, 0.03)]
    config_ = ManufacturingConfig(spool_width=0.2, overlap_width=0.01, min_subply_width=0.05,
                                  tolerance=1.0 / 6.0)
    return plies, zones, config_
