"""
Tests for bundling and the linear rows of every manufacturing constraint
"""

import itertools
import math

import numpy as np
import pytest
from shapely.geometry import box

from constraints import (
    ABOVE,
    BELOW,
    BranchAssignment,
    Bundle,
    BundleContext,
    achieved_tolerance,
    bundle_size,
    enumerate_subspaces,
    make_bundles,
    parallel_rows,
    branch_at,
    quality_rows,
    spool_rows,
    stayout_intervals,
    stayout_rows,
    triple_determinant,
    triple_rows,
    triple_rows_for,
)
from geometry import Interval, Strip, triple_overlap_area
from model import ConfigError, Design, ManufacturingConfig, Ply, seam_to_line
from synthetic import box_ply, square_zone, stacked_layup

CFG = ManufacturingConfig(spool_width=0.3, overlap_width=0.05, min_subply_width=0.1)
THIRD = math.pi / 3

def _big_square(ply_id, angle, stack_index=0):
    return box_ply(ply_id, -1.0, -1.0, 1.0, 1.0, angle, stack_index)

def _positions_through(plies, points):
    """One interior seam per ply, each through the given point"""
    positions = {}
    for ply, point in zip(plies, points):
        positions[(ply.id, 0)] = 0.0
        positions[(ply.id, 1)] = ply.offset_of(point)
    return positions

def test_bundle_size_examples():
    assert bundle_size(24, 6, 2) == 8
    assert bundle_size(10, 10, 2) == 2
    assert bundle_size(24, 4, 2) == 12
    with pytest.raises(ConfigError):
        bundle_size(24, 0, 2)
    with pytest.raises(ConfigError):
        bundle_size(24, 30, 2)
    assert round(achieved_tolerance(12, 2), 3) == 0.167

def test_bundle_size_keeps_stacking_within_tolerance():
    """
    m is the smallest bundle size with m * N >= M * n
    """
    rng = np.random.default_rng(5)
    for _ in range(500):
        M = int(rng.integers(2, 60))
        N = int(rng.integers(2, M + 1))
        n = int(rng.integers(1, N + 1))
        m = bundle_size(M, N, n)
        assert m * N >= M * n
        assert (m - 1) * N < M * n

def test_make_bundles_in_stack_order():
    plies = stacked_layup(box_ply("t", 0.0, 0.0, 1.0, 1.0, 0.0), [0.0, THIRD, 2 * THIRD], 8)
    bundles = make_bundles(plies, 8)
    assert [b.size for b in bundles] == [8, 8, 8]
    assert bundles[0].ply_ids == tuple(f"P{k:02d}" for k in range(8))
    assert len(make_bundles(plies, 24)) == 1
    with pytest.raises(ConfigError):
        make_bundles([], 4)

def test_make_bundles_sorted_by_orientation():
    """
    Full single-orientation bundles first; leftovers pair up perpendicular orientations
    """
    plies = stacked_layup(box_ply("t", 0.0, 0.0, 1.0, 1.0, 0.0), [0.0, THIRD, 2 * THIRD], 8)
    bundles = make_bundles(plies, 8, sort_by_orientation=True)
    assert len(bundles) == 3
    for bundle in bundles:
        assert len({p.fiber_angle for p in bundle.plies}) == 1

    quad = stacked_layup(box_ply("t", 0.0, 0.0, 1.0, 1.0, 0.0),
                         [0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4], 6)
    bundles = make_bundles(quad, 12, sort_by_orientation=True)
    assert [b.size for b in bundles] == [12, 12]
    pairs = {frozenset(round(p.fiber_angle, 6) for p in b.plies) for b in bundles}
    assert pairs == {
        frozenset({0.0, round(math.pi / 2, 6)}),
        frozenset({round(math.pi / 4, 6), round(3 * math.pi / 4, 6)}),
    }

def test_spool_rows():
    rows = spool_rows("A", (0.0, 0.25), CFG)
    assert [(r.relation, r.rhs) for r in rows] == [("<=", pytest.approx(0.25)), (">=", pytest.approx(0.1))]
    assert spool_rows("A", (0.0,), CFG) == []

def test_stayout_intervals():
    ply = box_ply("R", 0.0, 0.0, 1.0, 1.0, 0.0)
    zone = square_zone(0.5, 0.5, 0.2)
    (interval,) = stayout_intervals(ply, [zone], CFG)
    assert interval.lo == pytest.approx(0.375, abs=1e-8)
    assert interval.hi == pytest.approx(0.625, abs=1e-8)
    assert stayout_intervals(ply, [square_zone(3.0, 3.0, 0.2)], CFG) == []
    merged = stayout_intervals(ply, [zone, square_zone(0.2, 0.62, 0.1)], CFG)
    assert len(merged) == 1

def test_stayout_rows_use_nearest_bounds():
    ply = box_ply("R", 0.0, 0.0, 1.0, 1.0, 0.0)
    zones = [square_zone(0.5, 0.2, 0.04), square_zone(0.5, 0.8, 0.04)]
    ctx = BundleContext(Bundle((ply,)), zones, CFG)
    positions = {("R", 0): 0.0, ("R", 1): 0.5}
    rows = stayout_rows(ctx, positions, branch_at(ctx, positions))
    bounds = sorted((r.relation, round(r.rhs, 6)) for r in rows)
    assert bounds == [("<=", 0.755), (">=", 0.245)]

def test_parallel_rows_for_same_orientation():
    a = box_ply("A", 0.0, 0.0, 1.0, 1.0, 0.0, 0)
    b = box_ply("B", 0.0, 0.0, 1.0, 1.0, 0.0, 1)
    ctx = BundleContext(Bundle((a, b)), [], CFG)
    positions = {("A", 0): 0.0, ("A", 1): 0.25, ("B", 0): 0.0, ("B", 1): 0.2}
    branch = branch_at(ctx, positions)
    assert branch.parallel == {(("A", 1), ("B", 1)): -1}
    (row,) = parallel_rows(ctx, positions, branch)
    # B's seam stays at least w_l below A's
    assert row.violation(positions) <= 1e-12
    assert row.violation({**positions, ("B", 1): 0.22}) == pytest.approx(0.02)
    with pytest.raises(KeyError):
        parallel_rows(ctx, positions, BranchAssignment())

def test_no_parallel_rows_across_orientations():
    a = box_ply("A", 0.0, 0.0, 1.0, 1.0, 0.0, 0)
    b = box_ply("B", 0.0, 0.0, 1.0, 1.0, THIRD, 1)
    ctx = BundleContext(Bundle((a, b)), [], CFG)
    positions = {("A", 0): 0.0, ("A", 1): 0.25, ("B", 0): 0.0, ("B", 1): 0.2}
    assert parallel_rows(ctx, positions, branch_at(ctx, positions)) == []

def test_triple_rows_violated_when_seams_meet():
    """
    Three seams at 0/60/120 degrees through one point overlap with positive area
    """
    plies = [_big_square(f"P{k}", k * THIRD, k) for k in range(3)]
    ctx = BundleContext(Bundle(tuple(plies)), [], CFG)
    positions = _positions_through(plies, [(0.0, 0.0)] * 3)
    branch = branch_at(ctx, positions)
    assert len(branch.triple) == 1
    rows = triple_rows(ctx, positions, branch)
    assert len(rows) == 3
    assert max(r.violation(positions) for r in rows) > 0.0
    strips = [Strip(seam_to_line(p, positions[(p.id, 1)]), CFG.half_overlap) for p in plies]
    assert triple_overlap_area(*strips, box(-1.0, -1.0, 1.0, 1.0)) > 0.0

def test_triple_rows_satisfied_when_seams_are_apart():
    plies = [_big_square(f"P{k}", k * THIRD, k) for k in range(3)]
    ctx = BundleContext(Bundle(tuple(plies)), [], CFG)
    positions = _positions_through(plies, [(0.0, -0.5), (0.5, 0.0), (-0.5, 0.0)])
    branch = branch_at(ctx, positions)
    rows = triple_rows(ctx, positions, branch)
    assert rows
    assert max(r.violation(positions) for r in rows) == 0.0
    strips = [Strip(seam_to_line(p, positions[(p.id, 1)]), CFG.half_overlap) for p in plies]
    assert triple_overlap_area(*strips, box(-1.0, -1.0, 1.0, 1.0)) == 0.0

def test_no_triple_rows_with_parallel_plies():
    plies = [_big_square("A", 0.0, 0), _big_square("B", 0.0, 1), _big_square("C", THIRD, 2)]
    ctx = BundleContext(Bundle(tuple(plies)), [], CFG)
    assert ctx.ply_triples == []

@pytest.mark.slow
def test_triple_rows_match_area_oracle():
    """
    Satisfied rows always mean zero overlap area, and zero area almost always
    means satisfied rows
    """
    rng = np.random.default_rng(17)
    domain = box(-1.0, -1.0, 1.0, 1.0)
    agree, trials = 0, 0
    while trials < 1000:
        angles = rng.uniform(0.0, math.pi, size=3)
        gaps = [abs(a - b) % math.pi for a, b in itertools.combinations(angles, 2)]
        if min(min(g, math.pi - g) for g in gaps) < math.radians(5.0):
            continue
        trials += 1
        plies = tuple(_big_square(f"P{k}", float(a), k) for k, a in enumerate(angles))
        refs = tuple((p.id, 1) for p in plies)
        points = rng.uniform(-0.1, 0.1, size=(3, 2))
        positions = _positions_through(plies, points)
        lines = [seam_to_line(p, positions[(p.id, 1)]) for p in plies]
        sign = 1 if triple_determinant(lines) >= 0.0 else -1
        rows = triple_rows_for(refs, plies, sign, CFG)
        satisfied = max(r.violation(positions) for r in rows) <= 1e-12
        area = triple_overlap_area(*[Strip(l, CFG.half_overlap) for l in lines], domain)
        if satisfied:
            assert area <= 1e-10
        if satisfied == (area <= 1e-10):
            agree += 1
    assert agree / trials >= 0.95

def test_quality_rows_around_cone_tip():
    """
    A seam above a small cone tip at 0.5 keeps at least small_min from it
    """
    cfg = ManufacturingConfig(0.3, 0.05, min_subply_width=0.1, small_min=0.15)
    ply = Ply("D", 0, ((0.25, 0.0), (0.0, 1.0), (-0.25, 0.0), (0.0, -1.0)), math.pi / 2)
    rows = quality_rows(ply, (0.0, 0.7), BranchAssignment(), cfg)
    assert (">=", pytest.approx(0.65)) in [(r.relation, r.rhs) for r in rows]
    assert all(r.violation({("D", 1): 0.7}) == 0.0 for r in rows)

    rectangle = box_ply("R", 0.0, 0.0, 1.0, 1.0, math.pi / 2)
    assert quality_rows(rectangle, (0.0, 0.5), BranchAssignment(), cfg) == []

    relaxed = quality_rows(ply, (0.0, 0.7), BranchAssignment(), CFG)
    assert relaxed and all(r.vacuous for r in relaxed)

def test_quality_rows_follow_branch():
    cfg = ManufacturingConfig(0.3, 0.05, min_subply_width=0.1, small_min=0.15)
    ply = Ply("D", 0, ((0.25, 0.0), (0.0, 1.0), (-0.25, 0.0), (0.0, -1.0)), math.pi / 2)
    ctx = BundleContext(Bundle((ply,)), [], cfg)
    key = next(k for k, xv, _ in ctx.vertices["D"] if xv == pytest.approx(0.5))
    branch = BranchAssignment(quality={(("D", 1), key): BELOW})
    rows = quality_rows(ply, (0.0, 0.3), branch, cfg)
    assert ("<=", pytest.approx(0.35)) in [(r.relation, r.rhs) for r in rows]
    assert ABOVE != BELOW

def test_enumerate_subspaces_open_window():
    ply = box_ply("R", 0.0, 0.0, 1.0, 1.0, 0.0)
    ctx = BundleContext(Bundle((ply,)), [], CFG)
    ((piece, _),) = enumerate_subspaces(ctx, "R", Design({"R": (0.0,)}))
    assert piece.lo == pytest.approx(0.1)
    assert piece.hi == pytest.approx(0.25)

def test_enumerate_subspaces_split_by_stayout():
    """
    A stay-out inside the window leaves two pieces, farthest first
    """
    ply = box_ply("R", 0.0, 0.0, 1.0, 1.0, 0.0)
    zone = square_zone(0.5, 0.175, 0.05)
    ctx = BundleContext(Bundle((ply,)), [zone], CFG)
    pieces = [piece for piece, _ in enumerate_subspaces(ctx, "R", Design({"R": (0.0,)}))]
    assert len(pieces) == 2
    assert pieces[0].lo == pytest.approx(0.225, abs=1e-8)
    assert pieces[0].hi == pytest.approx(0.25)
    assert pieces[1].lo == pytest.approx(0.1)
    assert pieces[1].hi == pytest.approx(0.125, abs=1e-8)

def test_enumerate_subspaces_blocked_window():
    ply = box_ply("R", 0.0, 0.0, 1.0, 1.0, 0.0)
    zone = square_zone(0.5, 0.175, 0.25)
    ctx = BundleContext(Bundle((ply,)), [zone], CFG)
    assert enumerate_subspaces(ctx, "R", Design({"R": (0.0,)})) == []

def test_branch_assignment_is_independent_per_instance():
    first, second = BranchAssignment(), BranchAssignment()
    first.stayout[(("R", 1), 0)] = ABOVE
    assert second.stayout == {}
    assert Interval(0.0, 1.0).length == 1.0

if __name__ == "__main__":
    test_bundle_size_examples()
    test_make_bundles_sorted_by_orientation()
    test_triple_rows_violated_when_seams_meet()
    test_quality_rows_around_cone_tip()
    print("constraint tests passed")
