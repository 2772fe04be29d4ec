"""
Tests for sub-ply extraction, the cost estimate, nesting and the spool sweep
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from shapely.geometry import MultiPoint, Polygon

from cost import (
    NestLayout,
    SubPlyPiece,
    design_metrics,
    estimate_cost,
    extract_subplies,
    nest,
    spool_sweep,
    trim_loss_estimate,
)
from model import ConfigError, CostParams, Design, ManufacturingConfig, Ply, as_points
from search import InfeasibleError
from synthetic import box_ply, square_zone

CFG = ManufacturingConfig(spool_width=0.3, overlap_width=0.05, min_subply_width=0.1)
QUARTERS = Design({"R": (0.0, 0.25, 0.5, 0.75)})

def _rectangle(angle=math.pi / 2):
    return box_ply("R", 0.0, 0.0, 1.0, 1.0, angle)

def _piece(index, coords, angle=0.0):
    shape = Polygon(coords)
    minx, miny, maxx, maxy = shape.bounds
    return SubPlyPiece("S", index, as_points(coords), maxy - miny, maxx - minx, angle)

def test_extract_subplies_on_rectangle():
    pieces = extract_subplies(QUARTERS, [_rectangle()], CFG)
    assert len(pieces) == 4
    assert [p.width for p in pieces] == pytest.approx([0.275, 0.3, 0.3, 0.275])
    assert sum(p.area for p in pieces) == pytest.approx(1.0 + 3 * 0.05)

def test_extract_unsplit_ply():
    ply = _rectangle()
    (piece,) = extract_subplies(Design({"R": (0.0,)}), [ply], CFG)
    assert piece.area == pytest.approx(ply.area)

def test_notched_ply_yields_extra_pieces():
    """
    A slab crossing the prongs of a U shape splits into two pieces
    """
    cfg = ManufacturingConfig(spool_width=1.5, overlap_width=0.05)
    u_shape = Ply("U", 0, ((0.0, 0.0), (3.0, 0.0), (3.0, 2.0), (2.0, 2.0), (2.0, 1.0),
                           (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)), 0.0)
    pieces = extract_subplies(Design({"U": (0.0, 1.2)}), [u_shape], cfg)
    assert len(pieces) == 3

def test_trim_loss_estimate():
    assert trim_loss_estimate(QUARTERS, CFG, 2.0) == pytest.approx(0.3)
    assert trim_loss_estimate(Design({"R": (0.0,)}), CFG, 2.0) == 0.0
    assert trim_loss_estimate(Design({"R": (0.0, 0.3, 0.6)}), CFG, 2.0) == pytest.approx(0.0, abs=1e-12)

def test_estimate_cost_by_hand():
    """
    Unit square cut at 0.25/0.5/0.75: A_d = 1, A_l = A_trim = 0.15, unit cost 2.5
    """
    params = CostParams(a_mat=5.0, b_mat=1.0, c_seam=0.01, mean_subply_length=1.0)
    cost = estimate_cost(QUARTERS, [_rectangle()], CFG, params)
    assert cost.A_d == pytest.approx(1.0)
    assert cost.A_l == pytest.approx(0.15)
    assert cost.A_trim == pytest.approx(0.15)
    assert cost.material_cost == pytest.approx(3.25)
    assert cost.seam_cost == pytest.approx(0.03)
    assert cost.total == pytest.approx(3.28, abs=1e-9)
    assert cost.n_seam == 3

def test_estimate_cost_without_seams():
    params = CostParams(a_mat=5.0, b_mat=1.0, c_seam=0.01)
    cost = estimate_cost(Design({"R": (0.0,)}), [_rectangle()], CFG, params)
    assert cost.total == pytest.approx(1.0 * (5.0 * 0.3 + 1.0))

def test_seam_cost_scales_with_c_seam():
    low = estimate_cost(QUARTERS, [_rectangle()], CFG, CostParams(5.0, 1.0, 0.01, 1.0))
    high = estimate_cost(QUARTERS, [_rectangle()], CFG, CostParams(5.0, 1.0, 0.02, 1.0))
    assert high.seam_cost == pytest.approx(2 * low.seam_cost)
    assert high.material_cost == pytest.approx(low.material_cost)

def test_estimate_cost_identity():
    rng = np.random.default_rng(4)
    for _ in range(20):
        params = CostParams(*rng.uniform(0.0, 5.0, size=3), mean_subply_length=float(rng.uniform(0.5, 2.0)))
        cost = estimate_cost(QUARTERS, [_rectangle()], CFG, params)
        area = cost.A_d + cost.A_l + cost.A_trim
        assert cost.total == pytest.approx(area * params.unit_cost(0.3) + cost.n_seam * params.c_seam)

def test_nest_identical_rectangles_leaves_no_trim():
    pieces = [_piece(k, ((0.0, 0.0), (2.0, 0.0), (2.0, 0.3), (0.0, 0.3))) for k in range(3)]
    layout = nest(pieces, 0.3)
    assert layout.used_length == pytest.approx(6.0)
    assert layout.trim_area == pytest.approx(0.0, abs=1e-9)

def test_nest_half_width_piece():
    layout = nest([_piece(0, ((0.0, 0.0), (2.0, 0.0), (2.0, 0.15), (0.0, 0.15)))], 0.3)
    assert layout.trim_area == pytest.approx(0.3)

def test_nest_interlocks_trapezoids():
    """
    The second trapezoid is turned over so the two slanted edges meet
    """
    coords = ((0.0, 0.0), (2.0, 0.0), (1.0, 0.3), (0.0, 0.3))
    layout = nest([_piece(0, coords), _piece(1, coords)], 0.3)
    assert layout.used_length == pytest.approx(3.0, abs=1e-9)
    assert layout.trim_area == pytest.approx(0.0, abs=1e-9)
    second = layout.placements[1]
    assert second.rotation180 or second.mirrored

def test_nest_rejects_wide_piece():
    with pytest.raises(ValueError):
        nest([_piece(0, ((0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.0, 0.5)))], 0.3)

@st.composite
def nest_pieces(draw):
    """Two to five random convex pieces fitting a 0.3 wide band"""
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    count = draw(st.integers(min_value=2, max_value=5))
    rng = np.random.default_rng(seed)
    pieces = []
    for k in range(count):
        pts = np.column_stack([rng.uniform(0.0, 1.0, 6), rng.uniform(0.0, 0.3, 6)])
        hull = MultiPoint([tuple(p) for p in pts]).convex_hull
        assume(hull.geom_type == "Polygon" and hull.area >= 1e-3)
        pieces.append(_piece(k, hull.exterior.coords[:-1]))
    return pieces

@given(nest_pieces())
@settings(max_examples=100, deadline=None)
def test_nest_random_pieces_do_not_overlap(pieces):
    """
    Placed pieces stay inside the band and never overlap
    """
    layout = nest(pieces, 0.3)
    assert len(layout.placements) == len(pieces)
    shapes = [Polygon(p.polygon) for p in layout.placements]
    for shape in shapes:
        minx, miny, _, maxy = shape.bounds
        assert minx >= -1e-9 and miny >= -1e-9 and maxy <= 0.3 + 1e-9
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            assert shapes[i].intersection(shapes[j]).area < 1e-9
    total = sum(s.area for s in shapes)
    assert layout.trim_area == pytest.approx(0.3 * layout.used_length - total)

def test_nest_layout_survives_dict_conversion():
    pieces = [_piece(k, ((0.0, 0.0), (1.0, 0.0), (1.0, 0.3), (0.0, 0.3))) for k in range(3)]
    layout = nest(pieces, 0.3)
    restored = NestLayout.from_dict(layout.to_dict())
    assert restored == layout

def test_spool_sweep_trends():
    """
    Cheap seams favour narrow spools, expensive seams wide ones, and in between
    the optimum sits inside the range
    """
    cfg = ManufacturingConfig(spool_width=0.3, overlap_width=0.01, min_subply_width=0.01)
    ply = _rectangle()

    def totals(a_mat, b_mat, c_seam):
        params = CostParams(a_mat, b_mat, c_seam, mean_subply_length=1.0, spool_min=0.15, spool_max=1.15)
        points = spool_sweep([ply], [], cfg, params, 3)
        assert [p.spool_width for p in points] == pytest.approx([0.15, 0.65, 1.15])
        assert all(p.status == "complete" for p in points)
        return [p.cost.total for p in points]

    assert int(np.argmin(totals(5.0, 1.0, 0.0001))) == 0
    assert int(np.argmin(totals(0.01, 1.0, 10.0))) == 2
    middle = totals(5.0, 1.0, 1.0)
    assert middle[1] < middle[0] and middle[1] < middle[2]

def test_spool_sweep_seams_decrease_with_width():
    cfg = ManufacturingConfig(spool_width=0.3, overlap_width=0.05, min_subply_width=0.05)
    params = CostParams(1.0, 1.0, 0.1, spool_min=0.2, spool_max=0.6)
    points = spool_sweep([_rectangle()], [], cfg, params, 5)
    counts = [p.cost.n_seam for p in points]
    assert counts == sorted(counts, reverse=True)

def test_spool_sweep_errors():
    params = CostParams(1.0, 1.0, 0.1, spool_min=0.2, spool_max=0.4)
    with pytest.raises(ConfigError):
        spool_sweep([_rectangle()], [], CFG, params, 1)
    with pytest.raises(ConfigError):
        spool_sweep([_rectangle()], [], CFG, CostParams(1.0, 1.0, 0.1), 3)
    blocked = [square_zone(0.5, 0.5, 2.0)]
    with pytest.raises(InfeasibleError):
        spool_sweep([_rectangle(0.0)], blocked, CFG, params, 3)

def test_design_metrics():
    metrics = design_metrics(QUARTERS, [_rectangle()], CFG, bundle_size=12)
    assert metrics["seam_count"] == 4
    assert metrics["interior_seams"] == 3
    assert metrics["mean_subply_width"] == pytest.approx(0.2875)
    assert metrics["max_stacking_depth"] == 1
    assert round(metrics["achieved_tolerance"], 3) == 0.167

if __name__ == "__main__":
    test_estimate_cost_by_hand()
    test_nest_interlocks_trapezoids()
    test_spool_sweep_trends()
    print("cost tests passed")
