"""
Tests for the SVG drawings
"""

import math

import pytest

from cost import SubPlyPiece, nest
from model import Design, ManufacturingConfig, as_points
from project_io import Project, ResultFile
from render import render
from search import max_stacking_depth
from synthetic import box_ply

CFG = ManufacturingConfig(spool_width=0.3, overlap_width=0.05, min_subply_width=0.1)

def rectangle_result():
    ply = box_ply("R", 0.0, 0.0, 1.0, 1.0, math.pi / 2)
    design = Design({"R": (0.0, 0.25, 0.5, 0.75)})
    return ResultFile(Project([ply], [], CFG), design, [["R"]], 1, 1, design.objective)

def crossing_result():
    a = box_ply("A", 0.0, 0.0, 1.0, 1.0, 0.0, 0)
    b = box_ply("B", 0.0, 0.0, 1.0, 1.0, math.pi / 2, 1)
    design = Design({"A": (0.0, 0.5), "B": (0.0, 0.5)})
    return ResultFile(Project([a, b], [], CFG), design, [["A", "B"]], 2, 2, design.objective)

def test_seams_mode_draws_every_seam_and_band():
    svg = render(rectangle_result(), "seams")
    assert svg.count('class="seam"') == 4
    assert svg.count('class="overlap"') == 3
    assert svg.count('class="ply"') == 1

def test_nest_mode_without_trim():
    pieces = [
        SubPlyPiece("S", k, as_points(((0.0, 0.0), (2.0, 0.0), (2.0, 0.3), (0.0, 0.3))), 0.3, 2.0, 0.0)
        for k in range(3)
    ]
    layout = nest(pieces, 0.3)
    svg = render(rectangle_result(), "nest", layout=layout)
    assert svg.count('class="piece"') == 3
    assert svg.count('class="trim"') == 0

def test_nest_mode_draws_stored_layout():
    """
    A result carrying a nesting layout is drawn as saved, not nested again
    """
    pieces = [
        SubPlyPiece("S", k, as_points(((0.0, 0.0), (2.0, 0.0), (2.0, 0.3), (0.0, 0.3))), 0.3, 2.0, 0.0)
        for k in range(3)
    ]
    result = rectangle_result()
    result.nest = nest(pieces, 0.3).to_dict()
    svg = render(result, "nest")
    assert svg.count('class="piece"') == 3
    assert svg.count('class="trim"') == 0

def test_nest_mode_shows_trim():
    svg = render(rectangle_result(), "nest")
    assert svg.count('class="piece"') == 4
    assert svg.count('class="trim"') > 0

def test_overlaps_mode_reports_depth():
    result = crossing_result()
    depth = max_stacking_depth(result.design, result.project.plies, CFG)
    svg = render(result, "overlaps")
    assert depth == 2
    assert f"max stacking depth: {depth}" in svg
    assert svg.count('class="face"') >= 3

def test_render_writes_file_and_is_deterministic(tmp_path):
    out = tmp_path / "seams.svg"
    svg = render(rectangle_result(), "seams", out)
    assert out.read_text(encoding="utf-8") == svg
    assert render(rectangle_result(), "seams") == svg

def test_unknown_mode():
    with pytest.raises(ValueError):
        render(rectangle_result(), "heatmap")

if __name__ == "__main__":
    print(render(rectangle_result(), "seams"))
