"""
SVG drawings of seam designs, overlap stacking and nesting layouts
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import svgwrite
from shapely.geometry import Polygon, box
from shapely.ops import unary_union

from cost import NestLayout, extract_subplies, nest
from geometry import overlap_band, polygon_parts, seam_chord, stacking_faces
from project_io import ResultFile
from search import max_stacking_depth

logger = logging.getLogger(__name__)

MODES = ("seams", "nest", "overlaps")
CANVAS = 800.0
MARGIN = 20.0

def _fmt(value: float) -> str:
    return f"{value:.6f}".rstrip("0").rstrip(".")

class _Frame:
    """Maps model coordinates (y up) into the canvas (y down)"""

    def __init__(self, bounds: Tuple[float, float, float, float]):
        minx, miny, maxx, maxy = bounds
        extent = max(maxx - minx, maxy - miny, 1e-9)
        self.scale = (CANVAS - 2 * MARGIN) / extent
        self.minx, self.maxy = minx, maxy
        self.width = (maxx - minx) * self.scale + 2 * MARGIN
        self.height = (maxy - miny) * self.scale + 2 * MARGIN

    def point(self, x: float, y: float) -> Tuple[float, float]:
        return (
            float(_fmt(MARGIN + (x - self.minx) * self.scale)),
            float(_fmt(MARGIN + (self.maxy - y) * self.scale)),
        )

    def points(self, coords: Iterable[Sequence[float]]) -> List[Tuple[float, float]]:
        return [self.point(x, y) for x, y in coords]

def _drawing(frame: _Frame) -> svgwrite.Drawing:
    dwg = svgwrite.Drawing(size=(_fmt(frame.width), _fmt(frame.height)), profile="full")
    dwg.viewbox(0, 0, float(_fmt(frame.width)), float(_fmt(frame.height)))
    dwg.add(dwg.rect((0, 0), (float(_fmt(frame.width)), float(_fmt(frame.height))), fill="white"))
    return dwg

def _add_polygons(dwg, group, frame: _Frame, geom, **attrs):
    for part in polygon_parts(geom):
        group.add(dwg.polygon(frame.points(part.exterior.coords[:-1]), **attrs))

def render_seams(result: ResultFile) -> svgwrite.Drawing:
    """Ply outlines, seam lines, overlap bands and stay-out zones"""
    project = result.project
    shapes = [p.shape for p in project.plies] + [z.shape for z in project.zones]
    frame = _Frame(unary_union(shapes).bounds)
    dwg = _drawing(frame)
    half = project.config.half_overlap

    plies = dwg.g(id="plies")
    for ply in project.plies:
        plies.add(dwg.polygon(frame.points(ply.polygon), class_="ply", fill="none", stroke="black",
                              stroke_width=1))
    dwg.add(plies)

    zones = dwg.g(id="stayouts")
    for zone in project.zones:
        zones.add(dwg.polygon(frame.points(zone.polygon), class_="stayout", fill="#333333", stroke="none"))
    dwg.add(zones)

    bands = dwg.g(id="overlaps")
    seams = dwg.g(id="seams")
    for seam in result.design.iter_seams():
        ply = project.ply(seam.ply_id)
        if seam.offset > 0.0:
            _add_polygons(dwg, bands, frame, overlap_band(ply, seam.offset, half), class_="overlap",
                          fill="#1f77b4", fill_opacity=0.35, stroke="none")
        chord = seam_chord(ply, seam.offset)
        if chord.is_empty or chord.length <= 0.0:
            continue
        for line in getattr(chord, "geoms", [chord]):
            if line.length <= 0.0:
                continue
            start, end = line.coords[0], line.coords[-1]
            seams.add(dwg.line(frame.point(*start), frame.point(*end), class_="seam",
                               stroke="#d62728", stroke_width=1))
    dwg.add(bands)
    dwg.add(seams)
    return dwg

def render_overlaps(result: ResultFile) -> svgwrite.Drawing:
    """Projected overlap stacking: faces shaded by the number of stacked bands"""
    project = result.project
    frame = _Frame(unary_union([p.shape for p in project.plies]).bounds)
    dwg = _drawing(frame)
    half = project.config.half_overlap
    bands = [
        overlap_band(ply, x, half)
        for ply in project.plies
        for x in result.design.offsets(ply.id)[1:]
    ]
    faces = stacking_faces(bands)
    depth = max_stacking_depth(result.design, project.plies, project.config)

    outline = dwg.g(id="plies")
    for ply in project.plies:
        outline.add(dwg.polygon(frame.points(ply.polygon), class_="ply", fill="none", stroke="#999999",
                                stroke_width=0.5))
    dwg.add(outline)
    shading = dwg.g(id="faces")
    for face, count in faces:
        shading.add(dwg.polygon(frame.points(face.exterior.coords[:-1]), class_="face", fill="black",
                                fill_opacity=float(_fmt(count / max(depth, 1))), stroke="none"))
    dwg.add(shading)
    dwg.add(dwg.text(f"max stacking depth: {depth}", insert=(MARGIN, MARGIN - 5), class_="depth",
                     font_size=12))
    return dwg

def render_nest(result: ResultFile, layout: Optional[NestLayout] = None) -> svgwrite.Drawing:
    """
    Spool band with placed pieces and the trimmed remainder shaded

    Draws the given layout, else the one stored in the result, else nests
    the design afresh.
    """
    project = result.project
    if layout is None and result.nest:
        layout = NestLayout.from_dict(result.nest)
    if layout is None:
        pieces = extract_subplies(result.design, project.plies, project.config)
        layout = nest(pieces, project.config.spool_width)
    band = box(0.0, 0.0, max(layout.used_length, 1e-9), layout.spool_width)
    frame = _Frame(band.bounds)
    dwg = _drawing(frame)

    dwg.add(dwg.polygon(frame.points(band.exterior.coords[:-1]), class_="band", fill="none", stroke="black",
                        stroke_width=1))
    shapes = [Polygon(p.polygon) for p in layout.placements]
    trim = dwg.g(id="trim")
    waste = band.difference(unary_union(shapes)) if shapes else band
    for part in polygon_parts(waste, 1e-9):
        trim.add(dwg.polygon(frame.points(part.exterior.coords[:-1]), class_="trim", fill="#ff7f0e",
                             fill_opacity=0.5, stroke="none"))
    dwg.add(trim)
    pieces_group = dwg.g(id="pieces")
    for placement, shape in zip(layout.placements, shapes):
        pieces_group.add(dwg.polygon(frame.points(shape.exterior.coords[:-1]), class_="piece", fill="#cfe2f3",
                                     stroke="black", stroke_width=0.5))
    dwg.add(pieces_group)
    return dwg

def render(result: ResultFile, mode: str = "seams", out: Optional[Union[str, Path]] = None,
           layout: Optional[NestLayout] = None) -> str:
    """
    Render a result as SVG

    Args:
        result: Loaded result file
        mode: One of "seams", "nest", "overlaps"
        out: Optional path to write
        layout: Nest layout to draw instead of recomputing it

    Returns:
        str: The SVG document
    """
    if mode == "seams":
        dwg = render_seams(result)
    elif mode == "nest":
        dwg = render_nest(result, layout)
    elif mode == "overlaps":
        dwg = render_overlaps(result)
    else:
        raise ValueError(f"Unknown render mode {mode!r}, expected one of {', '.join(MODES)}")
    svg = dwg.tostring()
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(svg, encoding="utf-8")
        logger.debug("Wrote %s", path)
    return svg
