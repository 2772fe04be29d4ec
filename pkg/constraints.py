"""
Manufacturing constraints as linear rows over seam offsets

Seams are referenced as (ply id, index) with index 0 the boundary seam at
offset 0. Boundary seams cut nothing and carry no overlap, so they only
appear in the spool-width rows (as the constant 0).

Disjunctive constraints (parallel overlaps, triple overlaps, stay-outs, ply
quality) become linear once a branch is chosen for each; a BranchAssignment
records those choices and fixes one linear subspace.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import Point
from shapely.geometry.base import BaseGeometry

import config
from geometry import (
    Interval,
    Strip,
    classify_vertices,
    line_intersection,
    merge_intervals,
    project_polygon,
    subtract_intervals,
    triple_overlap_area,
)
from model import ConfigError, Design, ManufacturingConfig, Ply, StayOutZone, seam_to_line

logger = logging.getLogger(__name__)

SeamRef = Tuple[str, int]

ABOVE = 1
BELOW = -1

@dataclass(frozen=True)
class SeamRow:
    """
    Linear row sum(coeff * offset) <relation> rhs over seam references

    Terms on boundary seams (index 0) multiply the constant offset 0.
    """

    terms: Tuple[Tuple[SeamRef, float], ...]
    relation: str
    rhs: float
    kind: str
    label: str = ""
    vacuous: bool = False

    def value(self, positions: Mapping[SeamRef, float]) -> float:
        return sum(coeff * positions_get(positions, ref) for ref, coeff in self.terms)

    def violation(self, positions: Mapping[SeamRef, float]) -> float:
        value = self.value(positions)
        if self.relation == "<=":
            return max(0.0, value - self.rhs)
        if self.relation == ">=":
            return max(0.0, self.rhs - value)
        return abs(value - self.rhs)

def positions_get(positions: Mapping[SeamRef, float], ref: SeamRef) -> float:
    if ref[1] == 0:
        return 0.0
    return positions[ref]

def positions_of(design: Design, ply_ids: Sequence[str]) -> Dict[SeamRef, float]:
    """Offsets of every seam of the given plies keyed by seam reference"""
    return {(ply_id, k): x for ply_id in ply_ids for k, x in enumerate(design.offsets(ply_id))}

@dataclass
class BranchAssignment:
    """
    One branch per disjunctive constraint

    parallel: (earlier ref, later ref) -> +1 when the first seam lies on the
        low side of the second along the shared transverse axis
    triple: (ref, ref, ref) in canonical order -> sign of the triple determinant
    stayout: (seam ref, interval index) -> ABOVE or BELOW the prohibited interval
    quality: (seam ref, vertex key) -> ABOVE or BELOW the vertex band
    """

    parallel: Dict[Tuple[SeamRef, SeamRef], int] = field(default_factory=dict)
    triple: Dict[Tuple[SeamRef, SeamRef, SeamRef], int] = field(default_factory=dict)
    stayout: Dict[Tuple[SeamRef, int], int] = field(default_factory=dict)
    quality: Dict[Tuple[SeamRef, Tuple[str, int]], int] = field(default_factory=dict)

@dataclass(frozen=True)
class Bundle:
    plies: Tuple[Ply, ...]
    index: int = 0

    def __post_init__(self):
        if not self.plies:
            raise ConfigError("A bundle needs at least one ply")

    @property
    def size(self) -> int:
        return len(self.plies)

    @property
    def ply_ids(self) -> Tuple[str, ...]:
        return tuple(p.id for p in self.plies)

def bundle_size(M: int, N: int, n: int) -> int:
    """
    Number of plies per bundle for a thickness tolerance of N overlaps in M plies

    Args:
        M: Plies in the layup
        N: Maximum number of intersecting overlaps allowed
        n: Overlaps allowed to stack within a bundle

    Returns:
        int: m = ceil(M * n / N)
    """
    if N == 0:
        raise ConfigError("max_overlaps N must be > 0")
    if not 1 <= n <= N <= M:
        raise ConfigError(f"bundle_size needs 1 <= n <= N <= M, got n={n}, N={N}, M={M}")
    return -(-M * n // N)

def achieved_tolerance(m: int, n: int) -> float:
    """Worst-case thickness variation guaranteed by bundles of m plies"""
    return n / m

def _orientation_key(angle: float) -> float:
    return round(angle % math.pi, 9) % round(math.pi, 9)

def _perpendicularity(a: float, b: float) -> float:
    return abs(math.sin(a - b))

def make_bundles(layup: Sequence[Ply], m: int, sort_by_orientation: bool = False) -> List[Bundle]:
    """
    Group a layup into bundles of m plies

    Without sorting, bundles are consecutive groups in stack order. With
    sorting, plies are grouped by orientation: full single-orientation bundles
    first, then remainders are combined, filling each bundle from the largest
    remaining orientation and topping it up with the orientation most
    perpendicular to those already in it.

    Args:
        layup: Plies in any order
        m: Bundle size
        sort_by_orientation: Group plies by fiber orientation

    Returns:
        List[Bundle]: Bundles, plies inside each in stack order
    """
    if not layup:
        raise ConfigError("Cannot bundle an empty layup")
    if m < 1:
        raise ConfigError("Bundle size must be >= 1")
    stack = sorted(layup, key=lambda p: (p.stack_index, p.id))
    if not sort_by_orientation:
        groups = [stack[k:k + m] for k in range(0, len(stack), m)]
        return [Bundle(tuple(g), index) for index, g in enumerate(groups)]

    by_angle: Dict[float, List[Ply]] = {}
    for ply in stack:
        by_angle.setdefault(_orientation_key(ply.fiber_angle), []).append(ply)

    groups: List[List[Ply]] = []
    for angle in sorted(by_angle):
        plies = by_angle[angle]
        while len(plies) >= m:
            groups.append(plies[:m])
            plies = plies[m:]
        by_angle[angle] = plies

    while any(by_angle.values()):
        primary = max((a for a in by_angle if by_angle[a]), key=lambda a: (len(by_angle[a]), -a))
        group = by_angle[primary][:m]
        by_angle[primary] = by_angle[primary][m:]
        chosen = [primary]
        while len(group) < m and any(by_angle.values()):
            partner = max(
                (a for a in by_angle if by_angle[a]),
                key=lambda a: (min(_perpendicularity(a, c) for c in chosen), len(by_angle[a]), -a),
            )
            need = m - len(group)
            group += by_angle[partner][:need]
            by_angle[partner] = by_angle[partner][need:]
            chosen.append(partner)
        groups.append(sorted(group, key=lambda p: (p.stack_index, p.id)))

    return [Bundle(tuple(g), index) for index, g in enumerate(groups)]

def stayout_intervals(ply: Ply, zones: Sequence[StayOutZone], config_: ManufacturingConfig) -> List[Interval]:
    """
    Prohibited offsets on a ply: stay-out projections dilated by w_l/2

    Args:
        ply: The ply
        zones: Stay-out zones
        config_: Manufacturing requirements

    Returns:
        List[Interval]: Merged open intervals in ply offset coordinates,
        clipped to [0, width]
    """
    dilation = config_.half_overlap + config.STAYOUT_MARGIN
    intervals = []
    for zone in zones:
        lo, hi = project_polygon(zone.polygon, ply.normal)
        lo, hi = lo - ply.base - dilation, hi - ply.base + dilation
        lo, hi = max(lo, 0.0), min(hi, ply.width)
        if hi > lo:
            intervals.append(Interval(lo, hi))
    return merge_intervals(intervals)

def spool_rows(ply_id: str, offsets: Sequence[float], config_: ManufacturingConfig) -> List[SeamRow]:
    """
    Gap rows between adjacent seams of a ply: w_min <= x_{i+1} - x_i <= w_s - w_l

    Args:
        ply_id: Ply carrying the seams
        offsets: Its seam offsets (boundary seam first)
        config_: Manufacturing requirements

    Returns:
        List[SeamRow]: Two rows per adjacent pair
    """
    rows = []
    for i in range(len(offsets) - 1):
        terms = (((ply_id, i + 1), 1.0), ((ply_id, i), -1.0))
        rows.append(SeamRow(terms, "<=", config_.max_gap, "spool", f"{ply_id}[{i}:{i + 1}] max gap"))
        rows.append(SeamRow(terms, ">=", config_.min_subply_width, "spool", f"{ply_id}[{i}:{i + 1}] min gap"))
    return rows

def completion_row(ply: Ply, n_seams: int, config_: ManufacturingConfig) -> SeamRow:
    """Keeps a finished ply finished: x_last >= width + w_l/2 - w_s"""
    bound = ply.width + config_.half_overlap - config_.spool_width
    return SeamRow((((ply.id, n_seams - 1), 1.0),), ">=", bound, "complete", f"{ply.id} coverage")

def is_complete(ply: Ply, last_offset: float, config_: ManufacturingConfig) -> bool:
    """The remainder past the last seam fits one spool width"""
    return ply.width - last_offset + config_.half_overlap <= config_.spool_width + 1e-12

def parallel_sign(a: Ply, b: Ply) -> int:
    """+1 when two same-orientation plies share d_perp, -1 when opposed"""
    return 1 if float(np.dot(a.normal, b.normal)) >= 0.0 else -1

def same_orientation(a: Ply, b: Ply) -> bool:
    gap = abs(a.fiber_angle - b.fiber_angle) % math.pi
    return min(gap, math.pi - gap) <= config.PARALLEL_ANGLE_TOL

def transverse_position(ply: Ply, offset: float, reference: Ply) -> float:
    """Position of a seam along the reference ply's d_perp axis"""
    return parallel_sign(reference, ply) * (ply.base + offset)

def _parallel_row(ref_lo: SeamRef, ply_lo: Ply, ref_hi: SeamRef, ply_hi: Ply, w_l: float) -> SeamRow:
    # t_hi - t_lo >= w_l, positions measured along ply_lo's d_perp
    s = parallel_sign(ply_lo, ply_hi)
    terms = ((ref_hi, float(s)), (ref_lo, -1.0))
    rhs = w_l - s * ply_hi.base + ply_lo.base
    return SeamRow(terms, ">=", rhs, "parallel", f"{ref_lo[0]}[{ref_lo[1]}] | {ref_hi[0]}[{ref_hi[1]}]")

def _det(p: Ply, q: Ply) -> float:
    return float(p.normal[0] * q.normal[1] - q.normal[0] * p.normal[1])

def triple_coefficients(pi: Ply, pj: Ply, pk: Ply) -> Tuple[float, float, float]:
    """
    Coefficients (alpha, beta, d_min / h) of the (ij)k combination

    The signed distance from the i/j intersection to seam k is
    s = alpha*c_i + beta*c_j + c_k, and the strips clear each other when
    |s| >= h * (1 + |alpha| + |beta|) with h = w_l / 2.
    """
    d_ij = _det(pi, pj)
    alpha = _det(pj, pk) / d_ij
    beta = _det(pk, pi) / d_ij
    return alpha, beta, 1.0 + abs(alpha) + abs(beta)

def triple_determinant(lines) -> float:
    return float(np.linalg.det(np.array([list(l) for l in lines], dtype=float)))

def _triple_row(refs: Tuple[SeamRef, SeamRef, SeamRef], plies: Tuple[Ply, Ply, Ply], sign: int,
                w_l: float) -> SeamRow:
    (ri, rj, rk), (pi, pj, pk) = refs, plies
    alpha, beta, scale = triple_coefficients(pi, pj, pk)
    sigma = sign * (1 if _det(pi, pj) > 0.0 else -1)
    # c = -(base + x), so s = -alpha*x_i - beta*x_j - x_k - const
    const = alpha * pi.base + beta * pj.base + pk.base
    terms = ((ri, -sigma * alpha), (rj, -sigma * beta), (rk, -float(sigma)))
    rhs = 0.5 * w_l * scale + sigma * const
    label = f"({ri[0]}[{ri[1]}] {rj[0]}[{rj[1]}]) {rk[0]}[{rk[1]}]"
    return SeamRow(terms, ">=", rhs, "triple", label)

def triple_rows_for(refs: Tuple[SeamRef, SeamRef, SeamRef], plies: Tuple[Ply, Ply, Ply], sign: int,
                    config_: ManufacturingConfig) -> List[SeamRow]:
    """The three rows (ij)k, (jk)i, (ki)j of one seam triple under a sign branch"""
    (ri, rj, rk), (pi, pj, pk) = refs, plies
    w_l = config_.overlap_width
    return [
        _triple_row((ri, rj, rk), (pi, pj, pk), sign, w_l),
        _triple_row((rj, rk, ri), (pj, pk, pi), sign, w_l),
        _triple_row((rk, ri, rj), (pk, pi, pj), sign, w_l),
    ]

def quality_rows(ply: Ply, offsets: Sequence[float], branch: BranchAssignment,
                 config_: ManufacturingConfig, vertex_offsets: Optional[Sequence[Tuple[Tuple[str, int], float, float]]] = None
                 ) -> List[SeamRow]:
    """
    Distance rows between seams and small/flimsy cone-tip vertices

    Args:
        ply: The ply
        offsets: Its seam offsets (boundary seam first)
        branch: Side of each vertex band per seam; missing entries are taken
            from the current offsets
        config_: Manufacturing requirements
        vertex_offsets: Precomputed (key, vertex offset, minimum) triples

    Returns:
        List[SeamRow]: One row per (interior seam, classified vertex)
    """
    if vertex_offsets is None:
        vertex_offsets = classified_vertex_offsets(ply, config_)
    rows = []
    for k in range(1, len(offsets)):
        ref = (ply.id, k)
        for key, xv, minimum in vertex_offsets:
            side = branch.quality.get((ref, key))
            if side is None:
                side = ABOVE if offsets[k] >= xv else BELOW
            if side == ABOVE:
                row = SeamRow(((ref, 1.0),), ">=", xv + minimum, "quality", f"{ply.id}[{k}] above {key[0]}{key[1]}",
                              vacuous=minimum == 0.0)
            else:
                row = SeamRow(((ref, 1.0),), "<=", xv - minimum, "quality", f"{ply.id}[{k}] below {key[0]}{key[1]}",
                              vacuous=minimum == 0.0)
            rows.append(row)
    return rows

def classified_vertex_offsets(ply: Ply, config_: ManufacturingConfig) -> List[Tuple[Tuple[str, int], float, float]]:
    """(key, offset, minimum) for each small and flimsy vertex of a ply"""
    small, flimsy = classify_vertices(ply)
    result = []
    for index, vertex in enumerate(ply.polygon):
        if vertex in small:
            result.append((("small", index), ply.offset_of(vertex), config_.small_min))
        elif vertex in flimsy:
            result.append((("flim", index), ply.offset_of(vertex), config_.flimsy_min))
    return result

class BundleContext:
    """
    Derived geometry of one bundle, shared by every row generator

    Precomputes prohibited stay-out intervals and classified vertices per
    ply, which ply pairs carry parallel-overlap rows and which ply triples
    carry triple-overlap rows (with their common region).
    """

    def __init__(self, bundle: Bundle, zones: Sequence[StayOutZone], config_: ManufacturingConfig):
        self.bundle = bundle
        self.zones = tuple(zones)
        self.config = config_
        self.plies: Dict[str, Ply] = {p.id: p for p in bundle.plies}
        self.order: Tuple[str, ...] = bundle.ply_ids
        self.stayouts: Dict[str, List[Interval]] = {
            p.id: stayout_intervals(p, self.zones, config_) for p in bundle.plies
        }
        self.vertices = {p.id: classified_vertex_offsets(p, config_) for p in bundle.plies}

    @cached_property
    def parallel_partners(self) -> Dict[str, Tuple[str, ...]]:
        """Other plies sharing the orientation and overlapping in plane"""
        partners: Dict[str, List[str]] = {pid: [] for pid in self.order}
        for a, b in itertools.combinations(self.order, 2):
            pa, pb = self.plies[a], self.plies[b]
            if same_orientation(pa, pb) and pa.shape.intersection(pb.shape).area > config.AREA_TOL:
                partners[a].append(b)
                partners[b].append(a)
        return {pid: tuple(v) for pid, v in partners.items()}

    @cached_property
    def ply_triples(self) -> List[Tuple[Tuple[str, str, str], BaseGeometry, BaseGeometry]]:
        """Mutually non-parallel ply triples with a common region of positive area"""
        triples = []
        for a, b, c in itertools.combinations(self.order, 3):
            pa, pb, pc = self.plies[a], self.plies[b], self.plies[c]
            if same_orientation(pa, pb) or same_orientation(pb, pc) or same_orientation(pa, pc):
                continue
            common = pa.shape.intersection(pb.shape).intersection(pc.shape)
            if common.area <= config.AREA_TOL:
                continue
            triples.append(((a, b, c), common, common.buffer(self.config.overlap_width)))
        return triples

    def seam_line(self, ref: SeamRef, positions: Mapping[SeamRef, float]):
        return seam_to_line(self.plies[ref[0]], positions_get(positions, ref))

    def strip(self, ref: SeamRef, positions: Mapping[SeamRef, float]) -> Strip:
        return Strip(self.seam_line(ref, positions), self.config.half_overlap)

    def interior_refs(self, positions: Mapping[SeamRef, float], ply_id: str) -> List[SeamRef]:
        return sorted(ref for ref in positions if ref[0] == ply_id and ref[1] > 0)

    def triple_in_scope(self, refs: Tuple[SeamRef, SeamRef, SeamRef], common: BaseGeometry,
                        near: BaseGeometry, positions: Mapping[SeamRef, float]) -> bool:
        """
        A seam triple is in scope when a pairwise intersection lies inside the
        dilated common region, or (for shallow crossings, whose intersection
        can sit far from the overlap) when the three strips already overlap
        inside it
        """
        lines = [self.seam_line(r, positions) for r in refs]
        for p, q in ((0, 1), (1, 2), (2, 0)):
            point = line_intersection(lines[p], lines[q])
            if point is not None and near.contains(Point(point)):
                return True
        plies = [self.plies[r[0]] for r in refs]
        shallow = min(abs(_det(plies[p], plies[q])) for p, q in ((0, 1), (1, 2), (2, 0))) < 0.5
        if shallow:
            strips = [Strip(line, self.config.half_overlap) for line in lines]
            return triple_overlap_area(*strips, common) > config.AREA_TOL
        return False

    def active_triples(self, positions: Mapping[SeamRef, float]):
        """Yield (refs, plies, common region) for every in-scope seam triple"""
        for ids, common, near in self.ply_triples:
            groups = [self.interior_refs(positions, pid) for pid in ids]
            plies = tuple(self.plies[pid] for pid in ids)
            for refs in itertools.product(*groups):
                if self.triple_in_scope(refs, common, near, positions):
                    yield refs, plies, common

    def parallel_pairs(self, positions: Mapping[SeamRef, float]):
        """Yield (ref_a, ref_b) for every cross-ply parallel pair of interior seams"""
        for a in self.order:
            for b in self.parallel_partners[a]:
                if self.order.index(b) <= self.order.index(a):
                    continue
                for ra in self.interior_refs(positions, a):
                    for rb in self.interior_refs(positions, b):
                        yield ra, rb

def branch_at(ctx: BundleContext, positions: Mapping[SeamRef, float]) -> BranchAssignment:
    """
    Branch assignment induced by a set of seam positions

    Args:
        ctx: Bundle context
        positions: Offset of every seam in the bundle

    Returns:
        BranchAssignment: The side of every disjunction the positions lie on
    """
    branch = BranchAssignment()
    for ra, rb in ctx.parallel_pairs(positions):
        pa = ctx.plies[ra[0]]
        ta = transverse_position(pa, positions[ra], pa)
        tb = transverse_position(ctx.plies[rb[0]], positions[rb], pa)
        branch.parallel[(ra, rb)] = 1 if tb >= ta else -1
    for refs, plies, _ in ctx.active_triples(positions):
        delta = triple_determinant([ctx.seam_line(r, positions) for r in refs])
        branch.triple[refs] = 1 if delta >= 0.0 else -1
    for ref, x in positions.items():
        if ref[1] == 0:
            continue
        for k, (lo, hi) in enumerate(ctx.stayouts[ref[0]]):
            branch.stayout[(ref, k)] = ABOVE if x >= 0.5 * (lo + hi) else BELOW
        for key, xv, _ in ctx.vertices[ref[0]]:
            branch.quality[(ref, key)] = ABOVE if x >= xv else BELOW
    return branch

def parallel_rows(ctx: BundleContext, positions: Mapping[SeamRef, float], branch: BranchAssignment) -> List[SeamRow]:
    """
    Parallel-overlap rows |t_a - t_b| >= w_l for same-orientation seams

    Cross-ply pairs take their side from the branch; adjacent interior seams
    of one ply use the sorted order.

    Args:
        ctx: Bundle context
        positions: Offset of every seam in the bundle
        branch: Branch assignment covering every cross-ply pair

    Returns:
        List[SeamRow]: One row per pair
    """
    w_l = ctx.config.overlap_width
    rows = []
    for ply_id in ctx.order:
        refs = ctx.interior_refs(positions, ply_id)
        ply = ctx.plies[ply_id]
        for lo, hi in zip(refs, refs[1:]):
            rows.append(_parallel_row(lo, ply, hi, ply, w_l))
    for ra, rb in ctx.parallel_pairs(positions):
        side = branch.parallel.get((ra, rb))
        if side is None:
            raise KeyError(f"No parallel branch for {ra} / {rb}")
        pa, pb = ctx.plies[ra[0]], ctx.plies[rb[0]]
        if side > 0:
            rows.append(_parallel_row(ra, pa, rb, pb, w_l))
        else:
            rows.append(_parallel_row(rb, pb, ra, pa, w_l))
    return rows

def triple_rows(ctx: BundleContext, positions: Mapping[SeamRef, float], branch: BranchAssignment) -> List[SeamRow]:
    """
    Triple-overlap rows for every in-scope, mutually non-parallel seam triple

    Args:
        ctx: Bundle context
        positions: Offset of every seam in the bundle
        branch: Branch assignment with a sign for every in-scope triple

    Returns:
        List[SeamRow]: Three rows per triple
    """
    rows = []
    for refs, plies, _ in ctx.active_triples(positions):
        sign = branch.triple.get(refs)
        if sign is None:
            raise KeyError(f"No triple branch for {refs}")
        rows.extend(triple_rows_for(refs, plies, sign, ctx.config))
    return rows

def stayout_rows(ctx: BundleContext, positions: Mapping[SeamRef, float], branch: BranchAssignment) -> List[SeamRow]:
    """
    Keep each interior seam on its branch side of the prohibited intervals

    Only the nearest interval on each side yields a row; the others are
    implied.
    """
    rows = []
    for ref in sorted(positions):
        if ref[1] == 0:
            continue
        lower, upper = None, None
        for k, (lo, hi) in enumerate(ctx.stayouts[ref[0]]):
            side = branch.stayout.get((ref, k))
            if side is None:
                side = ABOVE if positions[ref] >= 0.5 * (lo + hi) else BELOW
            if side == ABOVE:
                lower = hi if lower is None else max(lower, hi)
            elif upper is None:
                upper = lo
        if lower is not None:
            rows.append(SeamRow(((ref, 1.0),), ">=", lower, "stayout", f"{ref[0]}[{ref[1]}] above stay-out"))
        if upper is not None:
            rows.append(SeamRow(((ref, 1.0),), "<=", upper, "stayout", f"{ref[0]}[{ref[1]}] below stay-out"))
    return rows

def collect_rows(ctx: BundleContext, positions: Mapping[SeamRef, float], branch: BranchAssignment,
                 completed: Sequence[str] = ()) -> List[SeamRow]:
    """
    Every row of the local program for a bundle at a branch assignment

    Args:
        ctx: Bundle context
        positions: Offset of every seam placed so far
        branch: Branch assignment
        completed: Plies already fully partitioned

    Returns:
        List[SeamRow]: Spool, coverage, parallel, triple, stay-out and quality rows
    """
    rows: List[SeamRow] = []
    counts: Dict[str, int] = {}
    for ply_id, k in positions:
        counts[ply_id] = max(counts.get(ply_id, 0), k + 1)
    for ply_id in ctx.order:
        n = counts.get(ply_id, 0)
        if n == 0:
            continue
        offsets = [positions_get(positions, (ply_id, k)) for k in range(n)]
        rows.extend(spool_rows(ply_id, offsets, ctx.config))
        if ply_id in completed and n > 1:
            rows.append(completion_row(ctx.plies[ply_id], n, ctx.config))
        rows.extend(quality_rows(ctx.plies[ply_id], offsets, branch, ctx.config, ctx.vertices[ply_id]))
    rows.extend(parallel_rows(ctx, positions, branch))
    rows.extend(triple_rows(ctx, positions, branch))
    rows.extend(stayout_rows(ctx, positions, branch))
    return rows

def enumerate_subspaces(ctx: BundleContext, ply_id: str, design: Design) -> List[Tuple[Interval, BranchAssignment]]:
    """
    Candidate linear subspaces for the next seam on a ply

    The window (x_prev + w_min, min(x_prev + w_s - w_l, width)] loses the
    prohibited stay-out intervals, the vertex quality bands and the bands of
    width 2*w_l around existing parallel seams. Each remaining piece is paired
    with the branch assignment taken at its upper end.

    Args:
        ctx: Bundle context
        ply_id: Ply receiving the seam
        design: Current design (the ply has at least its boundary seam)

    Returns:
        List[Tuple[Interval, BranchAssignment]]: Farthest piece first
    """
    ply = ctx.plies[ply_id]
    cfg = ctx.config
    offsets = design.offsets(ply_id)
    x_prev = offsets[-1]
    window = Interval(x_prev + cfg.min_subply_width, min(x_prev + cfg.max_gap, ply.width))

    prohibited = list(ctx.stayouts[ply_id])
    for _, xv, minimum in ctx.vertices[ply_id]:
        if minimum > 0.0:
            prohibited.append(Interval(xv - minimum, xv + minimum))
    for other_id in ctx.parallel_partners[ply_id]:
        other = ctx.plies[other_id]
        for y in design.offsets(other_id)[1:]:
            x_equiv = transverse_position(other, y, ply) - ply.base
            prohibited.append(Interval(x_equiv - cfg.overlap_width, x_equiv + cfg.overlap_width))

    pieces = subtract_intervals(window, prohibited)
    base_positions = positions_of(design, ctx.order)
    new_ref = (ply_id, len(offsets))
    result = []
    for piece in reversed(pieces):
        positions = dict(base_positions)
        positions[new_ref] = piece.hi
        result.append((piece, branch_at(ctx, positions)))
    logger.debug("Ply %s: window [%.6g, %.6g] -> %d subspaces", ply_id, window.lo, window.hi, len(result))
    return result
