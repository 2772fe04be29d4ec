"""
Seam insertion and global search

Plies of a bundle are partitioned one after another. Each insertion tries the
candidate subspaces of the next seam, farthest first, and re-optimizes every
seam already placed in the bundle with one linear program per subspace.
Greedy search keeps the first feasible result; beam search keeps the best
``beam_width`` designs of every generation.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from constraints import (
    BranchAssignment,
    Bundle,
    BundleContext,
    SeamRef,
    bundle_size,
    collect_rows,
    enumerate_subspaces,
    is_complete,
    make_bundles,
    positions_of,
    branch_at,
    triple_determinant,
    triple_rows_for,
    transverse_position,
)
from geometry import Interval, overlap_band, stacking_faces, triple_overlap_area
from lp import LinearProgram, Row, solve
from model import ConfigError, Design, ManufacturingConfig, Ply, StayOutZone

logger = logging.getLogger(__name__)

COMPLETE = "complete"
INFEASIBLE = "infeasible"

# re-solves allowed when a solution brings new seam triples into scope
LAZY_ROUNDS = 4
# revalidation LPs run on a finished bundle
REVALIDATION_ROUNDS = 3

@dataclass
class SearchReport:
    nodes_explored: int = 0
    lp_solves: int = 0
    generations: int = 0
    wall_time: float = 0.0
    outcome: str = COMPLETE
    failed_ply: Optional[str] = None
    window: Optional[Tuple[float, float]] = None

    def absorb(self, other: "SearchReport"):
        """Accumulate another bundle's counters into this report"""
        self.nodes_explored += other.nodes_explored
        self.lp_solves += other.lp_solves
        self.generations += other.generations
        self.wall_time += other.wall_time
        if other.outcome != COMPLETE and self.outcome == COMPLETE:
            self.outcome = other.outcome
            self.failed_ply = other.failed_ply
            self.window = other.window

    def to_dict(self) -> Dict:
        """Counters without wall time, so saved results stay reproducible"""
        return {
            "nodes_explored": self.nodes_explored,
            "lp_solves": self.lp_solves,
            "generations": self.generations,
            "outcome": self.outcome,
            "failed_ply": self.failed_ply,
            "window": list(self.window) if self.window is not None else None,
        }

@dataclass(frozen=True)
class SearchNode:
    design: Design
    generation: int
    subspace_rank: int = 0

    def rank_key(self) -> Tuple:
        """Objective first, then fewer seams, then subspace order and offsets"""
        return (round(self.design.objective, 9), self.design.seam_count, self.subspace_rank, self.design.key())

class InfeasibleError(RuntimeError):
    """Raised when a ply cannot be partitioned any further"""

    def __init__(self, message: str, design: Optional[Design] = None, report: Optional[SearchReport] = None,
                 ply_id: Optional[str] = None, window: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.design = design
        self.report = report
        self.ply_id = ply_id
        self.window = window

@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    amount: float = 0.0
    seams: Tuple[SeamRef, ...] = ()
    area: Optional[float] = None

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "detail": self.detail,
            "amount": self.amount,
            "seams": [list(ref) for ref in self.seams],
            "area": self.area,
        }

@dataclass
class LayupResult:
    design: Design
    report: SearchReport
    bundles: List[Bundle]
    bundle_size: int
    max_overlaps: int
    violations: List[Violation] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.report.outcome == COMPLETE

def _variable_refs(ctx: BundleContext, positions: Dict[SeamRef, float]) -> List[SeamRef]:
    order = {pid: k for k, pid in enumerate(ctx.order)}
    return sorted((ref for ref in positions if ref[1] > 0), key=lambda ref: (order[ref[0]], ref[1]))

def _solve_rows(ctx: BundleContext, positions: Dict[SeamRef, float], branch: BranchAssignment,
                completed: Sequence[str], report: SearchReport) -> Optional[Design]:
    """Build and solve the local program; None when it is infeasible"""
    refs = _variable_refs(ctx, positions)
    if not refs:
        return Design({pid: (0.0,) for pid, k in positions if k == 0})
    column = {ref: k for k, ref in enumerate(refs)}

    rows = []
    for seam_row in collect_rows(ctx, positions, branch, completed):
        if seam_row.vacuous:
            continue
        coeffs = np.zeros(len(refs))
        for ref, coeff in seam_row.terms:
            if ref[1] > 0:
                coeffs[column[ref]] += coeff
        if not np.any(coeffs):
            # constant row: 0 <relation> rhs
            if seam_row.violation({}) > config.ROW_TOL:
                return None
            continue
        rows.append(Row(tuple(coeffs), seam_row.relation, seam_row.rhs, seam_row.label))

    last: Dict[str, SeamRef] = {}
    for ref in refs:
        last[ref[0]] = ref
    objective = np.zeros(len(refs))
    for ref in last.values():
        objective[column[ref]] = -1.0
    bounds = [(0.0, ctx.plies[ref[0]].width) for ref in refs]

    result = solve(LinearProgram(len(refs), objective, rows, bounds))
    report.lp_solves += 1
    if not result.optimal:
        return None

    seams: Dict[str, List[float]] = {pid: [0.0] for pid, k in positions if k == 0}
    for ref in refs:
        seams[ref[0]].append(float(result.solution[column[ref]]))
    try:
        return Design(seams)
    except ConfigError:
        return None

def _missing_triples(ctx: BundleContext, design: Design, branch: BranchAssignment):
    positions = positions_of(design, ctx.order)
    return [refs for refs, _, _ in ctx.active_triples(positions) if refs not in branch.triple]

def solve_subspace(ctx: BundleContext, design: Design, ply_id: str, piece: Interval, branch: BranchAssignment,
                   completed: Sequence[str], report: SearchReport) -> Optional[Design]:
    """
    Place a new seam in one subspace and re-optimize every seam of the bundle

    Existing seams keep their branches. When the optimum brings a new seam
    triple into scope, its sign is taken from the upper-end positions and the
    program is solved again.

    Args:
        ctx: Bundle context
        design: Current design
        ply_id: Ply receiving the seam
        piece: Candidate interval for the new seam
        branch: Branch assignment taken at the interval's upper end
        completed: Plies already finished
        report: Counters to update

    Returns:
        Optional[Design]: Re-optimized design, or None when infeasible
    """
    positions = positions_of(design, ctx.order)
    new_ref = (ply_id, len(design.offsets(ply_id)))
    positions[new_ref] = piece.hi

    for _ in range(LAZY_ROUNDS):
        solved = _solve_rows(ctx, positions, branch, completed, report)
        if solved is None:
            return None
        missing = _missing_triples(ctx, solved, branch)
        if not missing:
            return solved
        for refs in missing:
            delta = triple_determinant([ctx.seam_line(r, positions) for r in refs])
            branch.triple[refs] = 1 if delta >= 0.0 else -1
        logger.debug("Ply %s: %d seam triples came into scope, re-solving", ply_id, len(missing))
    return None

def insert_seam(ctx: BundleContext, design: Design, ply_id: str, completed: Sequence[str] = (),
                report: Optional[SearchReport] = None) -> Optional[Design]:
    """
    Add one seam to a ply, trying candidate subspaces farthest first

    Args:
        ctx: Bundle context
        design: Current design; the ply has at least its boundary seam
        ply_id: Ply receiving the seam
        completed: Plies already finished
        report: Counters to update

    Returns:
        Optional[Design]: First feasible re-optimized design, or None
    """
    report = report if report is not None else SearchReport()
    for piece, branch in enumerate_subspaces(ctx, ply_id, design):
        solved = solve_subspace(ctx, design, ply_id, piece, branch, completed, report)
        if solved is not None:
            return solved
    return None

def insert_children(ctx: BundleContext, design: Design, ply_id: str, completed: Sequence[str],
                    report: SearchReport, generation: int) -> List[SearchNode]:
    """Every feasible outcome of adding one seam, one per candidate subspace"""
    children = []
    for rank, (piece, branch) in enumerate(enumerate_subspaces(ctx, ply_id, design)):
        solved = solve_subspace(ctx, design, ply_id, piece, branch, completed, report)
        if solved is not None:
            children.append(SearchNode(solved, generation, rank))
    return children

def _window(ctx: BundleContext, design: Design, ply_id: str) -> Tuple[float, float]:
    x_prev = design.last_offset(ply_id)
    cfg = ctx.config
    return x_prev + cfg.min_subply_width, min(x_prev + cfg.max_gap, ctx.plies[ply_id].width)

def _advance(ctx: BundleContext, design: Design) -> Tuple[Design, Optional[str], List[str]]:
    """
    Start plies in bundle order until one still needs seams

    Returns:
        Tuple: (design, ply being partitioned or None when all are done,
        completed ply ids)
    """
    completed = []
    for ply_id in ctx.order:
        if not design.offsets(ply_id):
            design = design.with_offsets(ply_id, (0.0,))
        if not is_complete(ctx.plies[ply_id], design.last_offset(ply_id), ctx.config):
            return design, ply_id, completed
        completed.append(ply_id)
    return design, None, completed

def _fail(ctx: BundleContext, design: Design, ply_id: str, report: SearchReport, started: float,
          run_to_failure: bool) -> Tuple[Design, SearchReport]:
    report.outcome = INFEASIBLE
    report.failed_ply = ply_id
    report.window = _window(ctx, design, ply_id)
    report.wall_time = time.perf_counter() - started
    logger.warning("Ply %s: no feasible seam in window [%.6g, %.6g]", ply_id, *report.window)
    if run_to_failure:
        return design, report
    raise InfeasibleError(
        f"Ply {ply_id}: no feasible seam in window [{report.window[0]:.6g}, {report.window[1]:.6g}]",
        design=design, report=report, ply_id=ply_id, window=report.window,
    )

def greedy_partition(bundle: Bundle, zones: Sequence[StayOutZone], config_: ManufacturingConfig,
                     run_to_failure: bool = False) -> Tuple[Design, SearchReport]:
    """
    Partition a bundle by repeated greedy seam insertion

    Args:
        bundle: Plies, processed in order
        zones: Stay-out zones
        config_: Manufacturing requirements
        run_to_failure: Return the partial design instead of raising when a
            ply cannot be finished

    Returns:
        Tuple[Design, SearchReport]: The design and search counters
    """
    started = time.perf_counter()
    ctx = BundleContext(bundle, zones, config_)
    report = SearchReport()
    design, ply_id, completed = _advance(ctx, Design({}))
    while ply_id is not None:
        solved = insert_seam(ctx, design, ply_id, completed, report)
        if solved is None:
            return _fail(ctx, design, ply_id, report, started, run_to_failure)
        report.nodes_explored += 1
        report.generations += 1
        design, ply_id, completed = _advance(ctx, solved)
    design = revalidate(ctx, design, completed, report, run_to_failure)
    report.wall_time = time.perf_counter() - started
    logger.info("Bundle %d: %d seams in %d generations", bundle.index, design.seam_count, report.generations)
    return design, report

def beam_partition(bundle: Bundle, zones: Sequence[StayOutZone], config_: ManufacturingConfig,
                   beam_width: int, run_to_failure: bool = False) -> Tuple[Design, SearchReport]:
    """
    Partition a bundle keeping the best ``beam_width`` designs per generation

    Every candidate subspace of every frontier node is expanded. The search
    stops at the first generation containing a fully partitioned design.

    Args:
        bundle: Plies, processed in order
        zones: Stay-out zones
        config_: Manufacturing requirements
        beam_width: Designs kept per generation
        run_to_failure: Return the best partial design when the frontier empties

    Returns:
        Tuple[Design, SearchReport]: The design and search counters
    """
    if beam_width < 1:
        raise ConfigError("beam_width must be >= 1")
    started = time.perf_counter()
    ctx = BundleContext(bundle, zones, config_)
    report = SearchReport()
    design, ply_id, completed = _advance(ctx, Design({}))
    if ply_id is None:
        design = revalidate(ctx, design, completed, report, run_to_failure)
        report.wall_time = time.perf_counter() - started
        return design, report

    frontier = [SearchNode(design, 0)]
    best = frontier[0]
    generation = 0
    while frontier:
        generation += 1
        children: Dict[Tuple, SearchNode] = {}
        for node in frontier:
            node_design, node_ply, node_completed = _advance(ctx, node.design)
            for child in insert_children(ctx, node_design, node_ply, node_completed, report, generation):
                advanced, _, _ = _advance(ctx, child.design)
                child = SearchNode(advanced, generation, child.subspace_rank)
                key = advanced.key()
                if key not in children or child.rank_key() < children[key].rank_key():
                    children[key] = child
        if not children:
            break
        report.nodes_explored += len(children)
        report.generations = generation
        ranked = sorted(children.values(), key=SearchNode.rank_key)
        finished = [node for node in ranked if _advance(ctx, node.design)[1] is None]
        if finished:
            design, _, completed = _advance(ctx, finished[0].design)
            design = revalidate(ctx, design, completed, report, run_to_failure)
            report.wall_time = time.perf_counter() - started
            logger.info("Bundle %d: beam finished in %d generations, %d nodes",
                        bundle.index, generation, report.nodes_explored)
            return design, report
        frontier = ranked[:beam_width]
        if frontier[0].rank_key() < best.rank_key():
            best = frontier[0]
        logger.debug("Generation %d: %d children, keeping %d", generation, len(children), len(frontier))

    design, ply_id, _ = _advance(ctx, best.design)
    return _fail(ctx, design, ply_id, report, started, run_to_failure)

def revalidate(ctx: BundleContext, design: Design, completed: Sequence[str], report: SearchReport,
               run_to_failure: bool = False) -> Design:
    """
    Re-check a finished bundle and repair it with a full re-optimization

    Rows are regenerated at the final positions (bringing in any newly
    in-scope triples); while violations remain, one program over the whole
    bundle is solved at the branch those positions induce.
    """
    for round_ in range(REVALIDATION_ROUNDS):
        violations = check_bundle(ctx, design)
        if not violations:
            return design
        logger.info("Revalidation round %d: %d violations", round_ + 1, len(violations))
        positions = positions_of(design, ctx.order)
        solved = _solve_rows(ctx, positions, branch_at(ctx, positions), completed, report)
        if solved is None:
            break
        design = solved
    violations = check_bundle(ctx, design)
    if violations and not run_to_failure:
        report.outcome = INFEASIBLE
        raise InfeasibleError(
            f"Bundle {ctx.bundle.index}: {len(violations)} violations remain after revalidation "
            f"({violations[0].kind}: {violations[0].detail})",
            design=design, report=report,
        )
    return design

def check_bundle(ctx: BundleContext, design: Design) -> List[Violation]:
    """Every violated requirement of a design within one bundle"""
    cfg = ctx.config
    tol = config.ROW_TOL
    positions = positions_of(design, ctx.order)
    violations: List[Violation] = []

    for ply_id in ctx.order:
        ply = ctx.plies[ply_id]
        offsets = design.offsets(ply_id)
        if not offsets:
            violations.append(Violation("coverage", f"{ply_id}: no seams"))
            continue
        if abs(offsets[0]) > tol:
            violations.append(Violation("boundary", f"{ply_id}: first seam at {offsets[0]:.6g}", abs(offsets[0])))
        for k, x in enumerate(offsets):
            if x < -tol or x > ply.width + tol:
                violations.append(Violation("range", f"{ply_id}[{k}] at {x:.6g} outside [0, {ply.width:.6g}]",
                                            max(-x, x - ply.width), ((ply_id, k),)))
        for k in range(len(offsets) - 1):
            gap = offsets[k + 1] - offsets[k]
            refs = ((ply_id, k), (ply_id, k + 1))
            if gap > cfg.max_gap + tol:
                violations.append(Violation("spool", f"{ply_id}[{k}:{k + 1}] gap {gap:.6g} > {cfg.max_gap:.6g}",
                                            gap - cfg.max_gap, refs))
            if gap < cfg.min_subply_width - tol:
                violations.append(Violation("spool", f"{ply_id}[{k}:{k + 1}] gap {gap:.6g} < {cfg.min_subply_width:.6g}",
                                            cfg.min_subply_width - gap, refs))
            if k > 0 and gap < cfg.overlap_width - tol:
                violations.append(Violation("parallel", f"{ply_id}[{k}] and [{k + 1}] overlaps meet",
                                            cfg.overlap_width - gap, refs))
        if not is_complete(ply, offsets[-1], cfg):
            remainder = ply.width - offsets[-1] + cfg.half_overlap
            violations.append(Violation("coverage", f"{ply_id}: remainder {remainder:.6g} exceeds spool width",
                                        remainder - cfg.spool_width, ((ply_id, len(offsets) - 1),)))

        for k, x in enumerate(offsets[1:], start=1):
            for lo, hi in ctx.stayouts[ply_id]:
                depth = min(x - lo, hi - x)
                if depth > tol:
                    violations.append(Violation("stayout", f"{ply_id}[{k}] at {x:.6g} inside ({lo:.6g}, {hi:.6g})",
                                                depth, ((ply_id, k),)))
            for key, xv, minimum in ctx.vertices[ply_id]:
                distance = abs(x - xv)
                if distance < minimum - tol:
                    violations.append(Violation("quality", f"{ply_id}[{k}] within {distance:.6g} of {key[0]} vertex {key[1]}",
                                                minimum - distance, ((ply_id, k),)))

    for ra, rb in ctx.parallel_pairs(positions):
        pa = ctx.plies[ra[0]]
        ta = transverse_position(pa, positions[ra], pa)
        tb = transverse_position(ctx.plies[rb[0]], positions[rb], pa)
        if abs(tb - ta) < cfg.overlap_width - tol:
            violations.append(Violation("parallel", f"{ra[0]}[{ra[1]}] and {rb[0]}[{rb[1]}] overlaps meet",
                                        cfg.overlap_width - abs(tb - ta), (ra, rb)))

    for refs, plies, common in ctx.active_triples(positions):
        lines = [ctx.seam_line(r, positions) for r in refs]
        sign = 1 if triple_determinant(lines) >= 0.0 else -1
        worst = max(row.violation(positions) for row in triple_rows_for(refs, plies, sign, cfg))
        strips = [ctx.strip(r, positions) for r in refs]
        area = triple_overlap_area(*strips, common)
        if worst > tol or area > config.AREA_TOL:
            names = " ".join(f"{r[0]}[{r[1]}]" for r in refs)
            violations.append(Violation("triple", f"{names} overlaps stack", worst, tuple(refs), area))
    return violations

def validate(design: Design, bundle: Bundle, zones: Sequence[StayOutZone],
             config_: ManufacturingConfig) -> List[Violation]:
    """
    Re-check a design against every manufacturing requirement

    Args:
        design: Seam offsets per ply
        bundle: Plies the design covers
        zones: Stay-out zones
        config_: Manufacturing requirements

    Returns:
        List[Violation]: Empty when the design is valid
    """
    return check_bundle(BundleContext(bundle, zones, config_), design)

def max_stacking_depth(design: Design, plies: Sequence[Ply], config_: ManufacturingConfig) -> int:
    """Largest number of overlap bands stacked at any point of the plane"""
    bands = [
        overlap_band(ply, x, config_.half_overlap)
        for ply in plies
        for x in design.offsets(ply.id)[1:]
    ]
    faces = stacking_faces(bands)
    return max((depth for _, depth in faces), default=0)

def partition_bundle(bundle: Bundle, zones: Sequence[StayOutZone], config_: ManufacturingConfig,
                     beam_width: int = 1, run_to_failure: bool = False) -> Tuple[Design, SearchReport]:
    """Greedy search for beam width 1, beam search otherwise"""
    if beam_width == 1:
        return greedy_partition(bundle, zones, config_, run_to_failure)
    return beam_partition(bundle, zones, config_, beam_width, run_to_failure)

def partition_layup(layup: Sequence[Ply], zones: Sequence[StayOutZone], config_: ManufacturingConfig,
                    beam_width: int = 1, sort_by_orientation: bool = False,
                    run_to_failure: bool = False) -> LayupResult:
    """
    Partition a whole layup bundle by bundle

    The bundle size follows from the thickness tolerance; bundles are
    independent, so their designs are merged.

    Args:
        layup: Every ply of the laminate
        zones: Stay-out zones
        config_: Manufacturing requirements
        beam_width: 1 for greedy search, more for beam search
        sort_by_orientation: Group bundles by fiber orientation
        run_to_failure: Keep going past infeasible bundles

    Returns:
        LayupResult: Merged design, report, bundles and validation
    """
    if not layup:
        raise ConfigError("Layup has no plies")
    M, N = config_.overlap_counts(len(layup))
    m = min(bundle_size(M, N, min(config_.base_overlaps, N)), len(layup))
    bundles = make_bundles(layup, m, sort_by_orientation)
    logger.info("Layup of %d plies: N=%d, m=%d, %d bundles", len(layup), N, m, len(bundles))

    design = Design({})
    report = SearchReport()
    violations: List[Violation] = []
    for bundle in bundles:
        try:
            bundle_design, bundle_report = partition_bundle(bundle, zones, config_, beam_width, run_to_failure)
        except InfeasibleError as exc:
            if exc.report is not None:
                report.absorb(exc.report)
            partial = design.merged(exc.design) if exc.design is not None else design
            raise InfeasibleError(str(exc), design=partial, report=report, ply_id=exc.ply_id,
                                  window=exc.window) from exc
        design = design.merged(bundle_design)
        report.absorb(bundle_report)
        violations.extend(validate(bundle_design, bundle, zones, config_))
    return LayupResult(design, report, bundles, m, N, violations)

def total_partitioned_length(design: Design) -> float:
    """Sum of the last seam offsets, the quantity compared by the bench"""
    return -design.objective
