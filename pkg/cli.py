"""
Command line for the ply partitioner

    python cli.py partition project.json --out result.json
    python cli.py sweep project.json --steps 20 --out sweep.csv
    python cli.py render result.json --mode seams --out seams.svg
    python cli.py validate result.json project.json
    python cli.py bench --trials 200 --seed 1 --out bench.csv

Exit codes: 0 success, 1 input error, 2 infeasible or invalid design.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

import config
from constraints import Bundle, bundle_size, make_bundles
from cost import estimate_cost, extract_subplies, nest, spool_sweep
from model import Design
from project_io import (
    Project,
    ProjectFileError,
    ResultFile,
    load_project,
    load_result,
    project_to_dict,
    save_result,
)
from render import MODES, render
from search import (
    InfeasibleError,
    beam_partition,
    greedy_partition,
    partition_layup,
    total_partitioned_length,
    validate,
)
from synthetic import bench_trial

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2

BENCH_COLUMNS = ["trial", "zones", "greedy_total", "beam_total", "greedy_nodes", "beam_nodes", "equal"]
SWEEP_COLUMNS = ["w_s", "n_seams", "A_l", "A_trim", "material_cost", "seam_cost", "total", "status"]

def _result_bundles(result: ResultFile) -> List[Bundle]:
    project = result.project
    if result.bundles:
        return [Bundle(tuple(project.ply(pid) for pid in ids), k) for k, ids in enumerate(result.bundles)]
    M, N = project.config.overlap_counts(len(project.plies))
    m = min(bundle_size(M, N, min(project.config.base_overlaps, N)), len(project.plies))
    return make_bundles(project.plies, m, project.sort_by_orientation)

def cmd_partition(args) -> int:
    project = load_project(args.project)
    if args.seed is not None:
        logger.debug("Seed %d given; partitioning draws no random numbers", args.seed)
    print(f"Partitioning {len(project.plies)} plies (beam width {args.beam_width})...")
    try:
        outcome = partition_layup(project.plies, project.zones, project.config, args.beam_width,
                                  project.sort_by_orientation)
    except InfeasibleError as exc:
        print(f"Error: {exc}")
        if exc.ply_id is not None and exc.window is not None:
            print(f"Failing ply: {exc.ply_id}, window [{exc.window[0]:.6g}, {exc.window[1]:.6g}]")
        if args.out and exc.design is not None:
            report = exc.report.to_dict() if exc.report is not None else {}
            save_result(ResultFile(project, exc.design, [], 0, 0, exc.design.objective, [], report), args.out)
        return EXIT_INFEASIBLE

    cost = None
    if project.cost_params is not None:
        cost = estimate_cost(outcome.design, project.plies, project.config, project.cost_params).to_dict()
    layout = None
    if args.nest:
        pieces = extract_subplies(outcome.design, project.plies, project.config)
        layout = nest(pieces, project.config.spool_width).to_dict()
    result = ResultFile(
        project=project,
        design=outcome.design,
        bundles=[list(b.ply_ids) for b in outcome.bundles],
        bundle_size=outcome.bundle_size,
        max_overlaps=outcome.max_overlaps,
        objective=outcome.design.objective,
        violations=[v.to_dict() for v in outcome.violations],
        report=outcome.report.to_dict(),
        cost=cost,
        nest=layout,
    )
    if args.out:
        save_result(result, args.out)
        print(f"Wrote {args.out}")
    print(f"{outcome.design.seam_count} seams in {len(outcome.bundles)} bundles of {outcome.bundle_size}, "
          f"{len(outcome.violations)} violations")
    return EXIT_OK if not outcome.violations else EXIT_INFEASIBLE

def cmd_sweep(args) -> int:
    project = load_project(args.project)
    if project.cost_params is None:
        print("Error: project has no cost_params")
        return EXIT_INPUT
    try:
        points = spool_sweep(project.plies, project.zones, project.config, project.cost_params, args.steps)
        status = EXIT_OK
    except InfeasibleError as exc:
        print(f"Error: {exc}")
        points = None
        status = EXIT_INFEASIBLE

    rows = []
    if points is None:
        lo, hi = project.cost_params.spool_min, project.cost_params.spool_max
        for w in np.linspace(lo, hi, args.steps):
            rows.append({"w_s": float(w), "status": "infeasible"})
    else:
        for point in points:
            row = {"w_s": point.spool_width, "status": point.status}
            if point.cost is not None:
                row.update({
                    "n_seams": point.cost.n_seam,
                    "A_l": point.cost.A_l,
                    "A_trim": point.cost.A_trim,
                    "material_cost": point.cost.material_cost,
                    "seam_cost": point.cost.seam_cost,
                    "total": point.cost.total,
                })
            rows.append(row)
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.out, index=False)
        print(f"Wrote {args.out}")
    else:
        print(frame.to_csv(index=False), end="")
    return status

def cmd_render(args) -> int:
    if args.mode not in MODES:
        print(f"Error: unknown mode {args.mode!r}, expected one of {', '.join(MODES)}")
        return EXIT_INPUT
    result = load_result(args.result)
    svg = render(result, args.mode, args.out)
    if args.out:
        print(f"Wrote {args.out}")
    else:
        print(svg)
    return EXIT_OK

def cmd_validate(args) -> int:
    result = load_result(args.result)
    project = load_project(args.project)
    if sorted(result.project.ply_ids) != sorted(project.ply_ids):
        print("Error: result and project ply ids differ")
        return EXIT_INPUT
    result.project = project
    violations = []
    for bundle in _result_bundles(result):
        bundle_design = Design({pid: result.design.offsets(pid) for pid in bundle.ply_ids if result.design.offsets(pid)})
        violations.extend(validate(bundle_design, bundle, project.zones, project.config))
    print(json.dumps([v.to_dict() for v in violations], indent=2, sort_keys=True))
    return EXIT_OK if not violations else EXIT_INFEASIBLE

def bench_row(trial: int, seed_seq: np.random.SeedSequence, beam_width: int) -> Dict:
    """One greedy-versus-beam comparison on a random ply, both run to failure"""
    rng = np.random.default_rng(seed_seq)
    ply, zones, config_ = bench_trial(rng)
    bundle = Bundle((ply,))
    greedy, greedy_report = greedy_partition(bundle, zones, config_, run_to_failure=True)
    beam, beam_report = beam_partition(bundle, zones, config_, beam_width, run_to_failure=True)
    greedy_total = total_partitioned_length(greedy)
    beam_total = total_partitioned_length(beam)
    equal = abs(greedy_total - beam_total) <= 1e-7
    if not equal:
        save_counterexample(trial, ply, zones, config_, greedy, beam)
    return {
        "trial": trial,
        "zones": len(zones),
        "greedy_total": round(greedy_total, 12),
        "beam_total": round(beam_total, 12),
        "greedy_nodes": greedy_report.nodes_explored,
        "beam_nodes": beam_report.nodes_explored,
        "equal": equal,
    }

def save_counterexample(trial: int, ply, zones, config_, greedy: Design, beam: Design,
                        directory: Optional[Path] = None) -> Path:
    """Write a greedy/beam divergence for later inspection"""
    directory = Path(directory or config.COUNTEREXAMPLE_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    project = Project([ply], list(zones), config_)
    payload = {
        "project": project_to_dict(project),
        "greedy": {pid: list(v) for pid, v in greedy.seams.items()},
        "beam": {pid: list(v) for pid, v in beam.seams.items()},
    }
    path = directory / f"trial_{trial:05d}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.warning("Greedy and beam search diverge on trial %d (greedy %.6f, beam %.6f), saved %s",
                   trial, total_partitioned_length(greedy), total_partitioned_length(beam), path)
    return path

def run_bench(trials: int, seed: int, beam_width: int) -> pd.DataFrame:
    """
    Compare greedy and beam search on random plies with square stay-outs

    Args:
        trials: Number of random trials
        seed: Seed of the whole run
        beam_width: Beam width of the comparison search

    Returns:
        pd.DataFrame: One row per trial
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    with ThreadPoolExecutor(max_workers=config.THREADS) as pool:
        rows = list(pool.map(lambda k: bench_row(k, seeds[k], beam_width), range(trials)))
    return pd.DataFrame(rows, columns=BENCH_COLUMNS)

def cmd_bench(args) -> int:
    print(f"Running {args.trials} trials (beam width {args.beam_width}, seed {args.seed})...")
    frame = run_bench(args.trials, args.seed, args.beam_width)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.out, index=False)
        print(f"Wrote {args.out}")
    rate = float(frame["equal"].mean())
    print(f"Greedy equals beam in {rate:.1%} of {len(frame)} trials")
    return EXIT_OK

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Partition composite plies into spool-width sub-plies.")
    parser.add_argument("--verbose", action="store_true", help="Log search progress at DEBUG level.")
    commands = parser.add_subparsers(dest="command", required=True)

    partition = commands.add_parser("partition", help="Place seams on every ply of a project.")
    partition.add_argument("project", help="Project JSON file.")
    partition.add_argument("--beam-width", type=int, default=1, help="1 for greedy search (default).")
    partition.add_argument("--seed", type=int, default=None, help="Seed for reproducible runs.")
    partition.add_argument("--nest", action="store_true", help="Also nest the sub-plies on the spool.")
    partition.add_argument("--out", default=None, help="Result JSON file.")
    partition.set_defaults(handler=cmd_partition)

    sweep = commands.add_parser("sweep", help="Estimate cost over a range of spool widths.")
    sweep.add_argument("project", help="Project JSON file with cost_params.")
    sweep.add_argument("--steps", type=int, default=10, help="Number of spool widths.")
    sweep.add_argument("--out", default=None, help="CSV file (stdout when omitted).")
    sweep.set_defaults(handler=cmd_sweep)

    draw = commands.add_parser("render", help="Draw a result as SVG.")
    draw.add_argument("result", help="Result JSON file.")
    draw.add_argument("--mode", default="seams", help="seams, nest or overlaps.")
    draw.add_argument("--out", default=None, help="SVG file (stdout when omitted).")
    draw.set_defaults(handler=cmd_render)

    check = commands.add_parser("validate", help="Re-check a result against its project.")
    check.add_argument("result", help="Result JSON file.")
    check.add_argument("project", help="Project JSON file.")
    check.set_defaults(handler=cmd_validate)

    bench = commands.add_parser("bench", help="Compare greedy and beam search on random plies.")
    bench.add_argument("--trials", type=int, default=200, help="Number of random trials.")
    bench.add_argument("--seed", type=int, default=0, help="Seed of the run.")
    bench.add_argument("--beam-width", type=int, default=10000, help="Beam width compared against greedy.")
    bench.add_argument("--out", default=None, help="CSV file.")
    bench.set_defaults(handler=cmd_bench)
    return parser

def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    level = logging.DEBUG if args.verbose else getattr(logging, str(config.LOG_LEVEL).upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except (ProjectFileError, ValueError) as e:
        print(f"Error: {e}")
        return EXIT_INPUT

if __name__ == "__main__":
    sys.exit(main())
