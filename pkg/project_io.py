"""
Project and result files

Both are JSON documents carrying a ``format_version``. Fiber angles are
written in degrees and held in radians in memory; the degrees read from a
file are kept so that saving reproduces them exactly.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import config
from model import ConfigError, CostParams, Design, GeometryError, ManufacturingConfig, Ply, StayOutZone

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

class ProjectFileError(ValueError):
    """Raised for unreadable or schema-violating project and result files"""

@dataclass
class Project:
    plies: List[Ply]
    zones: List[StayOutZone]
    config: ManufacturingConfig
    cost_params: Optional[CostParams] = None
    sort_by_orientation: bool = False
    fiber_degrees: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for ply in self.plies:
            self.fiber_degrees.setdefault(ply.id, math.degrees(ply.fiber_angle))

    def ply(self, ply_id: str) -> Ply:
        for ply in self.plies:
            if ply.id == ply_id:
                return ply
        raise KeyError(ply_id)

    @property
    def ply_ids(self) -> List[str]:
        return [p.id for p in self.plies]

@dataclass
class ResultFile:
    project: Project
    design: Design
    bundles: List[List[str]]
    bundle_size: int
    max_overlaps: int
    objective: float
    violations: List[Dict[str, Any]] = field(default_factory=list)
    report: Dict[str, Any] = field(default_factory=dict)
    cost: Optional[Dict[str, Any]] = None
    nest: Optional[Dict[str, Any]] = None

def _require(data: Dict, key: str, where: str):
    if not isinstance(data, dict):
        raise ProjectFileError(f"{where}: expected an object")
    if key not in data:
        raise ProjectFileError(f"{where}.{key}: missing")
    return data[key]

def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProjectFileError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ProjectFileError(f"{where}: non-finite number")
    return float(value)

def _vertices(value, where: str) -> List[List[float]]:
    if not isinstance(value, list) or len(value) < 3:
        raise ProjectFileError(f"{where}: expected a list of at least 3 [x, y] pairs")
    points = []
    for k, pair in enumerate(value):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ProjectFileError(f"{where}[{k}]: expected [x, y]")
        points.append([_number(pair[0], f"{where}[{k}][0]"), _number(pair[1], f"{where}[{k}][1]")])
    return points

def _check_version(data: Dict, where: str):
    version = data.get("format_version", config.FORMAT_VERSION)
    if version != config.FORMAT_VERSION:
        raise ProjectFileError(f"{where}.format_version: unsupported version {version!r}")

def _config_from_dict(data: Dict, where: str) -> ManufacturingConfig:
    known = {f.name for f in fields(ManufacturingConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ProjectFileError(f"{where}: unknown fields {', '.join(unknown)}")
    try:
        return ManufacturingConfig(**data)
    except TypeError as exc:
        raise ProjectFileError(f"{where}: {exc}") from exc
    except ConfigError as exc:
        raise ProjectFileError(f"{where}: {exc}") from exc

def _cost_from_dict(data: Optional[Dict], where: str) -> Optional[CostParams]:
    if data is None:
        return None
    known = {f.name for f in fields(CostParams)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ProjectFileError(f"{where}: unknown fields {', '.join(unknown)}")
    try:
        return CostParams(**data)
    except (TypeError, ConfigError) as exc:
        raise ProjectFileError(f"{where}: {exc}") from exc

def project_from_dict(data: Dict) -> Project:
    """
    Build a project from its JSON document

    Args:
        data: Parsed JSON

    Returns:
        Project: Validated project
    """
    if not isinstance(data, dict):
        raise ProjectFileError("project: expected an object")
    _check_version(data, "project")
    raw_plies = _require(data, "plies", "project")
    if not isinstance(raw_plies, list) or not raw_plies:
        raise ProjectFileError("project.plies: expected a non-empty list")

    plies, degrees, seen = [], {}, set()
    for k, raw in enumerate(raw_plies):
        where = f"plies[{k}]"
        ply_id = str(_require(raw, "id", where))
        if ply_id in seen:
            raise ProjectFileError(f"{where}.id: duplicate ply id {ply_id!r}")
        seen.add(ply_id)
        stack_index = raw.get("stack_index", k)
        if isinstance(stack_index, bool) or not isinstance(stack_index, int):
            raise ProjectFileError(f"{where}.stack_index: expected an integer")
        angle = _number(_require(raw, "fiber_angle_degrees", where), f"{where}.fiber_angle_degrees")
        if not 0.0 <= angle < 180.0:
            raise ProjectFileError(f"{where}.fiber_angle_degrees: {angle} outside [0, 180)")
        vertices = _vertices(_require(raw, "vertices", where), f"{where}.vertices")
        try:
            plies.append(Ply(ply_id, stack_index, tuple(map(tuple, vertices)), math.radians(angle)))
        except (GeometryError, ConfigError) as exc:
            raise ProjectFileError(f"{where}: {exc}") from exc
        degrees[ply_id] = angle

    zones = []
    raw_zones = data.get("stayouts", [])
    if not isinstance(raw_zones, list):
        raise ProjectFileError("project.stayouts: expected a list")
    for k, raw in enumerate(raw_zones):
        where = f"stayouts[{k}]"
        vertices = _vertices(_require(raw, "vertices", where), f"{where}.vertices")
        try:
            zones.append(StayOutZone(tuple(map(tuple, vertices))))
        except GeometryError as exc:
            raise ProjectFileError(f"{where}: {exc}") from exc

    manufacturing = _config_from_dict(_require(data, "config", "project"), "config")
    cost_params = _cost_from_dict(data.get("cost_params"), "cost_params")
    sort_flag = bool(data.get("sort_by_orientation", False))
    return Project(plies, zones, manufacturing, cost_params, sort_flag, degrees)

def project_to_dict(project: Project) -> Dict:
    return {
        "format_version": config.FORMAT_VERSION,
        "plies": [
            {
                "id": ply.id,
                "stack_index": ply.stack_index,
                "fiber_angle_degrees": project.fiber_degrees[ply.id],
                "vertices": [[p.x, p.y] for p in ply.polygon],
            }
            for ply in project.plies
        ],
        "stayouts": [{"vertices": [[p.x, p.y] for p in zone.polygon]} for zone in project.zones],
        "config": {f.name: getattr(project.config, f.name) for f in fields(ManufacturingConfig)},
        "cost_params": (
            {f.name: getattr(project.cost_params, f.name) for f in fields(CostParams)}
            if project.cost_params is not None else None
        ),
        "sort_by_orientation": project.sort_by_orientation,
    }

def _read_json(path: PathLike) -> Dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProjectFileError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProjectFileError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc

def _write_json(path: PathLike, data: Dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")

def load_project(path: PathLike) -> Project:
    return project_from_dict(_read_json(path))

def save_project(project: Project, path: PathLike):
    _write_json(path, project_to_dict(project))
    logger.debug("Wrote project %s", path)

def result_to_dict(result: ResultFile) -> Dict:
    plies = {}
    for ply in result.project.plies:
        offsets = result.design.offsets(ply.id)
        lines = []
        for x in offsets:
            a, b = float(ply.normal[0]), float(ply.normal[1])
            lines.append([a, b, -(ply.base + x)])
        plies[ply.id] = {"offsets": list(offsets), "lines": lines}
    return {
        "format_version": config.FORMAT_VERSION,
        "project": project_to_dict(result.project),
        "seams": plies,
        "bundles": [list(b) for b in result.bundles],
        "bundle_size": result.bundle_size,
        "max_overlaps": result.max_overlaps,
        "objective": result.objective,
        "violations": result.violations,
        "report": result.report,
        "cost": result.cost,
        "nest": result.nest,
    }

def result_from_dict(data: Dict) -> ResultFile:
    if not isinstance(data, dict):
        raise ProjectFileError("result: expected an object")
    _check_version(data, "result")
    project = project_from_dict(_require(data, "project", "result"))
    raw_seams = _require(data, "seams", "result")
    if not isinstance(raw_seams, dict):
        raise ProjectFileError("result.seams: expected an object keyed by ply id")
    seams = {}
    for ply_id, entry in raw_seams.items():
        if ply_id not in project.ply_ids:
            raise ProjectFileError(f"result.seams.{ply_id}: unknown ply")
        offsets = _require(entry, "offsets", f"result.seams.{ply_id}")
        if not isinstance(offsets, list):
            raise ProjectFileError(f"result.seams.{ply_id}.offsets: expected a list")
        seams[ply_id] = [_number(x, f"result.seams.{ply_id}.offsets[{k}]") for k, x in enumerate(offsets)]
    try:
        design = Design(seams)
    except ConfigError as exc:
        raise ProjectFileError(f"result.seams: {exc}") from exc
    return ResultFile(
        project=project,
        design=design,
        bundles=[list(b) for b in data.get("bundles", [])],
        bundle_size=int(data.get("bundle_size", 0)),
        max_overlaps=int(data.get("max_overlaps", 0)),
        objective=float(data.get("objective", design.objective)),
        violations=list(data.get("violations", [])),
        report=dict(data.get("report") or {}),
        cost=data.get("cost"),
        nest=data.get("nest"),
    )

def load_result(path: PathLike) -> ResultFile:
    return result_from_dict(_read_json(path))

def save_result(result: ResultFile, path: PathLike):
    _write_json(path, result_to_dict(result))
    logger.debug("Wrote result %s", path)
