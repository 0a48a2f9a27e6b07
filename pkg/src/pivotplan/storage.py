"""JSON files for offline caches, problem specs, plans and reports.

Every file carries a ``format`` tag and an integer ``version``.  Floats are
written with Python's shortest round-trip repr, so a loaded plan replays
bit-for-bit like the one that was saved.  Poses are ``{"q": [w, x, y, z],
"p": [x, y, z]}`` in millimeters.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import PlannerConfig
from .errors import ModelMismatch, ParseError
from .geometry import AngleInterval, Grasp, Pose, StablePlacement, TriMesh
from .graph import MultiStepPlan, OfflineData
from .planner import GraspPlan, ObjectModel, StepPlan

FORMAT_VERSION = 1


def mesh_hash(mesh):
    """sha256 over the welded vertex, triangle and COM arrays."""
    h = hashlib.sha256()
    for a in (np.ascontiguousarray(mesh.vertices, "<f8"), np.ascontiguousarray(mesh.triangles, "<i8"),
              np.ascontiguousarray(mesh.com, "<f8")):
        h.update(a.tobytes())
    return h.hexdigest()


def _dump(path, kind, body):
    doc = {"format": kind, "version": FORMAT_VERSION, **body}
    Path(path).write_text(json.dumps(doc, indent=1))


def _load(path, kind):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != kind:
        raise ParseError(f"{path}: expected a {kind!r} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported {kind} version {doc.get('version')!r}")
    return doc


def _floats(a):
    return np.asarray(a, float).tolist()


# ---------------------------------------------------------------------------
# offline cache
# ---------------------------------------------------------------------------

def save_offline(path, off):
    m = off.mesh
    _dump(path, "pivotplan-offline", {
        "mesh_hash": off.mesh_hash or mesh_hash(m),
        "config": off.config.to_dict(),
        "mesh": {"vertices": _floats(m.vertices), "triangles": np.asarray(m.triangles).tolist(),
                 "com": _floats(m.com)},
        "grasps": [g.to_dict() for g in off.grasps.values()],
        "intervals": {str(k): [[iv.lo, iv.hi] for iv in v] for k, v in off.intervals.items()},
        "placements": [p.to_dict() for p in off.placements],
        "placement_grasps": [sorted(int(g) for g in s) for s in off.placement_grasps],
        "adjacency": np.asarray(off.adjacency).tolist(),
    })


def load_offline(path):
    """Inverse of :func:`save_offline`; hull and simplification are rebuilt
    from the stored mesh (both are deterministic)."""
    doc = _load(path, "pivotplan-offline")
    try:
        config = PlannerConfig.from_dict(doc["config"])
        md = doc["mesh"]
        mesh = TriMesh(np.asarray(md["vertices"], float), np.asarray(md["triangles"], int),
                       np.asarray(md["com"], float))
        grasps = {}
        for d in doc["grasps"]:
            g = Grasp.from_dict(d)
            grasps[g.id] = g
        intervals = {int(k): [AngleInterval(lo, hi) for lo, hi in v] for k, v in doc["intervals"].items()}
        placements = [StablePlacement.from_dict(d) for d in doc["placements"]]
        pg = [set(s) for s in doc["placement_grasps"]]
        adjacency = np.asarray(doc["adjacency"], dtype=np.int8)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed offline cache ({exc})") from None
    stored = doc.get("mesh_hash", "")
    if stored != mesh_hash(mesh):
        raise ModelMismatch(f"{path}: mesh hash does not match the stored mesh")
    model = ObjectModel.from_mesh(mesh, config.d_h)
    return OfflineData(model, grasps, intervals, placements, pg, adjacency, config, stored)


# ---------------------------------------------------------------------------
# problem spec
# ---------------------------------------------------------------------------

@dataclass
class ProblemSpec:
    mesh: str
    initial: Pose
    final: Pose
    overrides: dict

    def config(self, base):
        """``base`` with the spec's limits, friction and uncertainty applied."""
        d = base.to_dict()
        for key, value in self.overrides.items():
            if key == "limits":
                d["limits"].update(value)
            else:
                d[key] = value
        return PlannerConfig.from_dict(d)


SPEC_KEYS = ("mu", "com_radius", "pose_error", "d_h", "limits")


def load_problem(path):
    """Problem spec: ``mesh`` (relative to the spec file), ``initial``,
    ``final`` and optional ``mu``, ``com_radius``, ``pose_error``, ``d_h``
    and ``limits`` (``box_min``, ``box_max``, ``theta_max_deg``,
    ``table_clearance``)."""
    doc = _load(path, "pivotplan-problem")
    try:
        mesh = doc.get("mesh", "")
        if mesh and not Path(mesh).is_absolute():
            mesh = str(Path(path).parent / mesh)
        initial, final = Pose.from_dict(doc["initial"]), Pose.from_dict(doc["final"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed problem spec ({exc})") from None
    overrides = {k: doc[k] for k in SPEC_KEYS if k in doc}
    if overrides.get("mu", 1.0) <= 0:
        raise ParseError(f"{path}: mu must be positive")
    return ProblemSpec(mesh, initial, final, overrides)


def save_problem(path, mesh, initial, final, **overrides):
    unknown = set(overrides) - set(SPEC_KEYS)
    if unknown:
        raise ValueError(f"unknown problem keys: {sorted(unknown)}")
    _dump(path, "pivotplan-problem", {"mesh": str(mesh), "initial": initial.to_dict(),
                                      "final": final.to_dict(), **overrides})


def load_config(path):
    """Planner config from a JSON object (missing keys keep their defaults)."""
    try:
        d = json.loads(Path(path).read_text())
        return PlannerConfig.from_dict(d)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad config ({exc})") from None


# ---------------------------------------------------------------------------
# plans
# ---------------------------------------------------------------------------

def _segment_dict(seg, placement):
    return {
        "grasp_id": int(seg.grasp_id),
        "placement": None if placement is None else int(placement),
        "step_time": seg.step_time,
        "path_length": seg.path_length,
        "total_rotation": seg.total_rotation,
        "steps": [{"index": s.index, "mode": s.mode, "position": _floats(s.gripper.position),
                   "quaternion": _floats(s.gripper.orientation), "sliding": s.sliding, "alpha": s.alpha,
                   "contact": _floats(s.contact)} for s in seg.steps],
        "object_poses": [p.to_dict() for p in seg.object_poses],
    }


def _segment_from(d):
    steps = [StepPlan(s["index"], Pose(s["quaternion"], s["position"]), s["mode"], s["sliding"],
                      float(s["alpha"]), np.asarray(s.get("contact", [np.nan] * 3), float))
             for s in d["steps"]]
    poses = [Pose.from_dict(p) for p in d["object_poses"]]
    return GraspPlan(int(d["grasp_id"]), steps, poses, float(d["path_length"]), float(d["total_rotation"]),
                     len(steps), float(d["step_time"]))


def save_plan(path, plan, mesh_hash_value="", config=None):
    """Write a GraspPlan or MultiStepPlan with the config it was planned under."""
    if isinstance(plan, GraspPlan):
        plan = MultiStepPlan(plan.object_poses[0], plan.object_poses[-1], [plan], [], [])
    # the placement reached at the end of each segment (None for the goal)
    ends = list(plan.placements) + [None]
    _dump(path, "pivotplan-plan", {
        "mesh_hash": mesh_hash_value,
        "config": None if config is None else config.to_dict(),
        "start": plan.start.to_dict(),
        "goal": plan.goal.to_dict(),
        "edges": [[int(u), int(v)] for u, v in plan.edges],
        "segments": [_segment_dict(s, p) for s, p in zip(plan.segments, ends)],
        "waypoints": [[w.to_dict() for w in pair] for pair in plan.waypoints],
        "searches": plan.searches,
        "trace": plan.trace,
    })


def load_plan(path):
    """Returns ``(MultiStepPlan, mesh_hash, PlannerConfig or None)``."""
    doc = _load(path, "pivotplan-plan")
    try:
        segments = [_segment_from(d) for d in doc["segments"]]
        placements = [d["placement"] for d in doc["segments"]][:-1]
        plan = MultiStepPlan(Pose.from_dict(doc["start"]), Pose.from_dict(doc["goal"]), segments,
                             [tuple(e) for e in doc.get("edges", [])], placements,
                             [[Pose.from_dict(w) for w in pair] for pair in doc.get("waypoints", [])],
                             int(doc.get("searches", 0)), list(doc.get("trace", [])))
        config = PlannerConfig.from_dict(doc["config"]) if doc.get("config") else None
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed plan ({exc})") from None
    return plan, doc.get("mesh_hash", ""), config


def save_report(path, report):
    _dump(path, "pivotplan-report", report.to_dict())
