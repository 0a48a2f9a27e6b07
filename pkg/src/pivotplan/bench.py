"""Benchmark harness: solved counts, plan durations and compute time over a
tilt-limit sweep, for the full planner and the rolling-only baseline."""

import csv
import dataclasses
import json
import logging
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PlannerConfig
from .errors import NoPlan, ParseError, PivotPlanError
from .geometry import load_mesh
from .graph import build_offline, feasible_grasps_at, plan_online
from .shapes import fit_to_cube
from .validate import replay

log = logging.getLogger(__name__)

COLUMNS = ["object", "theta_max_deg", "method", "problems", "solved", "valid", "mean_duration_s",
           "mean_compute_s"]
METHODS = ("pivoting", "pickplace")


@dataclass(frozen=True)
class BenchConfig:
    theta_sweep_deg: tuple = (10, 20, 30, 40, 50, 60, 70, 80)
    problems_per_object: int = 100
    scale_to: float = 100.0
    seed: int = 0
    baseline: bool = True
    # endpoints are sampled so that some grasp is feasible at this tilt
    # limit (None: the largest sweep value)
    sample_theta_deg: float = None
    max_searches: int = 25
    validate: bool = False
    planner: dict = field(default_factory=dict)

    def __post_init__(self):
        sweep = tuple(float(t) for t in self.theta_sweep_deg)
        if not sweep or any(not 0 < t < 90 for t in sweep):
            raise ValueError("theta sweep values must lie in (0, 90) degrees")
        object.__setattr__(self, "theta_sweep_deg", sweep)
        if self.problems_per_object < 1:
            raise ValueError("problems_per_object must be >= 1")

    @property
    def planner_config(self):
        return PlannerConfig.from_dict(self.planner)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown bench keys: {sorted(unknown)}")
        return cls(**d)


def load_bench_config(path):
    try:
        return BenchConfig.from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad bench config ({exc})") from None


def load_corpus(directory):
    """``{name: mesh}`` for every ``*.obj`` in ``directory`` (sorted)."""
    paths = sorted(Path(directory).glob("*.obj"))
    if not paths:
        raise ParseError(f"no .obj meshes in {directory}")
    return {p.stem: load_mesh(p) for p in paths}


def _object_rng(seed, name):
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


def sample_problems(offline, n, rng, limits, max_tries=200):
    """``n`` (start, goal) pose pairs resting on stable placements with some
    feasible grasp, placed so the whole object lies inside the workspace box."""
    usable = [p.id for p in offline.placements if feasible_grasps_at(p.id, offline, limits)]
    if not usable:
        return []
    lo, hi = np.asarray(limits.box_min, float), np.asarray(limits.box_max, float)
    verts = offline.model.hull.vertices

    def draw():
        for _ in range(max_tries):
            pid = usable[rng.integers(len(usable))]
            yaw = rng.uniform(-np.pi, np.pi)
            xy = rng.uniform(lo[:2], hi[:2])
            pose = offline.placement_pose(pid, yaw, xy)
            pts = pose.apply(verts)
            if np.all(pts[:, :2] >= lo[:2]) and np.all(pts[:, :2] <= hi[:2]):
                return pose
        raise RuntimeError("could not place the object inside the workspace box")

    return [(draw(), draw()) for _ in range(n)]


def run_object(name, mesh, bench, progress=None):
    """Rows for one object across the sweep and methods."""
    base = bench.planner_config
    mesh = fit_to_cube(mesh, bench.scale_to)
    t0 = time.perf_counter()
    off = build_offline(mesh, base)
    log.info("%s: offline %.2f s, %d grasps, %d placements", name, time.perf_counter() - t0, len(off.grasps),
             off.n_placements)
    theta_s = max(bench.theta_sweep_deg) if bench.sample_theta_deg is None else bench.sample_theta_deg
    problems = sample_problems(off, bench.problems_per_object, _object_rng(bench.seed, name),
                               base.limits.with_theta(np.deg2rad(theta_s)))
    methods = METHODS if bench.baseline else METHODS[:1]
    rows = []
    for theta in bench.theta_sweep_deg:
        limits = base.limits.with_theta(np.deg2rad(theta))
        for method in methods:
            solved, valid, durations, times = 0, 0, [], []
            for start, goal in problems:
                t = time.perf_counter()
                try:
                    plan = plan_online(start, goal, off, base, limits, force_rolling=(method == "pickplace"),
                                       max_searches=bench.max_searches)
                except NoPlan:
                    plan = None
                times.append(time.perf_counter() - t)
                if plan is None:
                    continue
                solved += 1
                durations.append(plan.duration())
                if bench.validate:
                    try:
                        valid += replay(plan, off.model, off.grasps, base, limits).passed
                    except PivotPlanError:
                        pass
            rows.append({
                "object": name, "theta_max_deg": theta, "method": method, "problems": len(problems),
                "solved": solved, "valid": valid if bench.validate else "",
                "mean_duration_s": round(float(np.mean(durations)), 6) if durations else "",
                "mean_compute_s": round(float(np.mean(times)), 4) if times else "",
            })
            if progress:
                progress(rows[-1])
    return rows


def run_bench(meshes, bench, progress=None):
    rows = []
    for name in sorted(meshes):
        rows.extend(run_object(name, meshes[name], bench, progress))
    return sorted(rows, key=lambda r: (r["object"], r["theta_max_deg"], METHODS.index(r["method"])))


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        w.writerows(rows)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
