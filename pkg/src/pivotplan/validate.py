"""Replay a plan and certify it.

The object pose is rebuilt from the gripper poses and modes alone: rolling
carries the object rigidly, pivoting lets it swing about the grasp axis
until the hull rests on the table.  Stability is re-checked with the force
balance of ``mechanics.equilibrium_feasible`` as well as the robust test.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial.transform import Rotation

from .errors import ConeDegenerate, ModelMismatch
from .geometry import Pose
from .mechanics import (Boundary, ContactState, Motion, PlanarConfig, UncertaintyBounds, equilibrium_feasible,
                        is_pivot_stable_robust, predict_contact_state, project_friction_cone)
from .transforms import quat_to_matrix

CONTACT = "ContactViolation"
STABILITY = "StabilityViolation"
COUPLING = "CouplingViolation"
SLIP = "SlipViolation"
MODE = "ModeViolation"
BOX = "BoxViolation"
TILT = "TiltViolation"
GOAL = "GoalMismatch"
KINEMATIC = "KinematicMismatch"
CHAIN = "ChainBreak"


@dataclass
class Tolerances:
    contact: float = 0.5
    coupling: float = 1e-9
    slip: float = 1e-6
    box: float = 1e-6
    tilt: float = 1e-6
    goal_position: float = 1e-3
    goal_rotation: float = 1e-6
    kinematic_position: float = 1e-3
    kinematic_rotation: float = 1e-6
    pivot_substeps: int = 16


@dataclass
class StepRecord:
    segment: int
    step: int
    contact_height: float = 0.0
    stability_margin: float = math.nan
    tilt: float = 0.0
    box_violation: float = 0.0
    mode_ok: bool = True
    reasons: list = field(default_factory=list)

    def to_dict(self):
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else None)
                for k, v in self.__dict__.items()}


@dataclass
class ValidationReport:
    records: list
    failures: list

    @property
    def passed(self):
        return not self.failures

    @property
    def first_failure(self):
        return self.failures[0] if self.failures else None

    def reasons(self):
        return sorted({r for _, _, r in self.failures})

    def to_dict(self):
        return {"passed": self.passed,
                "first_failure": list(self.first_failure) if self.failures else None,
                "failures": [list(f) for f in self.failures],
                "records": [r.to_dict() for r in self.records]}


def rotation_between(Ra, Rb):
    """Angle of Ra^T Rb, accurate for tiny angles."""
    return float(Rotation.from_matrix(Ra.T @ Rb).magnitude())


def _rot_x(psi):
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _pivot_angle(G_R, G_p, rel_R, rel_p, verts, guess=0.0, window=0.5):
    """Swing about gripper X nearest ``guess`` that puts the lowest vertex at z = 0.

    The search covers ``guess +- window`` first and the whole circle if that
    finds nothing.  An edge resting on the table makes the lowest height peak
    at zero without changing sign, so near-zero local maxima count as roots.
    """
    w = verts @ rel_R.T + rel_p
    r = G_R[2]
    zero = 1e-9 * max(1.0, float(np.ptp(verts, axis=0).max()))

    def heights(psi):
        c, s = np.cos(psi), np.sin(psi)
        return G_p[2] + r[0] * w[:, 0] + r[1] * (c * w[:, 1] - s * w[:, 2]) + r[2] * (s * w[:, 1] + c * w[:, 2])

    def lowest(psi):
        return float(heights(psi).min())

    if abs(lowest(guess)) <= zero:
        return guess
    for half, n in ((window, 201), (np.pi, 1441)):
        grid = np.linspace(guess - half, guess + half, n)
        f = heights(grid[:, None]).min(axis=1)
        roots = []
        for k in np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]:
            if f[k] == 0.0:
                roots.append(grid[k])
            else:
                roots.append(brentq(lowest, grid[k], grid[k + 1], xtol=1e-15, rtol=1e-15))
        for k in np.nonzero((f[1:-1] >= f[:-2]) & (f[1:-1] >= f[2:]))[0] + 1:
            res = minimize_scalar(lambda a: -lowest(a), bounds=(grid[k - 1], grid[k + 1]), method="bounded",
                                  options={"xatol": 1e-13})
            if abs(lowest(res.x)) <= zero:
                roots.append(float(res.x))
        if roots:
            return min(roots, key=lambda a: abs(a - guess))
    return None


def _track_pivot(Ra, pa, Rb, pb, rel_R, rel_p, verts, substeps):
    """Follow the contact-keeping swing while the gripper moves from (Ra, pa)
    to (Rb, pb) along a slerp/lerp path; the swing changes continuously, so
    each substep takes the root nearest the previous one."""
    turn = Rotation.from_matrix(Rb @ Ra.T).as_rotvec()
    psi = 0.0
    for s in np.linspace(0.0, 1.0, substeps + 1)[1:]:
        R = Rotation.from_rotvec(s * turn).as_matrix() @ Ra
        psi = _pivot_angle(R, (1 - s) * pa + s * pb, rel_R, rel_p, verts, psi)
        if psi is None:
            return None
    return psi


class _Geometry:
    """Object-frame data the validator needs, derived independently of the planner."""

    def __init__(self, model):
        self.hull_vertices = model.hull.vertices
        self.simplified = model.simplified.vertices
        self.d_h = model.d_h
        self.com = model.com
        self.mesh_vertices = model.mesh.vertices
        self.tie = 1e-9 * model.hull.scale

    def first_lowest(self, z):
        return int(np.nonzero(z <= z.min() + self.tie)[0][0])

    def contact_vertex(self, Ra, Rb):
        """Vertex lowest after the increment; ties go to the one lowest before it."""
        zb = self.simplified @ Rb[2]
        near = np.nonzero(zb <= zb.min() + self.tie)[0]
        return self.simplified[near[self.first_lowest(self.simplified[near] @ Ra[2])]]

    def planar(self, R, t, grasp, mu, com_radius, pose_error):
        """Pivoting-plane projection of O, C and Q for pose (R, t)."""
        x = R @ grasp.axis
        y = np.array([-x[1], x[0], 0.0])
        y /= np.linalg.norm(y)
        z = np.cross(x, y)
        sv = self.simplified @ R.T + t
        lowest = sv[:, 2].min()
        O = sv[self.first_lowest(sv[:, 2])]
        cand = sv[sv[:, 2] <= lowest + 2 * self.d_h + 1e-9 * np.ptp(sv, axis=0).max()]
        oy = (cand - O) @ y
        C = R @ self.com + t - O
        Q = R @ grasp.center + t - O
        tilt = math.asin(min(1.0, abs(x[2])))
        mu_eff = project_friction_cone(mu, tilt)
        cfg = PlanarConfig([C @ y, C @ z], [Q @ y, Q @ z], mu_eff)
        bounds = UncertaintyBounds((oy.min() - self.d_h, oy.max() + self.d_h),
                                   (C @ y - com_radius, C @ y + com_radius),
                                   (Q @ y - pose_error, Q @ y + pose_error))
        return cfg, bounds, y


def replay_segment(plan, grasp, model, config, limits, start, goal, tol=None, segment=0):
    """Validate one single-grasp plan; returns (records, failures, final pose)."""
    tol = tol or Tolerances()
    geo = _Geometry(model)
    steps = plan.steps
    N = len(steps)
    G_R = [quat_to_matrix(s.gripper.orientation) for s in steps]
    G_p = [np.asarray(s.gripper.position, float) for s in steps]
    modes = [s.mode for s in steps]
    coupled = [modes[i] == "rolling" or modes[i + 1] == "rolling" for i in range(N - 1)]
    planned = [(quat_to_matrix(p.orientation), np.asarray(p.position, float)) for p in plan.object_poses]
    records = [StepRecord(segment, i) for i in range(N)]

    def fail(i, reason):
        if reason not in records[i].reasons:
            records[i].reasons.append(reason)

    # reconstruct object poses
    X = [(quat_to_matrix(start.orientation), np.asarray(start.position, float))]
    rel = (G_R[0].T @ X[0][0], G_R[0].T @ (X[0][1] - G_p[0]))
    for i in range(N - 1):
        rel_R, rel_p = rel
        if not coupled[i]:
            psi = _track_pivot(G_R[i], G_p[i], G_R[i + 1], G_p[i + 1], rel_R, rel_p, geo.hull_vertices,
                               tol.pivot_substeps)
            if psi is None:
                fail(i + 1, CONTACT)
                psi = 0.0
            Rx = _rot_x(psi)
            rel_R, rel_p = Rx @ rel_R, Rx @ rel_p
        rel = (rel_R, rel_p)
        X.append((G_R[i + 1] @ rel_R, G_p[i + 1] + G_R[i + 1] @ rel_p))

    lo = np.asarray(limits.box_min, float)
    hi = np.asarray(limits.box_max, float)
    for i in range(N):
        R, t = X[i]
        rec = records[i]
        # grasp held where the plan says
        if np.linalg.norm(R @ grasp.center + t - G_p[i]) > tol.kinematic_position \
                or np.linalg.norm(G_R[i][:, 0] - R @ grasp.axis) > tol.kinematic_rotation:
            fail(i, KINEMATIC)
        if i < len(planned):
            if (rotation_between(R, planned[i][0]) > tol.kinematic_rotation
                    or np.linalg.norm(t - planned[i][1]) > tol.kinematic_position):
                fail(i, KINEMATIC)
        # (a) table contact
        rec.contact_height = float((geo.mesh_vertices @ R[2]).min() + t[2])
        if abs(rec.contact_height) > tol.contact:
            fail(i, CONTACT)
        # (e) workspace
        over = np.maximum(lo - G_p[i], 0.0) + np.maximum(G_p[i] - hi, 0.0)
        rec.box_violation = float(over.max())
        if rec.box_violation > tol.box:
            fail(i, BOX)
        rec.tilt = math.acos(max(-1.0, min(1.0, G_R[i][2, 2])))
        if rec.tilt > limits.theta_max + tol.tilt:
            fail(i, TILT)
        # (b) stability of pivoting steps
        if modes[i] == "pivoting":
            try:
                cfg, bounds, _ = geo.planar(R, t, grasp, config.mu, config.com_radius, config.pose_error)
            except (ConeDegenerate, ValueError):
                fail(i, STABILITY)
                continue
            rec.stability_margin = float((cfg.Q[0] - cfg.C[0]) * cfg.Q[0])
            if not (is_pivot_stable_robust(bounds) and equilibrium_feasible(cfg).feasible):
                fail(i, STABILITY)

    for i in range(N - 1):
        (Ra, ta), (Rb, tb) = X[i], X[i + 1]
        cls = steps[i].sliding
        # (c) rolling coupling against the planned object motion
        if coupled[i]:
            if cls != "S1":
                records[i].mode_ok = False
                fail(i, MODE)
            if i + 1 < len(planned):
                ra = G_R[i].T @ planned[i][0]
                rb = G_R[i + 1].T @ planned[i + 1][0]
                if rotation_between(ra, rb) > tol.coupling:
                    fail(i, COUPLING)
        # (d) contact displacement
        o = geo.contact_vertex(Ra, Rb)
        disp = ((Rb @ o + tb) - (Ra @ o + ta))[:2]
        moved = float(np.linalg.norm(disp))
        if cls == "S1" and moved > tol.slip:
            fail(i, SLIP)
        elif cls in ("S2", "S3") and moved > tol.slip:
            for j, (R, t) in ((i, X[i]), (i + 1, X[i + 1])):
                try:
                    cfg, _, y = geo.planar(R, t, grasp, config.mu, config.com_radius, config.pose_error)
                    toward = np.sign(disp @ y[:2]) == np.sign(cfg.Q[0])
                    motion = Motion.TowardQ if toward else Motion.AwayFromQ
                    state = predict_contact_state(cfg, motion, config.tie_tol * model.hull.scale)
                except (Boundary, ConeDegenerate, ValueError):
                    state = ContactState.Unstable
                if state != ContactState.Sliding:
                    records[i].mode_ok = False
                    fail(i, MODE)
                    break

    # (f) goal
    R_end, t_end = X[-1]
    if goal is not None:
        if (rotation_between(R_end, quat_to_matrix(goal.orientation)) > tol.goal_rotation
                or np.linalg.norm(t_end - np.asarray(goal.position, float)) > tol.goal_position):
            fail(N - 1, GOAL)
    failures = [(segment, r.step, reason) for r in records for reason in r.reasons]
    return records, failures, Pose.from_matrix(R_end, t_end)


def replay(plan, model, offline_grasps, config, limits=None, start=None, goal=None, tol=None):
    """Validate a single-grasp plan or a multi-step plan.

    ``offline_grasps`` maps grasp id -> Grasp.  For a single plan ``start``
    defaults to the plan's first object pose.
    """
    limits = limits or config.limits
    segments = plan.segments if hasattr(plan, "segments") else [plan]
    if hasattr(plan, "segments"):
        start = start or plan.start
        goal = goal or plan.goal
    records, failures = [], []
    current = start or segments[0].object_poses[0]
    for k, seg in enumerate(segments):
        grasp = offline_grasps.get(seg.grasp_id) if isinstance(offline_grasps, dict) else None
        if grasp is None:
            raise ModelMismatch(f"plan uses unknown grasp id {seg.grasp_id}")
        first = seg.object_poses[0]
        if k > 0 and (rotation_between(quat_to_matrix(first.orientation), quat_to_matrix(current.orientation))
                      > 1e-6 or np.linalg.norm(first.position - current.position) > 1e-3):
            failures.append((k, 0, CHAIN))
        seg_goal = segments[k + 1].object_poses[0] if k + 1 < len(segments) else goal
        rec, fails, end = replay_segment(seg, grasp, model, config, limits, first if k > 0 else current,
                                         seg_goal, tol, segment=k)
        records += rec
        failures += fails
        current = end
    return ValidationReport(records, failures)
