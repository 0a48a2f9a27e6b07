"""One-grasp reorienting planner.

The object follows a SLERP from the initial to the final orientation while
touching the table.  At every step the planner picks pivoting (object
swings freely about the grasp axis) when the robust stability test passes
and rolling (firm grasp) otherwise, then solves one QP for the gripper
rotation about the grasp axis and one for its horizontal translation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import qpsolve
from .errors import Boundary, ConeDegenerate, EmptyIntersection, PlanningInfeasible
from .geometry import Pose, contact_candidates, convex_hull, free_components, is_full_circle, simplify_mesh
from .mechanics import (ContactState, Motion, UncertaintyBounds, axis_elevation, is_pivot_stable_robust,
                        pivoting_plane_frame, planar_config, predict_contact_state)
from .transforms import aa2quat, as_quat, quat_angle, quat_mul, quat_to_matrix

PIVOTING = "pivoting"
ROLLING = "rolling"
TRANSLATION_SPEED = 100.0          # mm/s
ROTATION_SPEED = math.radians(35)  # rad/s


@dataclass
class ObjectModel:
    """Shape data the online planner needs for one object."""

    mesh: object
    hull: object
    simplified: object
    d_h: float

    @classmethod
    def from_mesh(cls, mesh, d_h):
        hull = convex_hull(mesh)
        return cls(mesh, hull, simplify_mesh(hull, d_h), float(d_h))

    @property
    def com(self):
        return self.mesh.com

    @property
    def scale(self):
        return self.hull.scale

    def rest_height(self, R):
        """Object z offset that puts the lowest hull point on the table."""
        return -float(np.min(self.hull.vertices @ R[2]))

    def resting_pose(self, q, xy=(0.0, 0.0)):
        R = quat_to_matrix(q)
        return Pose(q, [xy[0], xy[1], self.rest_height(R)])

    def lowest_contact(self, R):
        """Index of the lowest simplified-hull vertex (smallest index on ties)."""
        return _first_lowest(self.simplified.vertices @ R[2], 1e-9 * self.scale)

    def rolling_contact(self, R_a, R_b):
        """Contact vertex that stays put while rotating from R_a to R_b.

        Among the vertices lowest after the increment, take the one that was
        lowest before it, so a roll over an edge keeps an edge vertex.
        """
        v = self.simplified.vertices
        zb = v @ R_b[2]
        tol = 1e-9 * self.scale
        near = np.nonzero(zb <= zb.min() + tol)[0]
        return int(near[_first_lowest(v[near] @ R_a[2], tol)])


def _first_lowest(z, tol):
    """Smallest index among values within ``tol`` of the minimum; stable
    under round-off when a face or edge rests on the table."""
    return int(np.nonzero(z <= z.min() + tol)[0][0])


@dataclass
class ReorientTask:
    initial: Pose
    final: Pose
    grasp: object
    n_steps: int = 50
    step_time: float = 0.2

    def __post_init__(self):
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")


@dataclass
class StepPlan:
    index: int
    gripper: Pose
    mode: str
    sliding: str
    alpha: float
    contact: np.ndarray
    frame: object = field(default=None, repr=False)


@dataclass
class GraspPlan:
    grasp_id: int
    steps: list
    object_poses: list
    path_length: float
    total_rotation: float
    n_steps: int = 0
    step_time: float = 0.2

    @property
    def modes(self):
        return [s.mode for s in self.steps]

    @property
    def alpha(self):
        return np.array([s.alpha for s in self.steps])

    def duration(self, v_max=TRANSLATION_SPEED, w_max=ROTATION_SPEED):
        """Execution time with the gripper speed capped in translation and rotation."""
        t = 0.0
        for a, b in zip(self.steps[:-1], self.steps[1:]):
            d = np.linalg.norm(b.gripper.position - a.gripper.position)
            r = quat_angle(a.gripper.orientation, b.gripper.orientation)
            t += max(d / v_max, r / w_max)
        return t


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def slerp_trajectory(q_i, q_f, N):
    """N unit quaternions from q_i to q_f along the shortest arc."""
    if N < 2:
        raise ValueError("N must be >= 2")
    a, b = as_quat(q_i), as_quat(q_f)
    d = float(a @ b)
    if d < 0:
        b, d = -b, -d
    theta = math.acos(min(1.0, d))
    t = np.linspace(0.0, 1.0, N)
    if theta < 1e-12:
        out = np.repeat(a[None], N, axis=0)
    else:
        s = math.sin(theta)
        out = (np.sin((1 - t) * theta)[:, None] * a + np.sin(t * theta)[:, None] * b) / s
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    out[0], out[-1] = a, b
    return out


def choose_modes(bounds):
    """Pivot wherever the robust stability test passes, roll elsewhere."""
    return [PIVOTING if is_pivot_stable_robust(b) else ROLLING for b in bounds]


def tilt_limit_in_plane(theta_max, grasp_axis):
    """Half-aperture of the tilt cone seen in the pivoting plane.

    With the axis elevated by e, a gripper rotated by alpha from the plane's
    upright direction tilts by arccos(cos(alpha) cos(e)).
    """
    e = axis_elevation(grasp_axis)
    if e > theta_max + 1e-12:
        raise EmptyIntersection(f"grasp axis elevation {math.degrees(e):.3f} deg exceeds the tilt limit")
    return math.acos(min(1.0, math.cos(theta_max) / math.cos(e)))


def orientation_from_alpha(alpha, frame):
    return quat_mul(aa2quat(alpha, frame.x_axis), frame.orientation)


def gripper_rotation_qp(coupled, lower, upper, beta_object, k):
    """Gripper angles about the grasp axis.

    ``coupled[i]`` marks increments i -> i+1 made with a firm grasp; there
    alpha must follow the object: alpha[i+1] - alpha[i] = beta_object[i].
    """
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    N = len(lower)
    D = np.diff(np.eye(N), axis=0)
    H = 2.0 * (D.T @ D + k * np.eye(N))
    rows = np.nonzero(np.asarray(coupled, bool))[0]
    prob = qpsolve.QProblem(H, np.zeros(N), D[rows], np.asarray(beta_object, float)[rows],
                            lb=lower, ub=upper)
    sol = qpsolve.solve(prob)
    if not sol.ok:
        raise PlanningInfeasible("RotationQP", f"rotation QP {sol.status}")
    alpha = sol.x.copy()
    # land coupled increments exactly on the object rotation
    for i in rows:
        alpha[i + 1] = alpha[i] + beta_object[i]
    return alpha


def gripper_translation_qp(classes, delta, oq, ot, p_start, p_goal, limits, xi, T):
    """Horizontal gripper velocities for the N-1 increments.

    ``delta[i]`` is the gripper displacement that keeps the contact fixed;
    ``oq[i]`` / ``ot[i]`` list the cone directions for S2 increments.
    Returns an (N-1, 2) array.
    """
    M = len(classes)
    delta = np.asarray(delta, float).reshape(M, 2)
    lo = np.asarray(limits.box_min, float)[:2]
    hi = np.asarray(limits.box_max, float)[:2]
    p_start = np.asarray(p_start, float)[:2]
    p_goal = np.asarray(p_goal, float)[:2]
    if np.any(p_start < lo - 1e-9) or np.any(p_start > hi + 1e-9):
        raise PlanningInfeasible("TranslationQP", "start position outside the workspace box")
    fixed = np.array([c == "S1" for c in classes])
    free = np.nonzero(~fixed)[0]
    v = np.zeros((M, 2))
    v[fixed] = delta[fixed] / T
    disp_fixed = np.cumsum(T * v, axis=0)  # cumulative displacement of fixed increments
    nf = len(free)
    if nf == 0:
        pos = p_start + disp_fixed
        if np.any(pos < lo - 1e-9) or np.any(pos > hi + 1e-9):
            raise PlanningInfeasible("TranslationQP", "sticking path leaves the workspace box")
        if np.linalg.norm(pos[-1] - p_goal) > 1e-6:
            raise PlanningInfeasible("TranslationQP", "sticking path misses the goal position")
        return v
    n = 2 * nf
    # cumulative position j = p_start + disp_fixed[j] + T * sum_{free i <= j} v_i
    C = np.zeros((M, nf))
    for col, i in enumerate(free):
        C[i:, col] = T
    A_in, b_in = [], []
    for ax in range(2):
        Ax = np.zeros((M, n))
        Ax[:, ax::2] = C
        base = p_start[ax] + disp_fixed[:, ax]
        A_in += [Ax, -Ax]
        b_in += [lo[ax] - base, base - hi[ax]]
    A_eq = np.zeros((2, n))
    A_eq[0, 0::2] = T
    A_eq[1, 1::2] = T
    b_eq = p_goal - p_start - disp_fixed[-1]
    cone_rows, cone_b = [], []
    for col, i in enumerate(free):
        if classes[i] != "S2":
            continue
        for q_dir, t_dir in zip(oq[i], ot[i]):
            for sgn in (-1.0, 1.0):
                w = xi * np.asarray(q_dir) + sgn * np.asarray(t_dir)
                row = np.zeros(n)
                row[2 * col:2 * col + 2] = w[:2]
                cone_rows.append(row)
                cone_b.append(float(w[:2] @ delta[i]) / T)
    if cone_rows:
        A_in.append(np.array(cone_rows))
        b_in.append(np.array(cone_b))
    prob = qpsolve.QProblem(2.0 * np.eye(n), np.zeros(n), A_eq, b_eq, np.vstack(A_in), np.concatenate(b_in))
    sol = qpsolve.solve(prob)
    if not sol.ok:
        raise PlanningInfeasible("TranslationQP", f"translation QP {sol.status}")
    v[free] = sol.x.reshape(nf, 2)
    # remove the tiny terminal residual left by the solver
    err = p_goal - p_start - T * v.sum(0)
    v[free] += err / (T * nf)
    return v


def _increment_class(cfg_a, cfg_b, tol):
    """S1 (stick), S2 (may slide toward Q) or S3 (may slide freely)."""
    rank = {"S1": 0, "S2": 1, "S3": 2}
    out = "S3"
    for cfg in (cfg_a, cfg_b):
        try:
            toward = predict_contact_state(cfg, Motion.TowardQ, tol) == ContactState.Sliding
            away = predict_contact_state(cfg, Motion.AwayFromQ, tol) == ContactState.Sliding
        except Boundary:
            return "S1"
        cls = "S3" if toward and away else ("S2" if toward else "S1")
        out = min(out, cls, key=rank.get)
    return out


def _choose_window(component, phi_ppf, beta_cone):
    """Per-step alpha bounds from one collision-free component.

    The component is lifted by a multiple of 2 pi per step, picking the lift
    that meets [-beta_cone, beta_cone] and stays closest to the previous one.
    Returns (lower, upper) arrays or None if some step has no overlap.
    """
    N = len(phi_ppf)
    lower, upper = np.empty(N), np.empty(N)
    if is_full_circle(component):
        return -beta_cone.copy(), beta_cone.copy()
    lo0, hi0 = component
    prev = None
    for i in range(N):
        best = None
        base_lo, base_hi = lo0 - phi_ppf[i], hi0 - phi_ppf[i]
        kc = round(-(base_lo + base_hi) / (4 * np.pi))
        for k in (kc - 1, kc, kc + 1):
            a, b = base_lo + 2 * np.pi * k, base_hi + 2 * np.pi * k
            la, lb = max(a, -beta_cone[i]), min(b, beta_cone[i])
            if la > lb:
                continue
            mid = 0.5 * (la + lb)
            key = abs(mid - prev) if prev is not None else abs(mid)
            if best is None or key < best[0]:
                best = (key, la, lb, mid)
        if best is None:
            return None
        _, lower[i], upper[i], prev = best
    return lower, upper


# ---------------------------------------------------------------------------
# the planner
# ---------------------------------------------------------------------------

@dataclass
class StepGeometry:
    """Orientation-only quantities for every SLERP step."""

    R: np.ndarray
    height: np.ndarray
    contact_idx: np.ndarray
    frames: list
    configs: list
    bounds: list
    beta_cone: np.ndarray
    phi_ppf: np.ndarray
    gc_world: np.ndarray


def analyse_rotation(model, grasp, quats, config, limits):
    """Line-3 workspace gate plus pivoting-plane analysis for each step."""
    N = len(quats)
    R = np.array([quat_to_matrix(q) for q in quats])
    height = np.array([model.rest_height(r) for r in R])
    a = grasp.axis
    e0, e1 = grasp.reference_frame()
    clear = limits.table_clearance
    zmin, zmax = limits.box_min[2], limits.box_max[2]
    tol = config.tie_tol * model.scale
    frames, configs, bounds = [], [], []
    beta_cone = np.empty(N)
    phi = np.empty(N)
    contact_idx = np.empty(N, np.int64)
    gc_world = np.empty((N, 3))
    mu_lim = math.atan(1.0 / config.mu)
    for i in range(N):
        Ri, h = R[i], height[i]
        t = np.array([0.0, 0.0, h])
        tips = np.array([Ri @ grasp.p_left, Ri @ grasp.p_right]) + t
        if tips[:, 2].min() < clear - 1e-9:
            raise PlanningInfeasible("WorkspaceRotation", f"step {i}: fingertip below table clearance")
        gc = Ri @ grasp.center + t
        gc_world[i] = gc
        if not zmin - 1e-9 <= gc[2] <= zmax + 1e-9:
            raise PlanningInfeasible("WorkspaceRotation", f"step {i}: gripper height outside the box")
        axis_w = Ri @ a
        elev = axis_elevation(axis_w)
        if elev >= mu_lim:
            raise PlanningInfeasible("WorkspaceRotation", f"step {i}: grasp axis too steep for the friction model")
        try:
            beta_cone[i] = tilt_limit_in_plane(limits.theta_max, axis_w)
        except EmptyIntersection as exc:
            raise PlanningInfeasible("WorkspaceRotation", f"step {i}: {exc}") from None
        pose = Pose.from_matrix(Ri, t)
        ci = model.lowest_contact(Ri)
        contact_idx[i] = ci
        O = Ri @ model.simplified.vertices[ci] + t
        frame = pivoting_plane_frame(grasp, pose, O)
        try:
            cfg = planar_config(frame, Ri @ model.com + t, gc, config.mu)
        except (ConeDegenerate, ValueError) as exc:
            raise PlanningInfeasible("WorkspaceRotation", f"step {i}: {exc}") from None
        cand = contact_candidates(model.simplified, pose, model.d_h)
        ys = [frame.project(Ri @ model.simplified.vertices[j] + t)[0] for j, _ in cand]
        bounds.append(UncertaintyBounds((min(ys) - model.d_h, max(ys) + model.d_h),
                                        (cfg.C[0] - config.com_radius, cfg.C[0] + config.com_radius),
                                        (cfg.Q[0] - config.pose_error, cfg.Q[0] + config.pose_error)))
        frames.append(frame)
        configs.append(cfg)
        z_obj = Ri.T @ frame.z_axis
        phi[i] = math.atan2(z_obj @ e1, z_obj @ e0)
    phi = np.unwrap(phi)
    return StepGeometry(R, height, contact_idx, frames, configs, bounds, beta_cone, phi, gc_world)


def contact_shift(model, grasp, R_a, R_b, contact_b):
    """Horizontal gripper displacement that keeps material contact point fixed."""
    o = model.simplified.vertices[contact_b]
    return ((R_b - R_a) @ (grasp.center - o))[:2]


def plan_one_grasp(task, model, intervals, config, limits=None, force_rolling=False):
    """Plan a one-grasp reorientation; raises PlanningInfeasible with a stage tag."""
    limits = limits or config.limits
    grasp = task.grasp
    N, T = task.n_steps, task.step_time
    q_i, q_f = as_quat(task.initial.orientation), as_quat(task.final.orientation)
    quats = slerp_trajectory(q_i, q_f, N)
    geo = analyse_rotation(model, grasp, quats, config, limits)
    tol = config.tie_tol * model.scale

    modes = [ROLLING] * N if force_rolling else choose_modes(geo.bounds)
    coupled = np.array([modes[i] == ROLLING or modes[i + 1] == ROLLING for i in range(N - 1)])
    beta_object = -np.diff(geo.phi_ppf)

    # rotation: try each collision-free component, keep the cheapest success
    comps = free_components(intervals)
    if not comps:
        raise PlanningInfeasible("EmptyAngleWindow", "grasp has no collision-free angle")
    best, last_err = None, None
    for comp in comps:
        win = _choose_window(comp, geo.phi_ppf, geo.beta_cone)
        if win is None:
            last_err = PlanningInfeasible("EmptyAngleWindow", "tilt and collision windows do not meet")
            continue
        try:
            alpha = gripper_rotation_qp(coupled, win[0], win[1], beta_object, config.k)
        except PlanningInfeasible as exc:
            last_err = exc
            continue
        if np.any(alpha < win[0] - 1e-7) or np.any(alpha > win[1] + 1e-7):
            last_err = PlanningInfeasible("RotationQP", "coupled angles leave the window")
            continue
        cost = float(np.sum(np.diff(alpha) ** 2) + config.k * np.sum(alpha ** 2))
        if best is None or cost < best[0]:
            best = (cost, alpha)
    if best is None:
        raise last_err
    alpha = best[1]

    # translation
    classes, delta, oq, ot = [], np.zeros((N - 1, 2)), [], []
    zhat = np.array([0.0, 0.0, 1.0])
    for i in range(N - 1):
        delta[i] = contact_shift(model, grasp, geo.R[i], geo.R[i + 1],
                                 model.rolling_contact(geo.R[i], geo.R[i + 1]))
        if coupled[i]:
            classes.append("S1")
            oq.append([])
            ot.append([])
            continue
        cls = _increment_class(geo.configs[i], geo.configs[i + 1], tol)
        classes.append(cls)
        qs, ts = [], []
        if cls == "S2":
            for j in (i, i + 1):
                d = np.sign(geo.configs[j].Q[0]) * geo.frames[j].y_axis
                qs.append(d)
                ts.append(np.cross(d, zhat))
        oq.append(qs)
        ot.append(ts)
    p_start = geo.gc_world[0][:2] + task.initial.position[:2]
    p_goal = geo.gc_world[-1][:2] + task.final.position[:2]
    v = gripper_translation_qp(classes, delta, oq, ot, p_start, p_goal, limits, config.xi, T)

    xy = np.vstack([p_start, p_start + np.cumsum(T * v, axis=0)])
    xy[-1] = p_goal
    steps, poses = [], []
    for i in range(N):
        p_grp = np.array([xy[i, 0], xy[i, 1], geo.gc_world[i][2]])
        q_grp = orientation_from_alpha(alpha[i], geo.frames[i])
        t_obj = p_grp - geo.R[i] @ grasp.center
        poses.append(Pose(quats[i], t_obj))
        contact = geo.R[i] @ model.simplified.vertices[geo.contact_idx[i]] + t_obj
        steps.append(StepPlan(i, Pose(q_grp, p_grp), modes[i], classes[i] if i < N - 1 else "",
                              float(alpha[i]), contact, geo.frames[i]))
    path = float(np.sum(np.linalg.norm(np.diff(np.array([s.gripper.position for s in steps]), axis=0), axis=1)))
    rot = float(sum(quat_angle(a.gripper.orientation, b.gripper.orientation) for a, b in zip(steps[:-1], steps[1:])))
    return GraspPlan(grasp.id, steps, poses, path, rot, N, T)


def rolling_endpoint(model, q_i, xy_i, q_f, N):
    """Object xy reached by rolling from (q_i, xy_i) to q_f without slip."""
    quats = slerp_trajectory(q_i, q_f, N)
    R = [quat_to_matrix(q) for q in quats]
    xy = np.asarray(xy_i, float)[:2].copy()
    for a, b in zip(R[:-1], R[1:]):
        o = model.simplified.vertices[model.rolling_contact(a, b)]
        xy -= ((b - a) @ o)[:2]
    return xy
