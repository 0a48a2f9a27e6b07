"""Offline grasp/placement precomputation and online multi-step search.

Nodes of the placement graph are the stable placements plus the start and
goal poses; two nodes are joined when they share a feasible grasp.  Online
search runs Dijkstra, plans each edge with every shared grasp and prunes
edges that no grasp can execute.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import EmptyRange, NoGraspFound, NoPlan, NoStablePlacement, PlanningInfeasible
from .geometry import Pose, collision_free_angles, free_components, is_full_circle, sample_grasps, \
    stable_placements, surface_samples
from .mechanics import axis_elevation
from .planner import ObjectModel, ReorientTask, plan_one_grasp
from .transforms import matrix_to_quat, quat_to_matrix, rot_axis_angle

log = logging.getLogger(__name__)

PERMISSIVE_TILT = math.radians(89.0)


@dataclass
class OfflineData:
    model: ObjectModel
    grasps: dict
    intervals: dict
    placements: list
    placement_grasps: list
    adjacency: np.ndarray
    config: object
    mesh_hash: str = ""

    @property
    def mesh(self):
        return self.model.mesh

    @property
    def n_placements(self):
        return len(self.placements)

    def placement_pose(self, pid, yaw=0.0, xy=(0.0, 0.0)):
        q = self.placements[pid].orientation
        R = rot_axis_angle([0, 0, 1], yaw) @ quat_to_matrix(q)
        return self.model.resting_pose(matrix_to_quat(R), xy)


@dataclass
class MultiStepPlan:
    start: Pose
    goal: Pose
    segments: list
    edges: list
    placements: list
    waypoints: list = field(default_factory=list)
    searches: int = 0
    trace: list = field(default_factory=list)

    @property
    def grasp_ids(self):
        return [s.grasp_id for s in self.segments]

    @property
    def path_length(self):
        return float(sum(s.path_length for s in self.segments))

    def duration(self):
        return float(sum(s.duration() for s in self.segments))


def adjacency_from_sets(sets):
    n = len(sets)
    A = np.zeros((n, n), dtype=np.int8)
    for j in range(n):
        for k in range(j + 1, n):
            if sets[j] & sets[k]:
                A[j, k] = A[k, j] = 1
    return A


def grasp_window_exists(grasp, intervals, R, theta_max):
    """Some gripper angle about the grasp axis is both collision-free and
    within the tilt cone for object orientation R."""
    axis_w = R @ grasp.axis
    e = axis_elevation(axis_w)
    if e > theta_max:
        return False
    beta = math.acos(min(1.0, math.cos(theta_max) / math.cos(e)))
    x = axis_w
    y = np.cross([0.0, 0.0, 1.0], x)
    y /= np.linalg.norm(y)
    z_obj = R.T @ np.cross(x, y)
    e0, e1 = grasp.reference_frame()
    phi = math.atan2(z_obj @ e1, z_obj @ e0)
    for lo, hi in free_components(intervals):
        if is_full_circle((lo, hi)):
            return True
        for k in (-1, 0, 1, 2):
            a, b = lo - phi + 2 * np.pi * k, hi - phi + 2 * np.pi * k
            if max(a, -beta) <= min(b, beta):
                return True
    return False


def feasible_grasps_at(pose, offline, limits=None, theta_max=None):
    """Grasp ids usable with the object at ``pose`` (a Pose or placement id).

    A grasp qualifies when both contacts clear the table and some
    collision-free gripper angle lies within the tilt limit.
    """
    cfg = offline.config
    limits = limits or cfg.limits
    theta = limits.theta_max if theta_max is None else theta_max
    if not isinstance(pose, Pose):
        pose = offline.placement_pose(int(pose))
    R = pose.matrix
    h = offline.model.rest_height(R)
    mu_lim = math.atan(1.0 / cfg.mu)
    out = set()
    for gid, g in offline.grasps.items():
        tips_z = np.array([R[2] @ g.p_left, R[2] @ g.p_right]) + h
        if tips_z.min() < limits.table_clearance:
            continue
        if axis_elevation(R @ g.axis) >= mu_lim:
            continue
        if grasp_window_exists(g, offline.intervals[gid], R, theta):
            out.add(gid)
    return out


def build_offline(mesh, config, mesh_hash=""):
    """Hull, simplification, grasps, placements, collision ranges, graph."""
    model = ObjectModel.from_mesh(mesh, config.d_h)
    sampled = sample_grasps(mesh, config.max_grasps, config.gripper, config.antipodal_tol, config.finger_mu,
                            config.trim_fraction, config.edge_margin, config.seed)
    placements = stable_placements(model.hull, mesh.com, config.support_margin)
    if not placements:
        raise NoStablePlacement("no hull facet supports the center of mass")
    spacing = max(0.5, min(2.0, mesh.scale / 60.0))
    samples = surface_samples(mesh, spacing)
    grasps, intervals = {}, {}
    for g in sampled:
        try:
            intervals[g.id] = collision_free_angles(g, mesh, config.gripper, samples=samples)
        except EmptyRange:
            continue
        grasps[g.id] = g
    if not grasps:
        raise NoGraspFound("every sampled grasp collides with the object")
    off = OfflineData(model, grasps, intervals, placements, [], None, config, mesh_hash)
    off.placement_grasps = [feasible_grasps_at(p.id, off, theta_max=PERMISSIVE_TILT) for p in placements]
    off.adjacency = adjacency_from_sets(off.placement_grasps)
    return off


def nearest_yaw(R_rest, R_current):
    """Yaw about world Z that brings R_rest closest to R_current."""
    M = R_rest @ R_current.T
    return math.atan2(M[0, 1] - M[1, 0], M[0, 0] + M[1, 1])


def intermediate_pose(offline, pid, current, limits):
    R_rest = quat_to_matrix(offline.placements[pid].orientation)
    yaw = nearest_yaw(R_rest, current.matrix)
    return offline.placement_pose(pid, yaw, limits.center[:2])


def snap_to_table(model, pose):
    return model.resting_pose(pose.orientation, pose.position[:2])


def search_graph(sets):
    """networkx graph over node ids, one weight-1 edge per pair of nodes
    sharing a grasp."""
    G = nx.Graph()
    G.add_nodes_from(range(len(sets)))
    for j in range(len(sets)):
        for k in range(j + 1, len(sets)):
            if sets[j] & sets[k]:
                G.add_edge(j, k, weight=1)
    return G


def search_with_pruning(G, source, target, walk, cost, tie_paths=1, max_searches=None, trace=None):
    """Shortest-path search that prunes edges the caller cannot execute.

    ``walk(path)`` returns either a result or a failing edge ``(u, v,
    reasons)``.  Each round plans up to ``tie_paths`` equally short paths
    and keeps the result of least ``cost``; when all of them fail their
    failing edges are removed from ``G`` (in place) and the search repeats.
    Returns ``(result, searches)`` or raises NoPlan.
    """
    trace = [] if trace is None else trace
    searches = 0
    while True:
        if max_searches is not None and searches >= max_searches:
            raise NoPlan(f"gave up after {searches} graph searches", trace)
        searches += 1
        try:
            paths = list(itertools.islice(nx.all_shortest_paths(G, source, target, weight="weight"), tie_paths))
        except nx.NetworkXNoPath:
            raise NoPlan("placement graph disconnected after pruning", trace) from None
        best, failed = None, []
        for path in paths:
            result = walk(path)
            if isinstance(result, tuple):
                failed.append(result)
            elif best is None or cost(result) < cost(best) - 1e-9:
                best = result
        if best is not None:
            return best, searches
        for u, v, reasons in failed:
            if G.has_edge(u, v):
                trace.append({"edge": [int(u), int(v)], "reasons": reasons})
                log.debug("pruning edge %s-%s: %s", u, v, reasons)
                G.remove_edge(u, v)


def _release_waypoints(prev, nxt, clearance):
    """Lift, move over, descend: bookkeeping between two segments."""
    a, b = prev.steps[-1].gripper, nxt.steps[0].gripper
    up = np.array([0.0, 0.0, clearance])
    return [Pose(a.orientation, a.position + up), Pose(b.orientation, b.position + up)]


def plan_online(start, goal, offline, config=None, limits=None, force_rolling=False, planner=None,
                max_searches=None):
    """Multi-step plan from ``start`` to ``goal``; raises NoPlan.

    ``planner(offline, current, target, grasp_ids, config, limits, force_rolling)``
    returns ``(plan or None, reasons)``; the default tries every shared grasp
    with :func:`plan_one_grasp`.  ``max_searches`` caps the number of
    shortest-path queries (each failed edge costs one).
    """
    config = config or offline.config
    limits = limits or config.limits
    planner = planner or _plan_edge
    model = offline.model
    start, goal = snap_to_table(model, start), snap_to_table(model, goal)
    P = offline.n_placements
    init, fin = P, P + 1
    g_start = feasible_grasps_at(start, offline, limits)
    trace = []
    if not g_start:
        raise NoPlan("initial pose admits no feasible grasp", trace)
    g_goal = feasible_grasps_at(goal, offline, limits)
    if not g_goal:
        raise NoPlan("goal pose admits no feasible grasp", trace)
    sets = [s & feasible_grasps_at(p.id, offline, limits) for p, s in zip(offline.placements,
                                                                          offline.placement_grasps)]
    sets += [g_start, g_goal]
    G = search_graph(sets)
    cache = {}

    def walk(path):
        return _walk_path(path, start, goal, fin, P, sets, offline, config, limits, force_rolling, planner, cache)

    def cost(result):
        return sum(s.path_length for s in result[0])

    (segments, edges, mids), searches = search_with_pruning(G, init, fin, walk, cost, config.tie_paths,
                                                             max_searches, trace)
    waypoints = [_release_waypoints(a, b, config.release_clearance) for a, b in zip(segments[:-1], segments[1:])]
    return MultiStepPlan(start, goal, segments, edges, mids[:-1], waypoints, searches, trace)


def _walk_path(path, start, goal, fin, P, sets, offline, config, limits, force_rolling, planner, cache):
    """Plan every edge of one node path; returns [segments, edges, mids] or
    the failing edge as ``(u, v, reasons)``."""
    current = start
    segments, edges, mids = [], [], []
    for u, v in zip(path[:-1], path[1:]):
        target = goal if v == fin else intermediate_pose(offline, v, current, limits)
        common = sorted(sets[u] & sets[v])
        key = (u, v, tuple(np.round(current.orientation, 12)), tuple(np.round(current.position, 9)))
        if key not in cache:
            cache[key] = planner(offline, current, target, common, config, limits, force_rolling)
        plan, reasons = cache[key]
        if plan is None:
            return u, v, reasons
        segments.append(plan)
        edges.append((u, v))
        mids.append(None if v >= P else v)
        current = target
    return [segments, edges, mids]


def _plan_edge(offline, current, target, grasp_ids, config, limits, force_rolling):
    """Try every shared grasp; keep the success with the shortest gripper path."""
    best, reasons = None, {}
    for gid in grasp_ids:
        task = ReorientTask(current, target, offline.grasps[gid], config.n_steps, config.step_time)
        try:
            plan = plan_one_grasp(task, offline.model, offline.intervals[gid], config, limits, force_rolling)
        except PlanningInfeasible as exc:
            reasons[exc.stage] = reasons.get(exc.stage, 0) + 1
            continue
        if best is None or plan.path_length < best.path_length - 1e-9:
            best = plan
    return best, reasons
