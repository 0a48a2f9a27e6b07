"""Fault injections for the validator: each returns a broken copy of a plan."""

import copy

import numpy as np

from pivotplan.geometry import Pose
from pivotplan.planner import PIVOTING, ROLLING
from pivotplan.transforms import aa2quat, quat_mul, quat_to_matrix


def _step(plan, pred):
    """Middle step among those matching ``pred``, skipping the ends."""
    idx = [i for i, s in enumerate(plan.steps[1:-1], 1) if pred(plan, i)]
    assert idx, "plan has no step suitable for this fault"
    return idx[len(idx) // 2]


def _inside_rolling_run(plan, i):
    m = plan.modes
    return m[i - 1] == m[i] == m[i + 1] == ROLLING


def lift_gripper(plan, dz=5.0):
    p = copy.deepcopy(plan)
    i = _step(p, _inside_rolling_run)
    g = p.steps[i].gripper
    p.steps[i].gripper = Pose(g.orientation, g.position + [0, 0, dz])
    return p, i


def flip_to_pivoting(plan):
    p = copy.deepcopy(plan)
    i = _step(p, _inside_rolling_run)
    p.steps[i].mode = PIVOTING
    return p, i


def twist_about_axis(plan, angle=0.01):
    p = copy.deepcopy(plan)
    i = _step(p, _inside_rolling_run)
    g = p.steps[i].gripper
    axis = quat_to_matrix(g.orientation)[:, 0]
    p.steps[i].gripper = Pose(quat_mul(aa2quat(angle, axis), g.orientation), g.position)
    return p, i


def shift_sticking_step(plan, d=1.0):
    p = copy.deepcopy(plan)
    i = _step(p, lambda q, j: q.steps[j].sliding == "S1" and q.steps[j - 1].sliding == "S1")
    g = p.steps[i].gripper
    p.steps[i].gripper = Pose(g.orientation, g.position + [d, 0, 0])
    return p, i


def leave_box(plan, limits, margin=5.0):
    p = copy.deepcopy(plan)
    i = len(p.steps) // 2
    g = p.steps[i].gripper
    pos = g.position.copy()
    pos[0] = limits.box_max[0] + margin
    p.steps[i].gripper = Pose(g.orientation, pos)
    return p, i


def shifted_goal(goal, d=5.0):
    return Pose(goal.orientation, np.asarray(goal.position) + [d, 0, 0])
