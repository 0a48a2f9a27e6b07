"""Reorientation planning for a two-finger gripper using pivoting and rolling
on a table."""

from .config import GripperModel, PlannerConfig, WorkspaceLimits
from .errors import NoPlan, PivotPlanError, PlanningInfeasible
from .geometry import Pose, TriMesh, load_mesh
from .graph import MultiStepPlan, OfflineData, build_offline, plan_online
from .planner import GraspPlan, ReorientTask, plan_one_grasp
from .validate import replay

__version__ = "0.1.0"

__all__ = ["GripperModel", "PlannerConfig", "WorkspaceLimits", "NoPlan", "PivotPlanError", "PlanningInfeasible",
           "Pose", "TriMesh", "load_mesh", "MultiStepPlan", "OfflineData", "build_offline", "plan_online",
           "GraspPlan", "ReorientTask", "plan_one_grasp", "replay"]
