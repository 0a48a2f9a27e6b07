"""Planner configuration: gripper geometry, workspace limits and tunables.

All lengths are millimeters, angles radians, times seconds.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GripperModel:
    """Two finger boxes plus a palm box, expressed in the gripper frame.

    The gripper frame origin sits midway between the fingertip contacts, X
    along the grasp axis and Z toward the palm.
    """

    stroke: float = 110.0
    finger_width: float = 16.0
    finger_thickness: float = 8.0
    finger_length: float = 70.0
    tip_extent: float = 6.0
    pad_depth: float = 1.0
    palm_height: float = 25.0
    palm_depth: float = 40.0

    def boxes(self, grasp_width):
        """Collision boxes ``(lo, hi)`` in the gripper frame for a given grasp width."""
        half = 0.5 * grasp_width
        fw = 0.5 * self.finger_width
        t = self.finger_thickness
        p = self.pad_depth
        z0, z1 = -self.tip_extent, self.finger_length
        right = (np.array([half + p, -fw, z0]), np.array([half + p + t, fw, z1]))
        left = (np.array([-half - p - t, -fw, z0]), np.array([-half - p, fw, z1]))
        pw = 0.5 * self.stroke + p + t
        pd = 0.5 * self.palm_depth
        palm = (np.array([-pw, -pd, z1]), np.array([pw, pd, z1 + self.palm_height]))
        return [left, right, palm]


@dataclass(frozen=True)
class WorkspaceLimits:
    box_min: tuple = (-150.0, -150.0, 0.0)
    box_max: tuple = (150.0, 150.0, 250.0)
    theta_max: float = np.deg2rad(45.0)
    table_clearance: float = 4.0

    def __post_init__(self):
        lo, hi = np.asarray(self.box_min, float), np.asarray(self.box_max, float)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(lo >= hi):
            raise ValueError("box_min must be componentwise below box_max")
        if not 0 < self.theta_max < np.pi / 2:
            raise ValueError("theta_max must lie in (0, pi/2)")

    @property
    def center(self):
        return 0.5 * (np.asarray(self.box_min, float) + np.asarray(self.box_max, float))

    def with_theta(self, theta_max):
        return dataclasses.replace(self, theta_max=float(theta_max))


@dataclass(frozen=True)
class PlannerConfig:
    k: float = 0.1
    xi: float = 2.0
    n_steps: int = 50
    step_time: float = 0.2
    mu: float = 0.5
    d_h: float = 0.5
    com_radius: float = 1.0
    pose_error: float = 1.0
    support_margin: float = 1.0
    antipodal_tol: float = np.deg2rad(10.0)
    finger_mu: float = 0.5
    trim_fraction: float = 0.15
    max_grasps: int = 50
    edge_margin: float = 3.0
    contact_tol: float = 0.5
    release_clearance: float = 20.0
    tie_tol: float = 1e-6
    tie_paths: int = 4
    seed: int = 0
    gripper: GripperModel = field(default_factory=GripperModel)
    limits: WorkspaceLimits = field(default_factory=WorkspaceLimits)

    def __post_init__(self):
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        if self.k <= 0 or self.xi <= 0 or self.step_time <= 0 or self.mu <= 0:
            raise ValueError("k, xi, step_time and mu must be positive")
        if self.tie_paths < 1:
            raise ValueError("tie_paths must be >= 1")

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["limits"]["box_min"] = list(d["limits"]["box_min"])
        d["limits"]["box_max"] = list(d["limits"]["box_max"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        gripper = GripperModel(**d.pop("gripper", {}))
        lim = dict(d.pop("limits", {}))
        if "theta_max_deg" in lim:
            lim["theta_max"] = np.deg2rad(lim.pop("theta_max_deg"))
        for key in ("box_min", "box_max"):
            if key in lim:
                lim[key] = tuple(float(v) for v in lim[key])
        limits = WorkspaceLimits(**lim)
        if "antipodal_tol_deg" in d:
            d["antipodal_tol"] = np.deg2rad(d.pop("antipodal_tol_deg"))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(gripper=gripper, limits=limits, **d)

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)
