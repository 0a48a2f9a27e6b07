"""Quasi-static analysis of an object pivoting about a grasp axis while it
touches the table.

Everything happens in the pivoting plane: the plane through the table
contact O normal to the grasp axis.  Coordinates in that plane are (y, z)
with O at the origin, y horizontal and z pointing away from the table.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import Boundary, ConeDegenerate, DegenerateFrame
from .transforms import matrix_to_quat


class Scenario(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"
    VI = "VI"


class ContactState(str, Enum):
    Sliding = "Sliding"
    Sticking = "Sticking"
    SlidingOrSticking = "SlidingOrSticking"
    Unstable = "Unstable"
    ImpossibleMotion = "ImpossibleMotion"


class Motion(str, Enum):
    TowardQ = "TowardQ"
    AwayFromQ = "AwayFromQ"
    Static = "Static"


@dataclass
class PivotingPlaneFrame:
    origin: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray

    @property
    def matrix(self):
        return np.column_stack([self.x_axis, self.y_axis, self.z_axis])

    @property
    def orientation(self):
        return matrix_to_quat(self.matrix)

    def project(self, point):
        """World point -> (y, z) in the pivoting plane."""
        d = np.asarray(point, float) - self.origin
        return np.array([d @ self.y_axis, d @ self.z_axis])


@dataclass
class PlanarConfig:
    C: np.ndarray
    Q: np.ndarray
    mu_eff: float
    weight: float = 1.0

    def __post_init__(self):
        self.C = np.asarray(self.C, float).reshape(2)
        self.Q = np.asarray(self.Q, float).reshape(2)
        if self.Q[1] <= 0:
            raise ValueError("grasp point must be above the table (Q_z > 0)")
        if self.mu_eff <= 0 or self.weight <= 0:
            raise ValueError("mu_eff and weight must be positive")


@dataclass
class UncertaintyBounds:
    O_y: tuple
    C_y: tuple
    Q_y: tuple

    def __post_init__(self):
        for name in ("O_y", "C_y", "Q_y"):
            lo, hi = (float(v) for v in getattr(self, name))
            if lo > hi:
                raise ValueError(f"{name} range is empty")
            setattr(self, name, (lo, hi))

    @classmethod
    def exact(cls, cfg):
        return cls((0.0, 0.0), (cfg.C[0],) * 2, (cfg.Q[0],) * 2)


@dataclass
class Equilibrium:
    """Feasible table-force set: f_y in [fy_lo, fy_hi] (possibly unbounded)."""

    feasible: bool
    fy_lo: float = math.nan
    fy_hi: float = math.nan

    def contains(self, fy, tol=0.0):
        return self.feasible and self.fy_lo - tol <= fy <= self.fy_hi + tol


def pivoting_plane_frame(grasp, obj_pose, contact_O):
    x = obj_pose.matrix @ grasp.axis
    y = np.cross([0.0, 0.0, 1.0], x)
    ny = np.linalg.norm(y)
    if ny < 1e-6:
        raise DegenerateFrame("grasp axis is vertical")
    y /= ny
    z = np.cross(x, y)
    return PivotingPlaneFrame(np.asarray(contact_O, float), x, y, z / np.linalg.norm(z))


def axis_elevation(axis):
    """Angle between a direction and the table plane, in [0, pi/2]."""
    a = np.asarray(axis, float)
    return math.asin(min(1.0, abs(a[2]) / np.linalg.norm(a)))


def project_friction_cone(mu, tilt):
    """Half-slope of the table friction cone seen in a pivoting plane whose
    normal is elevated ``tilt`` above the table.

    The plane keeps one horizontal direction y; its other in-plane direction
    leans toward the table by ``tilt``.  Maximising |f_y| / f_z' over the
    cone boundary gives mu / sqrt(cos^2 tilt - mu^2 sin^2 tilt).
    """
    tilt = abs(float(tilt))
    if tilt >= math.atan(1.0 / mu):
        raise ConeDegenerate(f"tilt {math.degrees(tilt):.3f} deg >= atan(1/mu)")
    d = math.cos(tilt) ** 2 - (mu * math.sin(tilt)) ** 2
    return mu / math.sqrt(d)


def planar_config(frame, com_world, grasp_point_world, mu, weight=1.0):
    """Project the COM and grasp point into the pivoting plane."""
    tilt = axis_elevation(frame.x_axis)
    return PlanarConfig(frame.project(com_world), frame.project(grasp_point_world),
                        project_friction_cone(mu, tilt), weight)


def equilibrium_feasible(cfg):
    """Table forces balancing gravity with a torque-free pivot at Q.

    Moment balance about Q gives f_z = s f_y + c with s = Q_z/Q_y and
    c = (1 - C_y/Q_y) g; this line is intersected with the cone
    |f_y| <= mu' f_z.  When Q_y = 0 the moment fixes f_y = C_y g / Q_z and
    leaves f_z free, so the set is that single f_y.
    """
    Cy = cfg.C[0]
    Qy, Qz = cfg.Q
    g, mu = cfg.weight, cfg.mu_eff
    if Qy == 0.0:
        fy = Cy * g / Qz
        return Equilibrium(True, fy, fy)
    s = Qz / Qy
    c = (1.0 - Cy / Qy) * g
    lo, hi = -math.inf, math.inf
    # s f + c >= f / mu  and  s f + c >= -f / mu
    for a in (s - 1.0 / mu, s + 1.0 / mu):
        if a > 0:
            lo = max(lo, -c / a)
        elif a < 0:
            hi = min(hi, -c / a)
        elif c < 0:
            return Equilibrium(False)
    if lo > hi:
        return Equilibrium(False)
    return Equilibrium(True, lo, hi)


def is_pivot_stable(cfg):
    # sign test rather than a product, which can underflow to zero
    Qy, Cy = cfg.Q[0], cfg.C[0]
    return bool((Qy > Cy and Qy > 0) or (Qy < Cy and Qy < 0))


def is_pivot_stable_robust(bounds):
    oc_max = max(bounds.O_y[1], bounds.C_y[1])
    oc_min = min(bounds.O_y[0], bounds.C_y[0])
    q_lo, q_hi = bounds.Q_y
    return bool(q_lo > oc_max or q_hi < oc_min)


def classify_scenario(cfg, tol=1e-6):
    Cy = cfg.C[0]
    Qy, Qz = cfg.Q
    cone_gap = abs(Qy) - cfg.mu_eff * Qz
    if abs(Qy - Cy) <= tol or abs(Qy) <= tol or abs(cone_gap) <= tol:
        raise Boundary("configuration on a scenario boundary")
    inside = cone_gap < 0
    if (Qy - Cy) * Qy < 0:
        return Scenario.III if inside else Scenario.IV
    beyond_c = abs(Cy) > tol and np.sign(Cy) == np.sign(Qy)
    if beyond_c:
        return Scenario.I if inside else Scenario.II
    return Scenario.V if inside else Scenario.VI


_TABLE = {
    Scenario.I: (ContactState.Sliding, ContactState.ImpossibleMotion, ContactState.SlidingOrSticking),
    Scenario.V: (ContactState.Sliding, ContactState.ImpossibleMotion, ContactState.SlidingOrSticking),
    Scenario.II: (ContactState.Sliding, ContactState.Sliding, ContactState.SlidingOrSticking),
    Scenario.VI: (ContactState.Sliding, ContactState.Sliding, ContactState.SlidingOrSticking),
    Scenario.III: (ContactState.Unstable, ContactState.Unstable, ContactState.SlidingOrSticking),
    Scenario.IV: (ContactState.Unstable, ContactState.Unstable, ContactState.Unstable),
}
_COLUMN = {Motion.TowardQ: 0, Motion.AwayFromQ: 1, Motion.Static: 2}


def predict_contact_state(cfg, o_motion, tol=1e-6):
    """Contact state of O when the gripper drives O toward Q, away from Q or
    keeps it static.  Scenario III's static cell is force-dependent."""
    return _TABLE[classify_scenario(cfg, tol)][_COLUMN[Motion(o_motion)]]


def motion_of_contact(delta_y, q_y, eps=1e-6):
    """Direction of a contact displacement ``delta_y`` relative to Q."""
    if abs(delta_y) < eps:
        return Motion.Static
    return Motion.TowardQ if np.sign(delta_y) == np.sign(q_y) else Motion.AwayFromQ
