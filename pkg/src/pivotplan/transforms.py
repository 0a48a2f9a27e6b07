"""Quaternion and rotation helpers.

Quaternions are numpy arrays in ``(w, x, y, z)`` order.  scipy's Rotation is
used for conversions; it stores ``(x, y, z, w)`` internally.
"""

import numpy as np
from scipy.spatial.transform import Rotation


def as_quat(q):
    q = np.asarray(q, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if n == 0:
        raise ValueError("zero quaternion")
    # leave unit quaternions bit-identical so saved poses load unchanged
    return q if abs(n - 1.0) < 1e-12 else q / n


def to_rotation(q):
    q = np.asarray(q, dtype=float)
    return Rotation.from_quat(np.concatenate([q[..., 1:], q[..., :1]], axis=-1))


def from_rotation(rot):
    xyzw = rot.as_quat()
    q = np.concatenate([xyzw[..., 3:], xyzw[..., :3]], axis=-1)
    return canonical(q)


def canonical(q):
    """Flip sign so that w >= 0 (first nonzero component positive on ties)."""
    q = np.array(q, dtype=float)
    if q.ndim == 1:
        return -q if q[0] < 0 else q
    flip = q[:, 0] < 0
    q[flip] *= -1
    return q


def quat_to_matrix(q):
    return to_rotation(q).as_matrix()


def matrix_to_quat(m):
    return from_rotation(Rotation.from_matrix(m))


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def aa2quat(angle, axis):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    h = 0.5 * angle
    return np.concatenate([[np.cos(h)], np.sin(h) * axis])


def rot_axis_angle(axis, angle):
    """3x3 rotation matrix (Rodrigues)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def quat_angle(a, b):
    """Geodesic angle between two orientations, in [0, pi]."""
    d = abs(float(np.dot(as_quat(a), as_quat(b))))
    return 2.0 * np.arccos(min(1.0, d))


def rotation_angle_between(Ra, Rb):
    c = (np.trace(Ra.T @ Rb) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return -((-np.asarray(a) + np.pi) % (2 * np.pi) - np.pi)


def perpendicular(v):
    """A deterministic unit vector orthogonal to ``v``."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    basis = np.eye(3)[int(np.argmin(np.abs(v)))]
    p = basis - np.dot(basis, v) * v
    return p / np.linalg.norm(p)


def random_quat(rng):
    q = rng.normal(size=4)
    return canonical(q / np.linalg.norm(q))
