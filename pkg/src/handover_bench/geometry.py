"""Rigid-transform primitives: 3-vectors, unit quaternions, and poses.

Vectors and quaternions are plain float tuples rather than numpy arrays:
the simulation composes long chains of single transforms per step, where
per-call array overhead dominates.  Quaternions use (w, x, y, z) order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

UNIT_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
ZERO_VEC: Vec3 = (0.0, 0.0, 0.0)


def vec_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vec_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vec_scale(v: Vec3, s: float) -> Vec3:
    return (v[0] * s, v[1] * s, v[2] * s)


def vec_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vec_cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vec_norm(v: Vec3) -> float:
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def vec_dist(a: Vec3, b: Vec3) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def vec_normalize(v: Vec3) -> Vec3:
    n = vec_norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return (v[0] / n, v[1] / n, v[2] / n)


def vec_lerp(a: Vec3, b: Vec3, s: float) -> Vec3:
    t = 1.0 - s
    return (t * a[0] + s * b[0], t * a[1] + s * b[1], t * a[2] + s * b[2])


def quat_norm(q: Quat) -> float:
    return math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])


def quat_normalize(q: Quat) -> Quat:
    n = quat_norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate vector v by unit quaternion q (v' = q v q*)."""
    w, x, y, z = q
    # t = 2 * (q_vec x v); v' = v + w*t + q_vec x t
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    return (
        v[0] + w * tx + y * tz - z * ty,
        v[1] + w * ty + z * tx - x * tz,
        v[2] + w * tz + x * ty - y * tx,
    )


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    half = 0.5 * angle
    s = math.sin(half) / vec_norm(axis)
    return (math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)


def quat_dot(a: Quat, b: Quat) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


def quat_slerp(a: Quat, b: Quat, s: float) -> Quat:
    """Shortest-path spherical interpolation, normalized output.

    Falls back to normalized lerp when the inputs are nearly parallel.
    """
    d = quat_dot(a, b)
    if d < 0.0:
        b = (-b[0], -b[1], -b[2], -b[3])
        d = -d
    if d > 0.9999995:
        out = (
            a[0] + s * (b[0] - a[0]),
            a[1] + s * (b[1] - a[1]),
            a[2] + s * (b[2] - a[2]),
            a[3] + s * (b[3] - a[3]),
        )
        return quat_normalize(out)
    theta = math.acos(min(1.0, d))
    sin_theta = math.sin(theta)
    wa = math.sin((1.0 - s) * theta) / sin_theta
    wb = math.sin(s * theta) / sin_theta
    return quat_normalize(
        (
            wa * a[0] + wb * b[0],
            wa * a[1] + wb * b[1],
            wa * a[2] + wb * b[2],
            wa * a[3] + wb * b[3],
        )
    )


def quat_to_matrix(q: Quat) -> tuple[Vec3, Vec3, Vec3]:
    """Rotation matrix rows for unit quaternion q."""
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return (
        (1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)),
        (2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)),
        (2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)),
    )


@dataclass(frozen=True)
class Pose:
    """Rigid transform: translation in meters plus unit quaternion."""

    position: Vec3 = ZERO_VEC
    orientation: Quat = UNIT_QUAT

    def compose(self, other: "Pose") -> "Pose":
        """this * other: apply other in this pose's frame."""
        return Pose(
            vec_add(self.position, quat_rotate(self.orientation, other.position)),
            quat_mul(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        inv_q = quat_conjugate(self.orientation)
        return Pose(vec_scale(quat_rotate(inv_q, self.position), -1.0), inv_q)

    def transform_point(self, p: Vec3) -> Vec3:
        return vec_add(self.position, quat_rotate(self.orientation, p))

    def rotate(self, v: Vec3) -> Vec3:
        return quat_rotate(self.orientation, v)

    @staticmethod
    def identity() -> "Pose":
        return Pose()


IDENTITY_POSE = Pose()

QUAT_UNIT_TOL = 1e-9


def check_unit_quaternion(q: Quat, tol: float = QUAT_UNIT_TOL) -> None:
    n = quat_norm(q)
    if abs(n - 1.0) > tol:
        raise ValueError(f"quaternion norm {n!r} deviates from 1 by more than {tol}")


def pose_lerp(a: Pose, b: Pose, s: float) -> Pose:
    """Linear position blend with slerped orientation."""
    return Pose(vec_lerp(a.position, b.position, s), quat_slerp(a.orientation, b.orientation, s))


def rot_x(angle: float) -> Quat:
    return quat_from_axis_angle((1.0, 0.0, 0.0), angle)


def rot_y(angle: float) -> Quat:
    return quat_from_axis_angle((0.0, 1.0, 0.0), angle)


def rot_z(angle: float) -> Quat:
    return quat_from_axis_angle((0.0, 0.0, 1.0), angle)
