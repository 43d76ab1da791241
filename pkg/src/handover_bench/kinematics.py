"""Kinematic chain for the 7-DoF arm + 2-DoF parallel gripper.

The arm is a serial chain of revolute joints approximating a Panda-class
robot; the two fingers are prismatic joints branching from the palm frame.
Motion follows a velocity-clamped first-order position-tracking model of a
PD controller: per joint, q' = q + clamp(gain*(target-q)*dt, +-v_max*dt).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import (
    Pose,
    Quat,
    Vec3,
    quat_from_axis_angle,
    quat_rotate,
    rot_z,
    vec_cross,
    vec_scale,
    vec_sub,
)
from .textio import LineReader, fmt_float, fmt_floats

ARM_DOF = 7
GRIPPER_DOF = 2
DOF = ARM_DOF + GRIPPER_DOF

LEFT = 0
RIGHT = 1


@dataclass(frozen=True)
class JointSpec:
    name: str
    kind: str  # "revolute" | "prismatic"
    origin: Pose  # parent frame -> joint frame
    axis: Vec3  # unit, in the joint frame
    limits: tuple[float, float]
    max_velocity: float  # rad/s or m/s

    def __post_init__(self):
        if self.kind not in ("revolute", "prismatic"):
            raise ValueError(f"unknown joint kind {self.kind!r}")
        lo, hi = self.limits
        if not lo < hi:
            raise ValueError("joint limits must satisfy lo < hi")
        if abs(math.sqrt(sum(a * a for a in self.axis)) - 1.0) > 1e-9:
            raise ValueError("joint axis must be a unit vector")
        if self.max_velocity <= 0.0:
            raise ValueError("max_velocity must be positive")


@dataclass(frozen=True)
class KinematicChain:
    """Serial arm, fixed palm offset, and two prismatic fingers."""

    name: str
    arm_joints: tuple[JointSpec, ...]
    palm_offset: Pose  # last arm frame -> palm frame
    finger_joints: tuple[JointSpec, ...]  # left, right; origins in palm frame
    fingertip_offset: float  # along palm z from each finger frame
    gain: float = 10.0  # s^-1, position-tracking gain

    def __post_init__(self):
        if len(self.arm_joints) != ARM_DOF or len(self.finger_joints) != GRIPPER_DOF:
            raise ValueError("chain must have 7 arm joints and 2 finger joints")
        if self.gain <= 0.0:
            raise ValueError("gain must be positive")

    @cached_property
    def joints(self) -> tuple[JointSpec, ...]:
        return self.arm_joints + self.finger_joints

    @cached_property
    def lower_limits(self) -> tuple[float, ...]:
        return tuple(j.limits[0] for j in self.joints)

    @cached_property
    def upper_limits(self) -> tuple[float, ...]:
        return tuple(j.limits[1] for j in self.joints)

    @cached_property
    def max_velocities(self) -> tuple[float, ...]:
        return tuple(j.max_velocity for j in self.joints)

    def clamp(self, q: Sequence[float]) -> tuple[float, ...]:
        lo = self.lower_limits
        hi = self.upper_limits
        return tuple(
            min(hi[i], max(lo[i], float(q[i]))) for i in range(len(lo))
        )

    def check_limits(self, q: Sequence[float]) -> None:
        if len(q) != DOF:
            raise ValueError(f"expected {DOF} joint values, got {len(q)}")
        for j, v in zip(self.joints, q):
            if not (j.limits[0] - 1e-12 <= v <= j.limits[1] + 1e-12):
                raise ValueError(
                    f"joint {j.name} value {v} outside limits {j.limits}"
                )


@dataclass(frozen=True)
class LinkFrames:
    """World pose of every frame along the chain for one configuration."""

    base: Pose
    arm: tuple[Pose, ...]  # frame after each arm joint motion
    palm: Pose
    fingers: tuple[Pose, ...]  # left, right
    fingertips: tuple[Pose, ...]


def _joint_motion(joint: JointSpec, q: float) -> Pose:
    if joint.kind == "revolute":
        return Pose((0.0, 0.0, 0.0), quat_from_axis_angle(joint.axis, q))
    return Pose(vec_scale(joint.axis, q))


def forward_kinematics(chain: KinematicChain, q: Sequence[float], base: Pose = Pose()) -> LinkFrames:
    """Frame of every link: the product of parent transforms and joint motions.

    Raises for configurations outside the joint limits.
    """
    chain.check_limits(q)
    arm_frames = []
    frame = base
    for i, joint in enumerate(chain.arm_joints):
        frame = frame.compose(joint.origin).compose(_joint_motion(joint, float(q[i])))
        arm_frames.append(frame)
    palm = frame.compose(chain.palm_offset)
    fingers = tuple(
        palm.compose(joint.origin).compose(_joint_motion(joint, float(q[ARM_DOF + k])))
        for k, joint in enumerate(chain.finger_joints)
    )
    tips = tuple(f.compose(Pose((0.0, 0.0, chain.fingertip_offset))) for f in fingers)
    return LinkFrames(base=base, arm=tuple(arm_frames), palm=palm, fingers=fingers, fingertips=tips)


def pd_step(
    chain: KinematicChain, q: Sequence[float], target: Sequence[float], dt: float
) -> tuple[float, ...]:
    """One control substep of the position-tracking model.

    The target is clamped to the joint limits before use; NaN targets are
    rejected.  Per joint the error decays geometrically once the velocity
    clamp stops binding, so after ceil(|e0|/(v_max*dt)) + k steps the error
    is below (v_max/gain)*(1-gain*dt)^k (contraction needs gain*dt <= 2).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if any(math.isnan(v) for v in target):
        raise ValueError("target contains NaN")
    lo = chain.lower_limits
    hi = chain.upper_limits
    vmax = chain.max_velocities
    g = chain.gain
    out = []
    for i in range(len(lo)):
        ti = float(target[i])
        ti = lo[i] if ti < lo[i] else (hi[i] if ti > hi[i] else ti)
        qi = q[i]
        step = g * (ti - qi) * dt
        cap = vmax[i] * dt
        if step > cap:
            step = cap
        elif step < -cap:
            step = -cap
        v = qi + step
        out.append(lo[i] if v < lo[i] else (hi[i] if v > hi[i] else v))
    return tuple(out)


# ---------------------------------------------------------------------------
# jacobian / differential IK (policy utility, not a kernel contract)


def arm_jacobian(chain: KinematicChain, frames: LinkFrames) -> np.ndarray:
    """Geometric Jacobian (6x7) of the palm frame w.r.t. the arm joints."""
    cols = np.empty((6, ARM_DOF))
    tip = frames.palm.position
    for i, joint in enumerate(chain.arm_joints):
        frame = frames.arm[i]
        axis_w = quat_rotate(frame.orientation, joint.axis)
        if joint.kind == "revolute":
            lin = vec_cross(axis_w, vec_sub(tip, frame.position))
            cols[:3, i] = lin
            cols[3:, i] = axis_w
        else:
            cols[:3, i] = axis_w
            cols[3:, i] = (0.0, 0.0, 0.0)
    return cols


def orientation_error(current: Quat, target: Quat) -> Vec3:
    """Rotation vector taking current to target (world frame, radians)."""
    # err = target * current^-1; vector part scaled to axis*angle
    cw, cx, cy, cz = current
    tw, tx, ty, tz = target
    # target * conj(current)
    w = tw * cw + tx * cx + ty * cy + tz * cz
    x = -tw * cx + tx * cw - ty * cz + tz * cy
    y = -tw * cy + tx * cz + ty * cw - tz * cx
    z = -tw * cz - tx * cy + ty * cx + tz * cw
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    norm_v = math.sqrt(x * x + y * y + z * z)
    if norm_v < 1e-12:
        return (0.0, 0.0, 0.0)
    angle = 2.0 * math.atan2(norm_v, w)
    s = angle / norm_v
    return (x * s, y * s, z * s)


def ik_step(
    chain: KinematicChain,
    q: Sequence[float],
    target_palm: Pose,
    frames: LinkFrames | None = None,
    damping: float = 0.05,
    max_rot_gain: float = 0.5,
    base: Pose = Pose(),
) -> tuple[float, ...]:
    """One damped-least-squares step of the 7 arm joints toward a palm pose.

    The target is expressed in the same frame as ``base``.  Returns a full
    9-vector target (fingers unchanged).  Raises only if the solve fails
    numerically; callers treat that as "hold".
    """
    if frames is None:
        frames = forward_kinematics(chain, q, base)
    err_pos = vec_sub(target_palm.position, frames.palm.position)
    err_rot = vec_scale(orientation_error(frames.palm.orientation, target_palm.orientation), max_rot_gain)
    # cap the linearized step so clamping at joint limits cannot zigzag
    pos_n = math.sqrt(sum(c * c for c in err_pos))
    if pos_n > 0.08:
        err_pos = vec_scale(err_pos, 0.08 / pos_n)
    rot_n = math.sqrt(sum(c * c for c in err_rot))
    if rot_n > 0.4:
        err_rot = vec_scale(err_rot, 0.4 / rot_n)
    e = np.array([*err_pos, *err_rot])
    jac = arm_jacobian(chain, frames)
    jjt = jac @ jac.T + (damping * damping) * np.eye(6)
    dq = jac.T @ np.linalg.solve(jjt, e)
    arm = tuple(float(q[i] + dq[i]) for i in range(ARM_DOF))
    return chain.clamp(arm + tuple(q[ARM_DOF:]))


def ik_solve(
    chain: KinematicChain,
    q: Sequence[float],
    target_palm: Pose,
    iterations: int = 120,
    pos_tol: float = 5e-4,
    rot_tol: float = 5e-3,
    base: Pose = Pose(),
) -> tuple[float, ...] | None:
    """Iterated differential IK; None when it fails to converge."""
    cur = tuple(q)
    for _ in range(iterations):
        frames = forward_kinematics(chain, cur, base)
        err_pos = vec_sub(target_palm.position, frames.palm.position)
        err_rot = orientation_error(frames.palm.orientation, target_palm.orientation)
        if (
            math.sqrt(sum(c * c for c in err_pos)) < pos_tol
            and math.sqrt(sum(c * c for c in err_rot)) < rot_tol
        ):
            return cur
        cur = ik_step(chain, cur, target_palm, frames=frames, max_rot_gain=1.0, base=base)
    return None


# ---------------------------------------------------------------------------
# gripper geometry used for collision proxies and grasp planning.  The grip
# surface is a thin box on the inward face of each finger: with finger travel
# q the inner faces sit at +-q from the palm center plane, so the gap between
# the gripping surfaces is exactly 2q.

FINGER_BOX_HALF = (0.010, 0.007, 0.024)
FINGER_BOX_CENTER_Y = 0.007  # + finger travel
FINGER_BOX_CENTER_Z = 0.026
GRIP_BOX_HALF = (0.009, 0.0015, 0.020)
GRIP_BOX_CENTER_Y = 0.0015
GRIP_BOX_CENTER_Z = 0.028
PALM_BOX_HALF = (0.030, 0.100, 0.025)
PALM_BOX_CENTER_Z = -0.025
MAX_OPENING = 0.08  # both fingers fully out
GRIP_CENTER_FORWARD = GRIP_BOX_CENTER_Z  # palm-frame z of the grasp line

ARM_CAPSULE_RADII = (0.07, 0.07, 0.065, 0.06, 0.055, 0.05, 0.05, 0.05)


def panda_like_chain() -> KinematicChain:
    """Built-in chain approximating a Panda-class arm (not vendor-exact)."""
    half = math.sqrt(0.5)
    rx_pos = (half, half, 0.0, 0.0)   # +90 deg about x
    rx_neg = (half, -half, 0.0, 0.0)  # -90 deg about x
    z = (0.0, 0.0, 1.0)
    arm = (
        JointSpec("joint1", "revolute", Pose((0.0, 0.0, 0.333)), z, (-2.8973, 2.8973), 2.175),
        JointSpec("joint2", "revolute", Pose((0.0, 0.0, 0.0), rx_neg), z, (-1.7628, 1.7628), 2.175),
        JointSpec("joint3", "revolute", Pose((0.0, -0.316, 0.0), rx_pos), z, (-2.8973, 2.8973), 2.175),
        JointSpec("joint4", "revolute", Pose((0.0825, 0.0, 0.0), rx_pos), z, (-3.0718, -0.0698), 2.175),
        JointSpec("joint5", "revolute", Pose((-0.0825, 0.384, 0.0), rx_neg), z, (-2.8973, 2.8973), 2.61),
        JointSpec("joint6", "revolute", Pose((0.0, 0.0, 0.0), rx_pos), z, (-0.0175, 3.7525), 2.61),
        JointSpec("joint7", "revolute", Pose((0.088, 0.0, 0.0), rx_pos), z, (-2.8973, 2.8973), 2.61),
    )
    palm = Pose((0.0, 0.0, 0.107), rot_z(-math.pi / 4))
    fingers = (
        JointSpec("finger_left", "prismatic", Pose((0.0, 0.0, 0.0584)), (0.0, 1.0, 0.0), (0.0, 0.04), 0.08),
        JointSpec("finger_right", "prismatic", Pose((0.0, 0.0, 0.0584)), (0.0, -1.0, 0.0), (0.0, 0.04), 0.08),
    )
    return KinematicChain(
        name="panda_like",
        arm_joints=arm,
        palm_offset=palm,
        finger_joints=fingers,
        fingertip_offset=0.05,
    )


HOME_Q: tuple[float, ...] = (0.0, -0.785398, 0.0, -2.356194, 0.0, 1.570796, 0.785398, 0.04, 0.04)


# ---------------------------------------------------------------------------
# chain file IO (same container syntax as scene files)

CHAIN_MAGIC = "kinematic-chain"
CHAIN_VERSION = "1"


def write_chain(chain: KinematicChain, path: str | Path) -> None:
    lines = [f"{CHAIN_MAGIC} {CHAIN_VERSION}", f"name {chain.name}", f"gain {fmt_float(chain.gain)}"]
    for j in chain.arm_joints + chain.finger_joints:
        lines.append(
            f"joint {j.name} {j.kind} "
            f"{fmt_floats([*j.origin.position, *j.origin.orientation])} "
            f"{fmt_floats(j.axis)} {fmt_float(j.limits[0])} {fmt_float(j.limits[1])} "
            f"{fmt_float(j.max_velocity)}"
        )
    lines.append(f"palm_offset {fmt_floats([*chain.palm_offset.position, *chain.palm_offset.orientation])}")
    lines.append(f"fingertip_offset {fmt_float(chain.fingertip_offset)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_chain(path: str | Path) -> KinematicChain:
    reader = LineReader(path)
    name = None
    gain = None
    joints: list[JointSpec] = []
    palm_offset = None
    fingertip_offset = None
    first = True
    for fields, off in reader:
        if first:
            if fields[:2] != [CHAIN_MAGIC, CHAIN_VERSION]:
                raise reader.error("bad chain magic", off)
            first = False
            continue
        key = fields[0]
        if key == "name":
            name = fields[1]
        elif key == "gain":
            gain = float(fields[1])
        elif key == "joint":
            if len(fields) != 16:
                raise reader.error("joint rows need 16 fields", off)
            try:
                nums = [float(t) for t in fields[3:]]
            except ValueError:
                raise reader.error("malformed joint numbers", off) from None
            try:
                joints.append(
                    JointSpec(
                        name=fields[1],
                        kind=fields[2],
                        origin=Pose(tuple(nums[0:3]), tuple(nums[3:7])),
                        axis=tuple(nums[7:10]),
                        limits=(nums[10], nums[11]),
                        max_velocity=nums[12],
                    )
                )
            except ValueError as exc:
                raise reader.error(f"invalid joint: {exc}", off) from None
        elif key == "palm_offset":
            nums = [float(t) for t in fields[1:]]
            palm_offset = Pose(tuple(nums[0:3]), tuple(nums[3:7]))
        elif key == "fingertip_offset":
            fingertip_offset = float(fields[1])
        else:
            raise reader.error(f"unknown chain header {key!r}", off)
    if name is None or palm_offset is None or fingertip_offset is None or len(joints) != DOF:
        raise reader.error("incomplete chain description")
    return KinematicChain(
        name=name,
        arm_joints=tuple(joints[:ARM_DOF]),
        palm_offset=palm_offset,
        finger_joints=tuple(joints[ARM_DOF:]),
        fingertip_offset=fingertip_offset,
        gain=gain if gain is not None else 10.0,
    )
