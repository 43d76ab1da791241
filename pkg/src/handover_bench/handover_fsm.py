"""Giver-side state machine: trajectory replay with end-pose hold, the
continuity-timed active/passive release triggers, grasp attachment, and the
simplified post-release object dynamics.

The giver drives the hand and object along the recorded frames; past the last
frame both hold the end pose.  A release makes the object passive: it either
attaches rigidly to the gripper (both gripping surfaces in contact) or falls
ballistically until it reaches the table.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .contact import ContactSet
from .geometry import Pose, Vec3, quat_slerp, vec_lerp
from .scene_data import N_HAND_CAPSULES, Scene, pose_from_row

RELEASE_HOLD_TIME = 0.1  # s of continuous contact before a trigger fires
TIMER_EPS = 1e-9  # absorbs accumulated rounding so k*dt crossings fire on time
GRAVITY = 9.81


class ReleaseMode(Enum):
    DRIVEN = "driven"
    ACTIVE_RELEASED = "active_released"
    PASSIVE_RELEASED = "passive_released"


@dataclass(frozen=True)
class ReleaseState:
    mode: ReleaseMode = ReleaseMode.DRIVEN
    active_timer: float = 0.0
    passive_timer: float = 0.0

    @property
    def released(self) -> bool:
        return self.mode is not ReleaseMode.DRIVEN


@dataclass(frozen=True)
class GiverState:
    hand_pose: Pose
    capsule_poses: tuple[Pose, ...]
    object_pose: Pose


def _interp_row(row_a, row_b, s: float) -> Pose:
    pos = vec_lerp((row_a[0], row_a[1], row_a[2]), (row_b[0], row_b[1], row_b[2]), s)
    quat = quat_slerp(
        (row_a[3], row_a[4], row_a[5], row_a[6]), (row_b[3], row_b[4], row_b[5], row_b[6]), s
    )
    return Pose(pos, quat)


def replay_giver(scene: Scene, t: float) -> GiverState:
    """Giver poses at time t: interpolated inside the trajectory, held fixed
    at the last frame afterwards."""
    if t < 0.0:
        raise ValueError("replay time must be non-negative")
    if scene.frame_count == 0:
        raise ValueError("scene has no frames")
    times = scene.times
    if t >= times[-1]:
        i0 = i1 = scene.frame_count - 1
        s = 0.0
    else:
        i1 = int(np.searchsorted(times, t, side="right"))
        i1 = min(i1, scene.frame_count - 1)
        i0 = max(i1 - 1, 0)
        span = times[i1] - times[i0]
        s = 0.0 if span == 0.0 else float((t - times[i0]) / span)
    if s == 0.0:
        hand = pose_from_row(scene.hand_poses[i0])
        capsules = tuple(pose_from_row(scene.capsule_poses[i0, k]) for k in range(N_HAND_CAPSULES))
        obj = pose_from_row(scene.object_poses[i0])
    else:
        hand = _interp_row(scene.hand_poses[i0], scene.hand_poses[i1], s)
        capsules = tuple(
            _interp_row(scene.capsule_poses[i0, k], scene.capsule_poses[i1, k], s)
            for k in range(N_HAND_CAPSULES)
        )
        obj = _interp_row(scene.object_poses[i0], scene.object_poses[i1], s)
    return GiverState(hand_pose=hand, capsule_poses=capsules, object_pose=obj)


def update_release(state: ReleaseState, contacts: ContactSet, dt: float) -> ReleaseState:
    """Advance the release timers by one control step.

    Active: the object touches BOTH gripping surfaces continuously for 0.1 s.
    Passive: the object touches NO gripping surface but some other robot body
    part, continuously for 0.1 s.  Any gap resets the running timer; released
    states are absorbing.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if state.released:
        return state
    grips = contacts.grip_sides_on_target()
    both_grips = len(grips) == 2
    passive_cond = len(grips) == 0 and contacts.nongrip_robot_on_target()
    active_timer = state.active_timer + dt if both_grips else 0.0
    passive_timer = state.passive_timer + dt if passive_cond else 0.0
    if active_timer >= RELEASE_HOLD_TIME - TIMER_EPS:
        return ReleaseState(ReleaseMode.ACTIVE_RELEASED)
    if passive_timer >= RELEASE_HOLD_TIME - TIMER_EPS:
        return ReleaseState(ReleaseMode.PASSIVE_RELEASED)
    return ReleaseState(ReleaseMode.DRIVEN, active_timer, passive_timer)


class ObjectMode(Enum):
    DRIVEN = "driven"
    ATTACHED = "attached"
    BALLISTIC = "ballistic"
    RESTING = "resting"


@dataclass(frozen=True)
class ObjectDynamicState:
    mode: ObjectMode
    pose: Pose
    linear_velocity: Vec3 = (0.0, 0.0, 0.0)
    attach_transform: Pose | None = None  # object pose in the palm frame


@dataclass(frozen=True)
class TableSupport:
    """Where a falling object may come to rest."""

    top_z: float
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    rest_half_height: float

    def under_object(self, p: Vec3) -> bool:
        return self.x_range[0] <= p[0] <= self.x_range[1] and self.y_range[0] <= p[1] <= self.y_range[1]


def step_object(
    obj: ObjectDynamicState,
    release: ReleaseState,
    contacts: ContactSet,
    palm: Pose,
    driven_pose: Pose,
    dt: float,
    support: TableSupport,
) -> ObjectDynamicState:
    """One control step of the object, after the release FSM has advanced.

    Driven objects follow the replay.  At the release instant the object
    attaches to the palm if both gripping surfaces touch it, else it goes
    ballistic.  Attachment breaks as soon as either grip contact is missing
    for a full control step.  Ballistic motion is semi-implicit Euler with
    frozen orientation, resting on the table when the underside reaches it.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")

    if not release.released:
        return ObjectDynamicState(ObjectMode.DRIVEN, driven_pose)

    mode = obj.mode
    if mode is ObjectMode.DRIVEN:
        # release fired this step
        if len(contacts.grip_sides_on_target()) == 2:
            return ObjectDynamicState(
                ObjectMode.ATTACHED,
                obj.pose,
                (0.0, 0.0, 0.0),
                attach_transform=palm.inverse().compose(obj.pose),
            )
        mode = ObjectMode.BALLISTIC

    if mode is ObjectMode.ATTACHED:
        if len(contacts.grip_sides_on_target()) < 2:
            mode = ObjectMode.BALLISTIC
        else:
            assert obj.attach_transform is not None
            return ObjectDynamicState(
                ObjectMode.ATTACHED, palm.compose(obj.attach_transform), (0.0, 0.0, 0.0), obj.attach_transform
            )

    if mode is ObjectMode.RESTING:
        return obj

    # ballistic free fall
    vx, vy, vz = obj.linear_velocity
    vz -= GRAVITY * dt
    p = obj.pose.position
    new_p = (p[0] + vx * dt, p[1] + vy * dt, p[2] + vz * dt)
    rest_z = support.top_z + support.rest_half_height
    if new_p[2] <= rest_z and support.under_object(new_p):
        return ObjectDynamicState(
            ObjectMode.RESTING, Pose((new_p[0], new_p[1], rest_z), obj.pose.orientation)
        )
    return ObjectDynamicState(ObjectMode.BALLISTIC, Pose(new_p, obj.pose.orientation), (vx, vy, vz))
