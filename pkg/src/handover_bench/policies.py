"""Baseline receiver policies and the grasp catalog they share.

Grasps are antipodal pinches on the primitive object shapes, generated per
object in its local frame: the approach direction is pitched below the
horizontal (shallow for compact objects, steep for tall ones, biting near
the top rim), and the closing line always crosses the object body.  All
policies are deterministic functions of the observations and their config.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .contact import Box, Capsule, Shape
from .episode import EnvConfig, Observation
from .geometry import (
    Pose,
    Vec3,
    quat_mul,
    quat_rotate,
    rot_y,
    rot_z,
    vec_dist,
    vec_norm,
    vec_scale,
    vec_sub,
)
from .handover_fsm import ReleaseMode
from .kinematics import (
    ARM_DOF,
    DOF,
    GRIP_BOX_CENTER_Z,
    KinematicChain,
    forward_kinematics,
    ik_solve,
    ik_step,
    panda_like_chain,
)
from .scene_data import OBJECT_MODELS, ObjectModel, Scene

# how far along the palm z-axis the grasp line sits (between the grip pads)
GRASP_DEPTH = 0.042
# fingers bite this far past the object surface nearest the palm
GRIP_BITE = 0.025
MAX_GRASP_WIDTH = 0.070
PREGRASP_OFFSET = 0.10
PITCH_SHALLOW = 0.7
PITCH_STEEP = 1.15
PITCH_TOP = math.pi / 2

# arm configurations facing the presentation zone, used to seed IK
SEED_SHALLOW = (-1.1324, 1.0641, 1.1569, -1.9882, -2.3107, 2.5988, -0.8702, 0.04, 0.04)
SEED_STEEP = (-1.0594, 0.765, 1.0779, -2.0543, -1.2989, 2.5768, -1.5147, 0.04, 0.04)


@dataclass(frozen=True)
class GraspPose:
    """Palm pose in the object frame plus the approach standoff."""

    palm: Pose
    pregrasp_offset: float
    width: float

    def __post_init__(self):
        if self.pregrasp_offset <= 0.0:
            raise ValueError("pregrasp offset must be positive")

    def approach_dir(self) -> Vec3:
        return quat_rotate(self.palm.orientation, (0.0, 0.0, 1.0))

    def pregrasp(self) -> Pose:
        a = self.approach_dir()
        p = self.palm.position
        return Pose(
            (
                p[0] - a[0] * self.pregrasp_offset,
                p[1] - a[1] * self.pregrasp_offset,
                p[2] - a[2] * self.pregrasp_offset,
            ),
            self.palm.orientation,
        )


def support_extent(shape: Shape, d: Vec3) -> float:
    """Half-extent of the shape along a unit direction."""
    if isinstance(shape, Box):
        h = shape.half_extents
        return h[0] * abs(d[0]) + h[1] * abs(d[1]) + h[2] * abs(d[2])
    assert isinstance(shape, Capsule)
    return shape.half_length * abs(d[2]) + shape.radius


def point_in_shape(shape: Shape, p: Vec3) -> bool:
    if isinstance(shape, Box):
        h = shape.half_extents
        return abs(p[0]) <= h[0] and abs(p[1]) <= h[1] and abs(p[2]) <= h[2]
    assert isinstance(shape, Capsule)
    z = min(shape.half_length, max(-shape.half_length, p[2]))
    return math.hypot(p[0], p[1], p[2] - z) <= shape.radius


def closing_segment_hits(shape: Shape, palm: Pose, width: float, samples: int = 21) -> bool:
    """True when the segment between the closed fingertips crosses the shape."""
    half = 0.5 * width
    tip_z = 0.05
    for k in range(samples):
        y = -half + (2.0 * half) * k / (samples - 1)
        p = palm.transform_point((0.0, y, tip_z))
        if point_in_shape(shape, p):
            return True
    return False


def _grasp_width(shape: Shape, closing_obj: Vec3) -> float:
    if isinstance(shape, Capsule):
        return 2.0 * shape.radius
    return 2.0 * support_extent(shape, closing_obj)


def _candidate(shape: Shape, yaw: float, pitch: float) -> GraspPose | None:
    """Build one candidate: approach pitched down at the given azimuth.

    The grip line bites GRIP_BITE past the surface nearest the palm; a
    candidate survives only if that line still crosses the object body with
    a few millimeters of material on the closing sides.
    """
    orientation = quat_mul(rot_z(yaw), rot_y(math.pi / 2 + pitch))
    a = quat_rotate(orientation, (0.0, 0.0, 1.0))
    closing = quat_rotate(orientation, (0.0, 1.0, 0.0))
    width = _grasp_width(shape, closing)
    if width > MAX_GRASP_WIDTH:
        return None
    back = vec_scale(a, -1.0)
    offset = max(0.0, support_extent(shape, back) - GRIP_BITE)
    # the offset displaces the grip line toward the rim; keep it on the body
    lateral = offset * math.hypot(a[0], a[1])
    vertical = offset * abs(a[2])
    if isinstance(shape, Capsule):
        if lateral > shape.radius - 0.006:
            return None
        if vertical > shape.half_length + 0.4 * shape.radius:
            return None
    else:
        horiz = math.hypot(a[0], a[1])
        if horiz > 1e-9:
            lat_dir = (a[0] / horiz, a[1] / horiz, 0.0)
            if lateral > support_extent(shape, lat_dir) - 0.006:
                return None
    grip_point = vec_scale(back, offset)
    palm_pos = (
        grip_point[0] - a[0] * GRASP_DEPTH,
        grip_point[1] - a[1] * GRASP_DEPTH,
        grip_point[2] - a[2] * GRASP_DEPTH,
    )
    grasp = GraspPose(Pose(palm_pos, orientation), PREGRASP_OFFSET, width)
    if not closing_segment_hits(shape, grasp.palm, width):
        return None
    return grasp


def generate_grasps(model: ObjectModel, yaw_steps: int = 8) -> tuple[GraspPose, ...]:
    """Antipodal pinch candidates over azimuth and the three pitch families."""
    grasps = []
    for pitch in (PITCH_SHALLOW, PITCH_STEEP, PITCH_TOP):
        for k in range(yaw_steps):
            yaw = 2.0 * math.pi * k / yaw_steps
            g = _candidate(model.shape, yaw, pitch)
            if g is not None:
                grasps.append(g)
    return tuple(grasps)


GRASP_CATALOG: dict[str, tuple[GraspPose, ...]] = {
    oid: generate_grasps(model) for oid, model in OBJECT_MODELS.items()
}


def _world_grasp(obj_pose: Pose, grasp: GraspPose) -> Pose:
    return obj_pose.compose(grasp.palm)


# gripper envelope probe points (palm frame) for hand-clearance scoring,
# including the lower corners of the open finger boxes
_CLEARANCE_POINTS: tuple[Vec3, ...] = (
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 0.05),
    (0.0, 0.047, 0.026),
    (0.0, -0.047, 0.026),
    (0.0, 0.047, 0.05),
    (0.0, -0.047, 0.05),
    (0.012, 0.05, 0.05),
    (-0.012, 0.05, 0.05),
    (0.012, -0.05, 0.05),
    (-0.012, -0.05, 0.05),
    (0.0, 0.0, -0.05),
)


def _point_segment_dist(p: Vec3, a: Vec3, b: Vec3) -> float:
    ab = vec_sub(b, a)
    denom = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2]
    if denom == 0.0:
        return vec_dist(p, a)
    t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1] + (p[2] - a[2]) * ab[2]) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return vec_dist(p, (a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]))


def hand_clearance(world_palm: Pose, capsule_poses: Sequence[Pose]) -> float:
    """Min distance from the gripper envelope to the hand proxy capsules."""
    from .scene_data import HAND_CAPSULE_SHAPES

    best = math.inf
    for shape, pose in zip(HAND_CAPSULE_SHAPES, capsule_poses):
        axis = quat_rotate(pose.orientation, (0.0, 0.0, shape.half_length))
        a = vec_sub(pose.position, axis)
        b = (pose.position[0] + axis[0], pose.position[1] + axis[1], pose.position[2] + axis[2])
        for local in _CLEARANCE_POINTS:
            p = world_palm.transform_point(local)
            d = _point_segment_dist(p, a, b) - shape.radius
            if d < best:
                best = d
    return best


def select_grasp(
    object_id: str,
    obj_pose: Pose,
    palm_pos: Vec3,
    alignment_weight: float = 0.35,
) -> tuple[GraspPose, Pose] | None:
    """Cheapest reachable-looking candidate: distance plus front alignment.

    Hand-clearance-agnostic by design; the front-alignment term merely
    prefers approaching from the receiver's side of the table.
    """
    best = None
    op = obj_pose.position
    azim = math.atan2(op[1], op[0])
    front = (math.cos(azim), math.sin(azim), 0.0)
    for grasp in GRASP_CATALOG[object_id]:
        world = _world_grasp(obj_pose, grasp)
        a = quat_rotate(world.orientation, (0.0, 0.0, 1.0))
        align = a[0] * front[0] + a[1] * front[1]
        cost = vec_dist(world.position, palm_pos) + alignment_weight * (1.0 - align)
        if best is None or cost < best[0]:
            best = (cost, grasp, world)
    if best is None:
        return None
    return best[1], best[2]


class Policy(Protocol):
    name: str

    def reset(self, scene: Scene) -> None: ...

    def act(self, obs: Observation) -> tuple[float, ...]: ...


def _interp_joint_path(waypoints: Sequence[tuple[float, ...]], step: float) -> list[tuple[float, ...]]:
    """Dense joint-space targets with per-step moves capped at `step` rad/m."""
    path: list[tuple[float, ...]] = []
    for a, b in zip(waypoints, waypoints[1:]):
        span = max(abs(bi - ai) for ai, bi in zip(a, b))
        n = max(1, math.ceil(span / step))
        for k in range(1, n + 1):
            s = k / n
            path.append(tuple(ai + s * (bi - ai) for ai, bi in zip(a, b)))
    return path


def _with_fingers(q: Sequence[float], opening: float) -> tuple[float, ...]:
    return tuple(q[:ARM_DOF]) + (opening, opening)


@dataclass
class PolicyContext:
    """Per-episode mutable policy state; reset() rebuilds it from scratch."""

    phase: str = "wait"
    plan: list[tuple[float, ...]] = field(default_factory=list)
    plan_index: int = 0
    grasp_q: tuple[float, ...] | None = None
    lift_q: tuple[float, ...] | None = None
    retreat_q: tuple[float, ...] | None = None
    settle_steps: int = 0


class HoldThenPlanPolicy:
    """Open-loop baseline: hold the start pose while the giver moves, then
    plan one grasp from the presented object pose and execute it blindly,
    closing the gripper and pulling back to the goal region."""

    name = "hold_then_plan"

    def __init__(self, chain: KinematicChain | None = None, config: EnvConfig | None = None,
                 plan_step: float = 0.02, settle_time: float = 0.25):
        self.chain = chain or panda_like_chain()
        self.config = config or EnvConfig()
        self.plan_step = plan_step
        self.settle_steps_needed = max(1, round(settle_time / self.config.control_dt))
        self.ctx = PolicyContext()

    def reset(self, scene: Scene) -> None:
        self.ctx = PolicyContext()
        self.presentation_time = scene.end_time
        self.object_id = scene.object_id
        self.base_pose = Pose((0.0, 0.0, scene.table_height))
        self.goal_world = self.base_pose.transform_point(self.config.goal.center)

    def act(self, obs: Observation) -> tuple[float, ...]:
        ctx = self.ctx
        if ctx.phase == "wait":
            if obs.time < self.presentation_time:
                return obs.q
            self._plan(obs)
            if ctx.phase == "wait":
                return obs.q  # no reachable grasp; keep holding
        if ctx.phase == "traverse":
            if ctx.plan_index < len(ctx.plan):
                target = ctx.plan[ctx.plan_index]
                ctx.plan_index += 1
                return target
            ctx.phase = "settle"
            ctx.settle_steps = 0
        if ctx.phase == "settle":
            ctx.settle_steps += 1
            if ctx.settle_steps >= self.settle_steps_needed:
                ctx.phase = "close"
            return _with_fingers(ctx.grasp_q, 0.04)
        if ctx.phase == "close":
            if obs.release is not ReleaseMode.DRIVEN:
                ctx.phase = "retreat"
                ctx.plan = _interp_joint_path(
                    [
                        _with_fingers(obs.q, 0.0),
                        _with_fingers(ctx.lift_q, 0.0),
                        _with_fingers(ctx.retreat_q, 0.0),
                    ],
                    self.plan_step,
                )
                ctx.plan_index = 0
                return _with_fingers(obs.q, 0.0)
            return _with_fingers(ctx.grasp_q, 0.0)
        if ctx.phase == "retreat":
            if ctx.plan_index < len(ctx.plan):
                target = ctx.plan[ctx.plan_index]
                ctx.plan_index += 1
                return target
            return _with_fingers(self.ctx.retreat_q, 0.0)
        raise AssertionError(f"unknown phase {ctx.phase}")

    def _plan(self, obs: Observation) -> None:
        selected = select_grasp(self.object_id, obs.object_pose, obs.palm.position)
        if selected is None:
            return
        grasp, world_grasp = selected
        world_pre = obs.object_pose.compose(grasp.pregrasp())
        q_pre = self._solve(obs.q, world_pre)
        if q_pre is None:
            return
        q_grasp = self._solve(q_pre, world_grasp)
        if q_grasp is None:
            return
        lift = Pose(
            (world_grasp.position[0], world_grasp.position[1], world_grasp.position[2] + 0.06),
            world_grasp.orientation,
        )
        q_lift = self._solve(q_grasp, lift)
        if q_lift is None:
            return
        q_goal = self._solve(q_lift, Pose(self.goal_world, world_grasp.orientation))
        if q_goal is None:
            return
        ctx = self.ctx
        ctx.grasp_q = q_grasp
        ctx.lift_q = q_lift
        ctx.retreat_q = q_goal
        ctx.plan = _interp_joint_path(
            [obs.q, _with_fingers(q_pre, 0.04), _with_fingers(q_grasp, 0.04)], self.plan_step
        )
        ctx.plan_index = 0
        ctx.phase = "traverse"

    def _solve(self, seed_q, target: Pose):
        for seed in (seed_q, SEED_SHALLOW, SEED_STEEP):
            q = ik_solve(self.chain, _with_fingers(seed, 0.04), target, base=self.base_pose)
            if q is not None:
                return q
        return None


class ReactiveFrontApproachPolicy:
    """Closed-loop baseline: every step, re-aim at a front-side pregrasp of
    the object's current pose and track it with one differential-IK step;
    close when aligned, then pull back to the goal region."""

    name = "reactive_front_approach"

    def __init__(self, chain: KinematicChain | None = None, config: EnvConfig | None = None,
                 close_dist: float = 0.012):
        self.chain = chain or panda_like_chain()
        self.config = config or EnvConfig()
        self.close_dist = close_dist
        self.ctx = PolicyContext()

    def reset(self, scene: Scene) -> None:
        self.ctx = PolicyContext()
        self.ctx.phase = "track"
        self.object_id = scene.object_id
        self.base_pose = Pose((0.0, 0.0, scene.table_height))
        self.goal_world = self.base_pose.transform_point(self.config.goal.center)
        self.goal_orientation = None

    def act(self, obs: Observation) -> tuple[float, ...]:
        ctx = self.ctx
        if ctx.phase == "track":
            selected = select_grasp(self.object_id, obs.object_pose, obs.palm.position)
            if selected is None:
                return obs.q
            grasp, world_grasp = selected
            err = vec_dist(obs.palm.position, world_grasp.position)
            if err < self.close_dist:
                ctx.phase = "close"
                ctx.grasp_q = obs.q
                self.goal_orientation = world_grasp.orientation
                return _with_fingers(obs.q, 0.0)
            # shrink the standoff as the palm homes in
            standoff = min(grasp.pregrasp_offset, max(0.0, err - 0.04))
            a = quat_rotate(world_grasp.orientation, (0.0, 0.0, 1.0))
            target = Pose(
                (
                    world_grasp.position[0] - a[0] * standoff,
                    world_grasp.position[1] - a[1] * standoff,
                    world_grasp.position[2] - a[2] * standoff,
                ),
                world_grasp.orientation,
            )
            try:
                q_target = ik_step(self.chain, obs.q, target, base=self.base_pose)
            except Exception:
                return obs.q
            return _with_fingers(q_target, 0.04)
        if ctx.phase == "close":
            if obs.release is not ReleaseMode.DRIVEN:
                ctx.phase = "lift"
                self._lift_target = Pose(
                    (obs.palm.position[0], obs.palm.position[1], obs.palm.position[2] + 0.06),
                    obs.palm.orientation,
                )
            return _with_fingers(obs.q, 0.0)
        orientation = self.goal_orientation or obs.palm.orientation
        if ctx.phase == "lift":
            if obs.palm.position[2] >= self._lift_target.position[2] - 0.01:
                ctx.phase = "retreat"
            else:
                try:
                    q_target = ik_step(self.chain, obs.q, self._lift_target, base=self.base_pose)
                except Exception:
                    return obs.q
                return _with_fingers(q_target, 0.0)
        # retreat
        try:
            q_target = ik_step(self.chain, obs.q, Pose(self.goal_world, orientation), base=self.base_pose)
        except Exception:
            return obs.q
        return _with_fingers(q_target, 0.0)


class ScriptedOraclePolicy:
    """Test-fixture policy with full scene knowledge: waits out the giver
    trajectory, follows a precomputed straight palm-space line through the
    pregrasp with the most hand clearance, grasps, and retreats."""

    name = "scripted_oracle"

    def __init__(self, chain: KinematicChain | None = None, config: EnvConfig | None = None,
                 plan_step: float = 0.02, settle_time: float = 0.25):
        self.chain = chain or panda_like_chain()
        self.config = config or EnvConfig()
        self.plan_step = plan_step
        self.settle_steps_needed = max(1, round(settle_time / self.config.control_dt))
        self.ctx = PolicyContext()

    def reset(self, scene: Scene) -> None:
        self.ctx = PolicyContext()
        self.presentation_time = scene.end_time
        self.base_pose = Pose((0.0, 0.0, scene.table_height))
        self.goal_world = self.base_pose.transform_point(self.config.goal.center)
        self._precompute(scene)

    def _precompute(self, scene: Scene) -> None:
        from .scene_data import pose_from_row

        obj_pose = pose_from_row(scene.object_poses[-1])
        capsules = [pose_from_row(scene.capsule_poses[-1, k]) for k in range(scene.capsule_poses.shape[1])]
        azim = math.atan2(obj_pose.position[1], obj_pose.position[0])
        scored = []
        for grasp in GRASP_CATALOG[scene.object_id]:
            world = _world_grasp(obj_pose, grasp)
            clearance = hand_clearance(world, capsules)
            a = quat_rotate(world.orientation, (0.0, 0.0, 1.0))
            align = a[0] * math.cos(azim) + a[1] * math.sin(azim)
            scored.append((min(clearance, 0.06) + 0.02 * align, clearance, grasp, world))
        # clear grasp axis: require real clearance, else take the safest
        scored.sort(key=lambda s: -s[0])
        usable = [s for s in scored if s[1] >= 0.02] or scored[:1]
        if not usable:
            return
        _, _, grasp, world_grasp = usable[0]
        world_pre = obj_pose.compose(grasp.pregrasp())

        start_q = _with_fingers(self.config.start_q, 0.04)
        frames = forward_kinematics(self.chain, start_q, self.base_pose)
        # straight palm-space line: start -> pregrasp -> grasp
        waypoints_q = [start_q]
        ok = self._follow_line(waypoints_q, frames.palm, world_pre, grasp_orientation=world_pre.orientation)
        ok = ok and self._follow_line(waypoints_q, world_pre, world_grasp, grasp_orientation=world_grasp.orientation)
        if not ok:
            return
        q_grasp = waypoints_q[-1]
        # lift clear of the giver's hand before pulling back to the goal
        lift = Pose(
            (world_grasp.position[0], world_grasp.position[1], world_grasp.position[2] + 0.06),
            world_grasp.orientation,
        )
        retreat_q = [q_grasp]
        ok = self._follow_line(retreat_q, world_grasp, lift, grasp_orientation=world_grasp.orientation)
        ok = ok and self._follow_line(
            retreat_q, lift, Pose(self.goal_world, world_grasp.orientation),
            grasp_orientation=world_grasp.orientation,
        )
        if not ok:
            return
        ctx = self.ctx
        ctx.grasp_q = q_grasp
        ctx.retreat_q = retreat_q[-1]
        ctx.plan = _interp_joint_path(waypoints_q, self.plan_step)
        self._retreat_plan = _interp_joint_path(
            [_with_fingers(q, 0.0) for q in retreat_q], self.plan_step
        )

    def _follow_line(self, out_q: list, start: Pose, end: Pose, grasp_orientation, spacing: float = 0.02) -> bool:
        """Chain waypoints along a straight palm line with damped IK steps,
        converging exactly on the segment's end pose."""
        n = max(1, math.ceil(vec_dist(start.position, end.position) / spacing))
        cur = out_q[-1]
        for k in range(1, n + 1):
            s = k / n
            p = (
                start.position[0] + s * (end.position[0] - start.position[0]),
                start.position[1] + s * (end.position[1] - start.position[1]),
                start.position[2] + s * (end.position[2] - start.position[2]),
            )
            target = Pose(p, grasp_orientation)
            for _ in range(3):
                cur = ik_step(self.chain, cur, target, base=self.base_pose)
            out_q.append(cur)
        final = ik_solve(self.chain, cur, Pose(end.position, grasp_orientation), base=self.base_pose, iterations=120)
        if final is None:
            return False
        out_q.append(final)
        return True

    def act(self, obs: Observation) -> tuple[float, ...]:
        ctx = self.ctx
        if ctx.phase == "wait":
            if obs.time < self.presentation_time or not ctx.plan:
                return obs.q
            ctx.phase = "traverse"
            ctx.plan_index = 0
        if ctx.phase == "traverse":
            if ctx.plan_index < len(ctx.plan):
                target = ctx.plan[ctx.plan_index]
                ctx.plan_index += 1
                return _with_fingers(target, 0.04)
            ctx.phase = "settle"
            ctx.settle_steps = 0
        if ctx.phase == "settle":
            ctx.settle_steps += 1
            if ctx.settle_steps >= self.settle_steps_needed:
                ctx.phase = "close"
            return _with_fingers(ctx.grasp_q, 0.04)
        if ctx.phase == "close":
            if obs.release is not ReleaseMode.DRIVEN:
                ctx.phase = "retreat"
                ctx.plan = self._retreat_plan
                ctx.plan_index = 0
            return _with_fingers(obs.q if ctx.phase == "retreat" else ctx.grasp_q, 0.0)
        if ctx.phase == "retreat":
            if ctx.plan_index < len(ctx.plan):
                target = ctx.plan[ctx.plan_index]
                ctx.plan_index += 1
                return target
            return _with_fingers(ctx.retreat_q, 0.0)
        raise AssertionError(f"unknown phase {ctx.phase}")


class ZeroMotionPolicy:
    """Emits the current configuration forever; the episode times out."""

    name = "zero_motion"

    def __init__(self, chain: KinematicChain | None = None, config: EnvConfig | None = None):
        pass

    def reset(self, scene: Scene) -> None:
        pass

    def act(self, obs: Observation) -> tuple[float, ...]:
        return obs.q


POLICIES: dict[str, Callable[..., Policy]] = {
    "hold_then_plan": HoldThenPlanPolicy,
    "reactive_front_approach": ReactiveFrontApproachPolicy,
    "scripted_oracle": ScriptedOraclePolicy,
    "zero_motion": ZeroMotionPolicy,
}


def make_policy(name: str, chain: KinematicChain | None = None, config: EnvConfig | None = None) -> Policy:
    if name not in POLICIES:
        raise KeyError(f"unknown policy {name!r}; available: {', '.join(sorted(POLICIES))}")
    return POLICIES[name](chain=chain, config=config)


def curated_easy_scenes(scenes: Sequence[Scene], limit: int = 50) -> list[Scene]:
    """Scenes presenting the object hand-below with a clear grasp axis and a
    comfortable presentation window; first `limit` by scene id."""
    picked = []
    for scene in sorted(scenes, key=lambda s: s.scene_id):
        if scene.object_id not in GRASP_CATALOG or not GRASP_CATALOG[scene.object_id]:
            continue
        op = scene.object_poses[-1]
        x, y, z = float(op[0]), float(op[1]), float(op[2])
        lift = z - scene.table_height
        if not (0.59 <= x <= 0.69 and abs(y) <= 0.10 and 0.17 <= lift <= 0.28):
            continue
        # hand strictly below the object at presentation
        caps = scene.capsule_poses[-1]
        if any(caps[k, 2] > z - 0.03 for k in range(caps.shape[0])):
            continue
        picked.append(scene)
        if len(picked) >= limit:
            break
    return picked
