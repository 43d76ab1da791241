"""Step/reset environment: PD-integrated receiver, giver replay, contact
classification, release FSM, and the success/failure automaton.

Each control step advances the arm through PD substeps, replays the giver,
queries contacts once, updates the release state machine and object
dynamics, and evaluates termination.  Episodes are bit-deterministic:
the trace is a pure function of (scene, action sequence, config).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .contact import (
    HAND,
    TABLE,
    TARGET_OBJECT,
    BodyTag,
    Box,
    Capsule,
    ContactSet,
    Sphere,
    arm_link,
    build_pair_table,
    collide_pairs,
    distractor,
    finger_grip,
    finger_other,
)
from .geometry import (
    Pose,
    Vec3,
    quat_from_axis_angle,
    vec_cross,
    vec_dist,
    vec_norm,
    vec_scale,
    vec_sub,
)
from .handover_fsm import (
    TIMER_EPS,
    GiverState,
    ObjectDynamicState,
    ObjectMode,
    ReleaseMode,
    ReleaseState,
    TableSupport,
    replay_giver,
    step_object,
    update_release,
)
from .kinematics import (
    ARM_CAPSULE_RADII,
    DOF,
    FINGER_BOX_CENTER_Y,
    FINGER_BOX_CENTER_Z,
    FINGER_BOX_HALF,
    GRIP_BOX_CENTER_Y,
    GRIP_BOX_CENTER_Z,
    GRIP_BOX_HALF,
    HOME_Q,
    PALM_BOX_CENTER_Z,
    PALM_BOX_HALF,
    KinematicChain,
    LinkFrames,
    forward_kinematics,
    panda_like_chain,
    pd_step,
)
from .scene_data import (
    HAND_CAPSULE_SHAPES,
    OBJECT_MODELS,
    ConfigurationError,
    ProtocolError,
    Scene,
)
from .textio import LineReader, fmt_float, fmt_floats


class StatusKind(Enum):
    RUNNING = "running"
    SUCCESS = "success"
    FAILURE = "failure"


class FailureCause(Enum):
    CONTACT = "contact"
    DROP = "drop"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class EpisodeStatus:
    kind: StatusKind
    cause: FailureCause | None = None

    @property
    def terminal(self) -> bool:
        return self.kind is not StatusKind.RUNNING

    def label(self) -> str:
        if self.kind is StatusKind.FAILURE:
            assert self.cause is not None
            return self.cause.value
        return self.kind.value

    @staticmethod
    def from_label(label: str) -> "EpisodeStatus":
        if label == "running":
            return RUNNING
        if label == "success":
            return SUCCESS
        return EpisodeStatus(StatusKind.FAILURE, FailureCause(label))


RUNNING = EpisodeStatus(StatusKind.RUNNING)
SUCCESS = EpisodeStatus(StatusKind.SUCCESS)
FAIL_CONTACT = EpisodeStatus(StatusKind.FAILURE, FailureCause.CONTACT)
FAIL_DROP = EpisodeStatus(StatusKind.FAILURE, FailureCause.DROP)
FAIL_TIMEOUT = EpisodeStatus(StatusKind.FAILURE, FailureCause.TIMEOUT)


@dataclass(frozen=True)
class GoalRegion:
    """Sphere near the robot base the palm must occupy for success."""

    center: Vec3 = (0.40, 0.0, 0.30)  # in the robot base frame
    radius: float = 0.15

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ConfigurationError("goal radius must be positive")


@dataclass(frozen=True)
class EnvConfig:
    control_dt: float = 1.0 / 60.0
    substeps: int = 4
    goal: GoalRegion = GoalRegion()
    contact_margin: float = 0.001
    time_limit: float = 13.0
    success_hold: float = 0.1
    start_q: tuple[float, ...] = HOME_Q
    table_center: tuple[float, float] = (0.60, 0.0)
    table_half_extents: tuple[float, float] = (0.35, 0.40)
    table_thickness: float = 0.04

    def validate(self) -> None:
        if self.control_dt <= 0.0 or self.substeps < 1:
            raise ConfigurationError("control_dt must be positive, substeps >= 1")
        if self.contact_margin < 0.0:
            raise ConfigurationError("contact margin cannot be negative")
        if self.time_limit <= 0.0 or self.success_hold <= 0.0:
            raise ConfigurationError("time limit and success hold must be positive")
        if len(self.start_q) != DOF:
            raise ConfigurationError(f"start_q needs {DOF} values")
        if min(self.table_half_extents) <= 0.0 or self.table_thickness <= 0.0:
            raise ConfigurationError("table dimensions must be positive")


@dataclass(frozen=True)
class Observation:
    """Ground-truth simulation state handed to the policy each step."""

    time: float
    q: tuple[float, ...]
    palm: Pose
    hand_capsules: tuple[Pose, ...]
    object_pose: Pose
    distractors: tuple[tuple[str, Pose], ...]
    release: ReleaseMode


Action = Sequence[float]


def _capsule_between(p0: Vec3, p1: Vec3, radius: float) -> tuple[Capsule | Sphere, Pose]:
    """Capsule spanning two points; degenerates to a sphere for short spans
    so the world layout stays fixed across configurations."""
    d = vec_sub(p1, p0)
    length = vec_norm(d)
    mid = (0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]), 0.5 * (p0[2] + p1[2]))
    if length < 0.03:
        return Sphere(radius), Pose(mid)
    dn = vec_scale(d, 1.0 / length)
    c = vec_cross((0.0, 0.0, 1.0), dn)
    cn = vec_norm(c)
    if cn < 1e-12:
        quat = (1.0, 0.0, 0.0, 0.0) if dn[2] > 0.0 else (0.0, 1.0, 0.0, 0.0)
    else:
        quat = quat_from_axis_angle(c, math.atan2(cn, dn[2]))
    return Capsule(radius, 0.5 * length), Pose(mid, quat)


ROBOT_SHAPE_TAGS: tuple[BodyTag, ...] = tuple(
    [arm_link(i) for i in range(8)]
    + [arm_link(8), finger_other(0), finger_grip(0), finger_other(1), finger_grip(1)]
)


def robot_collision_shapes(frames: LinkFrames) -> list[tuple]:
    """Arm segment capsules plus palm/finger boxes, in fixed tag order.

    The wrist capsule stops short of the palm so that the gripper, not the
    forearm, is what meets a grasped object; the palm box covers the rest.
    """
    shapes: list[tuple] = []
    wrist_end = frames.palm.transform_point((0.0, 0.0, -0.075))
    pts = [frames.base.position] + [f.position for f in frames.arm] + [wrist_end]
    for i in range(8):
        radius = 0.045 if i == 7 else ARM_CAPSULE_RADII[i]
        shape, pose = _capsule_between(pts[i], pts[i + 1], radius)
        shapes.append((shape, pose))
    shapes.append((Box(PALM_BOX_HALF), frames.palm.compose(Pose((0.0, 0.0, PALM_BOX_CENTER_Z)))))
    for side, frame in enumerate(frames.fingers):
        sign = 1.0 if side == 0 else -1.0
        shapes.append(
            (Box(FINGER_BOX_HALF), frame.compose(Pose((0.0, sign * FINGER_BOX_CENTER_Y, FINGER_BOX_CENTER_Z))))
        )
        shapes.append(
            (Box(GRIP_BOX_HALF), frame.compose(Pose((0.0, sign * GRIP_BOX_CENTER_Y, GRIP_BOX_CENTER_Z))))
        )
    return shapes


@dataclass
class TraceRecord:
    time: float
    q: tuple[float, ...]
    action: tuple[float, ...]
    object_pose: Pose
    release: ReleaseMode
    status: EpisodeStatus


class HandoverEnv:
    """One scene's episode; call reset() then step() until terminal."""

    def __init__(
        self,
        scene: Scene,
        config: EnvConfig | None = None,
        chain: KinematicChain | None = None,
        record_trace: bool = False,
    ):
        self.config = config or EnvConfig()
        self.config.validate()
        if scene.frame_count < 2:
            raise ValueError("scene must contain at least 2 frames")
        self.scene = scene
        self.chain = chain or panda_like_chain()
        self.record_trace = record_trace
        self.model = OBJECT_MODELS[scene.object_id]

        self.base_pose = Pose((0.0, 0.0, scene.table_height))
        cx, cy = self.config.table_center
        hx, hy = self.config.table_half_extents
        t = self.config.table_thickness
        self.table_shape = (
            Box((hx, hy, 0.5 * t)),
            Pose((cx, cy, scene.table_height - 0.5 * t)),
            TABLE,
        )
        self.support = TableSupport(
            top_z=scene.table_height,
            x_range=(cx - hx, cx + hx),
            y_range=(cy - hy, cy + hy),
            rest_half_height=self.model.half_height,
        )
        self.goal_center_world = self.base_pose.transform_point(self.config.goal.center)

        # fixed world layout: table, distractors, target object, hand
        # capsules, then the robot shapes; the pair table is built once.
        self.static_shapes: list[tuple] = [(self.table_shape[0], self.table_shape[1])]
        tags: list[BodyTag] = [TABLE]
        for i, (oid, pose) in enumerate(scene.distractors):
            self.static_shapes.append((OBJECT_MODELS[oid].shape, pose))
            tags.append(distractor(i))
        tags.append(TARGET_OBJECT)
        tags.extend([HAND] * len(HAND_CAPSULE_SHAPES))
        tags.extend(ROBOT_SHAPE_TAGS)

        exemptions = {(HAND, TARGET_OBJECT), _ordered(HAND, TABLE)}
        n_d = len(scene.distractors)
        for i in range(n_d):
            di = distractor(i)
            exemptions.add(_ordered(HAND, di))
            exemptions.add(_ordered(TABLE, di))
            for j in range(i + 1, n_d):
                exemptions.add(_ordered(di, distractor(j)))
            for rt in ROBOT_SHAPE_TAGS:
                exemptions.add(_ordered(rt, di))
        for a in range(len(ROBOT_SHAPE_TAGS)):
            exemptions.add(_ordered(ROBOT_SHAPE_TAGS[a], TABLE))
            # self-collision is out of scope; adjacent segments always touch
            for b in range(a + 1, len(ROBOT_SHAPE_TAGS)):
                exemptions.add(_ordered(ROBOT_SHAPE_TAGS[a], ROBOT_SHAPE_TAGS[b]))
        self.exemptions = frozenset(exemptions)
        self._pair_table = build_pair_table(tags, self.exemptions)

        self._fk_cache_q: tuple[float, ...] | None = None
        self._fk_cache: tuple[LinkFrames, list] | None = None
        self.reset()

    # -- environment API ----------------------------------------------------

    def reset(self) -> Observation:
        self.q: tuple[float, ...] = tuple(self.config.start_q)
        self.chain.check_limits(self.q)
        self.steps = 0
        self.time = 0.0
        self.release = ReleaseState()
        giver = replay_giver(self.scene, 0.0)
        self.obj_state = ObjectDynamicState(ObjectMode.DRIVEN, giver.object_pose)
        self.status: EpisodeStatus = RUNNING
        self._success_timer = 0.0
        self.moving_time = 0.0
        self.first_move_time = -1.0
        self.trace: list[TraceRecord] = []
        self._last_contacts: ContactSet = ContactSet([])
        return self._observe(giver)

    def step(self, action: Action) -> tuple[Observation, EpisodeStatus]:
        if self.status.terminal:
            raise ProtocolError("episode is terminal; call reset() before stepping again")
        action = tuple(float(a) for a in action)
        if len(action) != DOF:
            raise ValueError(f"action needs {DOF} values, got {len(action)}")
        for a in action:
            if math.isnan(a) or math.isinf(a):
                raise ValueError("action contains non-finite values")

        cfg = self.config
        sub_dt = cfg.control_dt / cfg.substeps
        q_before = self.q
        q = self.q
        for _ in range(cfg.substeps):
            q = pd_step(self.chain, q, action, sub_dt)
        self.q = q

        self.steps += 1
        self.time = self.steps * cfg.control_dt
        if q != q_before:
            self.moving_time += cfg.control_dt
            if self.first_move_time < 0.0:
                self.first_move_time = self.time

        giver = replay_giver(self.scene, self.time)
        frames, robot_shapes = self._frames_and_shapes(q)

        object_pose = giver.object_pose if self.obj_state.mode is ObjectMode.DRIVEN else self.obj_state.pose
        world = list(self.static_shapes)
        world.append((self.model.shape, object_pose))
        for k, cap_shape in enumerate(HAND_CAPSULE_SHAPES):
            world.append((cap_shape, giver.capsule_poses[k]))
        world.extend(robot_shapes)
        contacts = collide_pairs(world, self._pair_table, cfg.contact_margin)
        self._last_contacts = contacts

        self.release = update_release(self.release, contacts, cfg.control_dt)
        self.obj_state = step_object(
            self.obj_state, self.release, contacts, frames.palm, giver.object_pose, cfg.control_dt, self.support
        )

        self.status = self._evaluate_status(contacts, frames)
        obs = self._observe(giver)
        if self.record_trace:
            self.trace.append(
                TraceRecord(self.time, self.q, action, self.obj_state.pose, self.release.mode, self.status)
            )
        return obs, self.status

    def compute_reward(self, obs: Observation) -> float:
        """RL reward hook; the benchmark defines none."""
        return 0.0

    # -- internals -----------------------------------------------------------

    def _frames_and_shapes(self, q: tuple[float, ...]):
        if q == self._fk_cache_q and self._fk_cache is not None:
            return self._fk_cache
        frames = forward_kinematics(self.chain, q, self.base_pose)
        shapes = robot_collision_shapes(frames)
        self._fk_cache_q = q
        self._fk_cache = (frames, shapes)
        return self._fk_cache

    def _evaluate_status(self, contacts: ContactSet, frames: LinkFrames) -> EpisodeStatus:
        cfg = self.config
        held = contacts.finger_on_target() or self.obj_state.mode is ObjectMode.ATTACHED

        if contacts.robot_on_hand():
            return FAIL_CONTACT
        if self.release.released and not held:
            dropped = (
                contacts.target_on_support()
                or self.obj_state.pose.position[2] < self.scene.table_height
            )
            if dropped:
                return FAIL_DROP
        if self.time >= cfg.time_limit - TIMER_EPS:
            return FAIL_TIMEOUT
        in_goal = vec_dist(frames.palm.position, self.goal_center_world) <= cfg.goal.radius
        if held and in_goal:
            self._success_timer += cfg.control_dt
        else:
            self._success_timer = 0.0
        if self._success_timer >= cfg.success_hold - TIMER_EPS:
            return SUCCESS
        return RUNNING

    def _observe(self, giver: GiverState) -> Observation:
        frames, _ = self._frames_and_shapes(self.q)
        object_pose = giver.object_pose if self.obj_state.mode is ObjectMode.DRIVEN else self.obj_state.pose
        return Observation(
            time=self.time,
            q=self.q,
            palm=frames.palm,
            hand_capsules=giver.capsule_poses,
            object_pose=object_pose,
            distractors=self.scene.distractors,
            release=self.release.mode,
        )


def _ordered(a: BodyTag, b: BodyTag) -> tuple[BodyTag, BodyTag]:
    return (a, b) if a <= b else (b, a)


# ---------------------------------------------------------------------------
# per-step trace files

TRACE_MAGIC = "handover-trace"
TRACE_VERSION = "1"
_TRACE_FIELDS = 1 + DOF + DOF + 7 + 1 + 1


def write_trace(records: Sequence[TraceRecord], scene_id: int, control_dt: float, path: str | Path) -> None:
    lines = [
        f"{TRACE_MAGIC} {TRACE_VERSION}",
        f"scene_id {scene_id}",
        f"control_dt {fmt_float(control_dt)}",
        f"records {len(records)}",
    ]
    for r in records:
        lines.append(
            f"{fmt_float(r.time)} {fmt_floats(r.q)} {fmt_floats(r.action)} "
            f"{fmt_floats([*r.object_pose.position, *r.object_pose.orientation])} "
            f"{r.release.value} {r.status.label()}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path: str | Path) -> tuple[int, float, list[TraceRecord]]:
    reader = LineReader(path)
    it = iter(reader)

    def next_line():
        try:
            return next(it)
        except StopIteration:
            raise reader.error("unexpected end of file") from None

    fields, off = next_line()
    if fields[:2] != [TRACE_MAGIC, TRACE_VERSION]:
        raise reader.error("bad trace magic", off)
    fields, off = next_line()
    if fields[0] != "scene_id":
        raise reader.error("expected scene_id header", off)
    scene_id = int(fields[1])
    fields, off = next_line()
    if fields[0] != "control_dt":
        raise reader.error("expected control_dt header", off)
    control_dt = float(fields[1])
    fields, off = next_line()
    if fields[0] != "records":
        raise reader.error("expected records header", off)
    n = int(fields[1])
    records = []
    for _ in range(n):
        fields, off = next_line()
        if len(fields) != _TRACE_FIELDS:
            raise reader.error(f"trace record needs {_TRACE_FIELDS} fields", off)
        try:
            time = float(fields[0])
            q = tuple(float(x) for x in fields[1: 1 + DOF])
            action = tuple(float(x) for x in fields[1 + DOF: 1 + 2 * DOF])
            pose_vals = [float(x) for x in fields[1 + 2 * DOF: 1 + 2 * DOF + 7]]
            release = ReleaseMode(fields[-2])
            status = EpisodeStatus.from_label(fields[-1])
        except ValueError as exc:
            raise reader.error(f"malformed trace record: {exc}", off) from None
        records.append(
            TraceRecord(
                time,
                q,
                action,
                Pose(tuple(pose_vals[:3]), tuple(pose_vals[3:])),
                release,
                status,
            )
        )
    try:
        _extra, off = next(it)
        raise reader.error("trailing data after the last record", off)
    except StopIteration:
        pass
    return scene_id, control_dt, records


def resimulate_trace(
    scene: Scene, records: Sequence[TraceRecord], config: EnvConfig | None = None
) -> list[EpisodeStatus]:
    """Re-run the kernel on a trace's actions; returns the status sequence."""
    env = HandoverEnv(scene, config)
    statuses = []
    for r in records:
        _obs, status = env.step(r.action)
        statuses.append(status)
        if status.terminal:
            break
    return statuses
