"""Scene/trajectory data model, procedural catalog generation, split
assignment, and the on-disk scene and manifest formats.

World frame: z up, table surface at z = table_height, robot base on the
table edge at (0, 0, table_height), the giver across the table at larger x.
Each scene replays a pickup-and-offer motion: the object rests on the table,
is picked at ~30% of the trajectory, travels on a smooth quintic arc, and is
presented in the air until the episode ends.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .contact import Box, Capsule, Shape
from .geometry import Pose, quat_mul, quat_rotate, rot_x, rot_y, rot_z
from .textio import FormatError, LineReader, fmt_float, fmt_floats


class ConfigurationError(ValueError):
    """Invalid generator or environment configuration."""


class ProtocolError(ValueError):
    """Benchmark protocol violated (wrong catalog size, bad split, ...)."""


class Handedness(str, Enum):
    RIGHT = "right"
    LEFT = "left"


# ---------------------------------------------------------------------------
# object catalog: 20 identifiers, each mapped to a primitive with fixed
# dimensions.  The two identifiers in EXCLUDED_OBJECT_IDS are wider than the
# 0.08 m gripper opening and are removed for benchmarking.

@dataclass(frozen=True)
class ObjectModel:
    object_id: str
    shape: Shape

    @property
    def half_height(self) -> float:
        if isinstance(self.shape, Box):
            return self.shape.half_extents[2]
        assert isinstance(self.shape, Capsule)
        return self.shape.half_length + self.shape.radius

    @property
    def footprint_radius(self) -> float:
        if isinstance(self.shape, Box):
            return math.hypot(self.shape.half_extents[0], self.shape.half_extents[1])
        assert isinstance(self.shape, Capsule)
        return self.shape.radius


OBJECT_MODELS: dict[str, ObjectModel] = {
    m.object_id: m
    for m in [
        ObjectModel("002_master_chef_can", Capsule(0.0515, 0.0345)),
        ObjectModel("003_cracker_box", Box((0.0300, 0.0790, 0.1065))),
        ObjectModel("004_sugar_box", Box((0.0190, 0.0445, 0.0880))),
        ObjectModel("005_tomato_soup_can", Capsule(0.0330, 0.0175)),
        ObjectModel("006_mustard_bottle", Capsule(0.0290, 0.0660)),
        ObjectModel("007_tuna_fish_can", Capsule(0.0325, 0.0125)),
        ObjectModel("008_pudding_box", Box((0.0175, 0.0445, 0.0555))),
        ObjectModel("009_gelatin_box", Box((0.0145, 0.0365, 0.0425))),
        ObjectModel("010_potted_meat_can", Box((0.0255, 0.0385, 0.0415))),
        ObjectModel("011_banana", Capsule(0.0180, 0.0750)),
        ObjectModel("019_pitcher_base", Capsule(0.0330, 0.0900)),
        ObjectModel("021_bleach_cleanser", Capsule(0.0320, 0.0850)),
        ObjectModel("024_bowl", Capsule(0.0335, 0.0180)),
        ObjectModel("025_mug", Capsule(0.0330, 0.0250)),
        ObjectModel("035_power_drill", Box((0.0230, 0.0460, 0.0620))),
        ObjectModel("036_wood_block", Box((0.0450, 0.0535, 0.1030))),
        ObjectModel("037_scissors", Capsule(0.0105, 0.0650)),
        ObjectModel("040_large_marker", Capsule(0.0095, 0.0605)),
        ObjectModel("051_large_clamp", Capsule(0.0165, 0.0600)),
        ObjectModel("052_extra_large_clamp", Capsule(0.0205, 0.0825)),
    ]
}

OBJECT_IDS: tuple[str, ...] = tuple(OBJECT_MODELS)
EXCLUDED_OBJECT_IDS = frozenset({"002_master_chef_can", "036_wood_block"})

N_SUBJECTS = 10
N_TRIALS = 5
TOTAL_SCENES = N_SUBJECTS * len(OBJECT_IDS) * N_TRIALS
BENCHMARK_SCENES = N_SUBJECTS * (len(OBJECT_IDS) - len(EXCLUDED_OBJECT_IDS)) * N_TRIALS


# ---------------------------------------------------------------------------
# hand proxy: 5 rigid capsules (palm + 4 digits) posed per frame.  The local
# layout is fixed; scene files store the resulting world poses.

HAND_CAPSULE_SHAPES: tuple[Capsule, ...] = (
    Capsule(0.035, 0.045),  # palm, axis across the palm
    Capsule(0.012, 0.030),  # digits, axis pointing forward
    Capsule(0.012, 0.030),
    Capsule(0.012, 0.030),
    Capsule(0.012, 0.030),
)

_PALM_LOCAL = Pose((0.0, 0.0, 0.0), rot_x(-math.pi / 2))
_DIGIT_YS = (-0.048, -0.016, 0.016, 0.048)
HAND_CAPSULE_LOCAL_POSES: tuple[Pose, ...] = (_PALM_LOCAL,) + tuple(
    Pose((0.065, y, 0.0), rot_y(math.pi / 2)) for y in _DIGIT_YS
)
N_HAND_CAPSULES = len(HAND_CAPSULE_SHAPES)

# how far ahead of the wrist (+x local) and below the object the hand rides
HAND_FORWARD_OFFSET = 0.07


def hand_to_object_offset(half_height: float) -> Pose:
    """Grasped-object pose in the hand root frame (hand below, behind),
    leaving the object's upper body clear for the receiver."""
    dz = min(0.065, half_height + 0.025)
    return Pose((HAND_FORWARD_OFFSET, 0.0, dz))


# ---------------------------------------------------------------------------
# data model


def pose_from_row(row) -> Pose:
    return Pose((float(row[0]), float(row[1]), float(row[2])),
                (float(row[3]), float(row[4]), float(row[5]), float(row[6])))


def row_from_pose(pose: Pose) -> list[float]:
    return [*pose.position, *pose.orientation]


@dataclass(frozen=True)
class TrajectoryFrame:
    time: float
    hand_pose: Pose
    hand_capsule_poses: tuple[Pose, ...]
    object_pose: Pose


@dataclass
class Scene:
    """One handover trial: giver trajectory plus the initial table layout."""

    scene_id: int
    subject_id: int
    object_id: str
    trial_index: int
    handedness: Handedness
    frame_rate: float
    table_height: float
    distractors: tuple[tuple[str, Pose], ...]
    times: np.ndarray          # (n,)
    hand_poses: np.ndarray     # (n, 7) position + wxyz quaternion
    capsule_poses: np.ndarray  # (n, 5, 7)
    object_poses: np.ndarray   # (n, 7)

    @property
    def frame_count(self) -> int:
        return len(self.times)

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def frame(self, i: int) -> TrajectoryFrame:
        return TrajectoryFrame(
            time=float(self.times[i]),
            hand_pose=pose_from_row(self.hand_poses[i]),
            hand_capsule_poses=tuple(pose_from_row(self.capsule_poses[i, k]) for k in range(N_HAND_CAPSULES)),
            object_pose=pose_from_row(self.object_poses[i]),
        )

    @property
    def frames(self) -> tuple[TrajectoryFrame, ...]:
        return tuple(self.frame(i) for i in range(self.frame_count))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            self.scene_id == other.scene_id
            and self.subject_id == other.subject_id
            and self.object_id == other.object_id
            and self.trial_index == other.trial_index
            and self.handedness == other.handedness
            and self.frame_rate == other.frame_rate
            and self.table_height == other.table_height
            and self.distractors == other.distractors
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.hand_poses, other.hand_poses)
            and np.array_equal(self.capsule_poses, other.capsule_poses)
            and np.array_equal(self.object_poses, other.object_poses)
        )


@dataclass(frozen=True)
class SceneRef:
    """Manifest row: scene metadata plus the file path holding the frames."""

    path: str
    scene_id: int
    subject_id: int
    object_id: str
    trial_index: int
    handedness: Handedness


class SceneLike(Protocol):
    scene_id: int
    subject_id: int
    object_id: str
    handedness: Handedness


@dataclass(frozen=True)
class Catalog:
    scenes: tuple[Scene, ...]
    excluded_object_ids: frozenset[str] = EXCLUDED_OBJECT_IDS

    def __len__(self) -> int:
        return len(self.scenes)

    def after_exclusion(self) -> "Catalog":
        kept = tuple(s for s in self.scenes if s.object_id not in self.excluded_object_ids)
        return Catalog(kept, self.excluded_object_ids)

    def by_id(self) -> dict[int, Scene]:
        return {s.scene_id: s for s in self.scenes}


SETUPS = ("s0", "s1", "s2", "s3")
SPLITS = ("train", "val", "test")

S1_VAL_SUBJECTS = frozenset({8})
S1_TEST_SUBJECTS = frozenset({9, 10})
S2_VAL_SUBJECTS = frozenset({1, 2})
S3_VAL_OBJECTS = frozenset({"024_bowl", "025_mug"})
S3_TEST_OBJECTS = frozenset({"037_scissors", "052_extra_large_clamp"})

S0_COUNTS = {"train": 720, "val": 36, "test": 144}


@dataclass(frozen=True)
class SplitAssignment:
    setup: str
    seed: int
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]

    def ids(self, split: str) -> tuple[int, ...]:
        if split not in SPLITS:
            raise ProtocolError(f"unknown split {split!r}, expected one of {SPLITS}")
        return getattr(self, split)


def _stable_hash(seed: int, scene_id: int) -> int:
    digest = hashlib.sha256(f"{seed}:{scene_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def assign_splits(scenes: Sequence[SceneLike], setup: str, seed: int = 0) -> SplitAssignment:
    """Partition the 900-scene benchmark catalog for one evaluation setup.

    A pure function of (scenes, setup, seed): s0 is a seeded-hash shuffle
    rebalanced to exact counts, s1 splits by subject, s2 by handedness,
    s3 by grasped object.
    """
    if setup not in SETUPS:
        raise ProtocolError(f"unknown setup {setup!r}, expected one of {SETUPS}")
    if len(scenes) != BENCHMARK_SCENES:
        raise ProtocolError(
            f"split assignment requires the {BENCHMARK_SCENES}-scene benchmark catalog, got {len(scenes)}"
        )
    train: list[int] = []
    val: list[int] = []
    test: list[int] = []
    if setup == "s0":
        ranked = sorted(scenes, key=lambda s: (_stable_hash(seed, s.scene_id), s.scene_id))
        ids = [s.scene_id for s in ranked]
        train = ids[: S0_COUNTS["train"]]
        val = ids[S0_COUNTS["train"]: S0_COUNTS["train"] + S0_COUNTS["val"]]
        test = ids[S0_COUNTS["train"] + S0_COUNTS["val"]:]
    elif setup == "s1":
        for s in scenes:
            if s.subject_id in S1_VAL_SUBJECTS:
                val.append(s.scene_id)
            elif s.subject_id in S1_TEST_SUBJECTS:
                test.append(s.scene_id)
            else:
                train.append(s.scene_id)
    elif setup == "s2":
        for s in scenes:
            if s.handedness == Handedness.RIGHT:
                train.append(s.scene_id)
            elif s.subject_id in S2_VAL_SUBJECTS:
                val.append(s.scene_id)
            else:
                test.append(s.scene_id)
    else:
        for s in scenes:
            if s.object_id in S3_VAL_OBJECTS:
                val.append(s.scene_id)
            elif s.object_id in S3_TEST_OBJECTS:
                test.append(s.scene_id)
            else:
                train.append(s.scene_id)
    return SplitAssignment(setup, seed, tuple(sorted(train)), tuple(sorted(val)), tuple(sorted(test)))


# ---------------------------------------------------------------------------
# procedural generation


@dataclass(frozen=True)
class GeneratorConfig:
    frame_rate: float = 30.0
    table_height: float = 0.40
    table_center: tuple[float, float] = (0.60, 0.0)
    table_half_extents: tuple[float, float] = (0.35, 0.40)
    table_thickness: float = 0.04
    # object spawn area (table region reachable for pickup)
    target_spawn_x: tuple[float, float] = (0.48, 0.70)
    target_spawn_y: tuple[float, float] = (-0.20, 0.20)
    distractor_spawn_x: tuple[float, float] = (0.44, 0.76)
    distractor_spawn_y: tuple[float, float] = (-0.26, 0.26)
    # presentation pose (offer in the air, in reach of the receiver but
    # outside the goal region so a success always requires pulling back)
    presentation_x: tuple[float, float] = (0.58, 0.70)
    presentation_y: tuple[float, float] = (-0.12, 0.12)
    presentation_lift: tuple[float, float] = (0.16, 0.30)
    # trajectory shape
    min_frames: int = 72
    max_frames: int = 88
    pick_fraction: float = 0.30
    present_fraction: float = 0.88
    arc_bump: float = 0.05
    # subject reach parameters
    hand_start_x: tuple[float, float] = (0.88, 0.96)
    hand_start_lift: tuple[float, float] = (0.08, 0.16)
    subject_side_base: float = 0.18
    subject_side_step: float = 0.008
    subject_y_bias_span: float = 0.05

    def validate(self) -> None:
        if self.frame_rate <= 0.0:
            raise ConfigurationError("frame_rate must be positive")
        if self.table_height <= 0.0 or self.table_thickness <= 0.0:
            raise ConfigurationError("table dimensions must be positive")
        if min(self.table_half_extents) <= 0.0:
            raise ConfigurationError("table dimensions must be positive")
        if not (1 < self.min_frames <= self.max_frames):
            raise ConfigurationError("frame counts must satisfy 1 < min <= max")
        if (self.max_frames - 1) / self.frame_rate >= 3.0:
            raise ConfigurationError("trajectories must stay under 3 seconds")
        if not (0.0 < self.pick_fraction < self.present_fraction < 1.0):
            raise ConfigurationError("phase fractions must be ordered in (0, 1)")


def _smoothstep5(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _subject_y_bias(subject_id: int, config: GeneratorConfig) -> float:
    return config.subject_y_bias_span * (2.0 * (subject_id - 1) / (N_SUBJECTS - 1) - 1.0)


def generate_scene(seed: int, scene_id: int, config: GeneratorConfig) -> Scene:
    """Deterministically synthesize one scene from (seed, scene_id)."""
    subject_idx, rest = divmod(scene_id, len(OBJECT_IDS) * N_TRIALS)
    object_idx, trial_idx = divmod(rest, N_TRIALS)
    subject_id = subject_idx + 1
    trial_index = trial_idx + 1
    object_id = OBJECT_IDS[object_idx]
    model = OBJECT_MODELS[object_id]

    rng = np.random.default_rng([seed, scene_id])
    if trial_index in (1, 2):
        handed = Handedness.RIGHT
    elif trial_index in (3, 4):
        handed = Handedness.LEFT
    else:
        handed = Handedness.RIGHT if rng.integers(0, 2) == 0 else Handedness.LEFT

    n_frames = int(rng.integers(config.min_frames, config.max_frames + 1))
    times = np.arange(n_frames, dtype=np.float64) / config.frame_rate
    total = float(times[-1])
    t_pick = config.pick_fraction * total
    t_present = config.present_fraction * total

    y_bias = _subject_y_bias(subject_id, config)
    yaw = math.pi + float(rng.uniform(-0.25, 0.25))
    hand_quat = rot_z(yaw)

    rest_pos = np.array(
        [
            rng.uniform(*config.target_spawn_x),
            float(np.clip(rng.uniform(*config.target_spawn_y) + y_bias, *config.target_spawn_y)),
            config.table_height + model.half_height,
        ]
    )
    present_pos = np.array(
        [
            rng.uniform(*config.presentation_x),
            float(np.clip(rng.uniform(*config.presentation_y) + y_bias, *config.presentation_y)),
            config.table_height + rng.uniform(*config.presentation_lift),
        ]
    )

    # distractors: everything except the target, scattered without overlap
    n_distract = int(rng.integers(2, 5))
    other_ids = [oid for oid in OBJECT_IDS if oid != object_id]
    chosen = [other_ids[i] for i in rng.choice(len(other_ids), size=n_distract, replace=False)]
    placed: list[tuple[float, float, float]] = [
        (rest_pos[0], rest_pos[1], model.footprint_radius)
    ]
    distractors: list[tuple[str, Pose]] = []
    for oid in chosen:
        om = OBJECT_MODELS[oid]
        for _attempt in range(200):
            x = float(rng.uniform(*config.distractor_spawn_x))
            y = float(rng.uniform(*config.distractor_spawn_y))
            ok = all(
                math.hypot(x - px, y - py) >= om.footprint_radius + pr + 0.02
                for px, py, pr in placed
            )
            if ok:
                break
        else:
            raise RuntimeError(f"could not place distractor {oid} in scene {scene_id}")
        placed.append((x, y, om.footprint_radius))
        d_yaw = float(rng.uniform(0.0, 2.0 * math.pi))
        distractors.append((oid, Pose((x, y, config.table_height + om.half_height), rot_z(d_yaw))))

    # object path: rest -> quintic arc -> held presentation pose
    u = (times - t_pick) / (t_present - t_pick)
    s = _smoothstep5(u)
    obj_pos = rest_pos[None, :] + s[:, None] * (present_pos - rest_pos)[None, :]
    obj_pos[:, 2] += config.arc_bump * np.sin(math.pi * s)
    obj_quat = np.array(hand_quat)

    # hand: reach to the pick pose, then ride rigidly under the object
    t_off = hand_to_object_offset(model.half_height)
    offset_world = np.array(quat_rotate(hand_quat, t_off.position))
    side = -1.0 if handed == Handedness.RIGHT else 1.0
    side_mag = config.subject_side_base + config.subject_side_step * subject_id
    hand_start = np.array(
        [
            rng.uniform(*config.hand_start_x),
            side * side_mag + y_bias,
            config.table_height + rng.uniform(*config.hand_start_lift),
        ]
    )
    hand_pick = rest_pos - offset_world
    reach_s = _smoothstep5(times / t_pick)
    hand_pos = np.where(
        (times <= t_pick)[:, None],
        hand_start[None, :] + reach_s[:, None] * (hand_pick - hand_start)[None, :],
        obj_pos - offset_world[None, :],
    )

    hand_rows = np.empty((n_frames, 7))
    hand_rows[:, :3] = hand_pos
    hand_rows[:, 3:] = hand_quat

    obj_rows = np.empty((n_frames, 7))
    obj_rows[:, :3] = obj_pos
    obj_rows[:, 3:] = obj_quat

    capsule_rows = np.empty((n_frames, N_HAND_CAPSULES, 7))
    for k, local in enumerate(HAND_CAPSULE_LOCAL_POSES):
        off = np.array(quat_rotate(hand_quat, local.position))
        capsule_rows[:, k, :3] = hand_pos + off[None, :]
        capsule_rows[:, k, 3:] = np.array(quat_mul(hand_quat, local.orientation))

    return Scene(
        scene_id=scene_id,
        subject_id=subject_id,
        object_id=object_id,
        trial_index=trial_index,
        handedness=handed,
        frame_rate=config.frame_rate,
        table_height=config.table_height,
        distractors=tuple(distractors),
        times=times,
        hand_poses=hand_rows,
        capsule_poses=capsule_rows,
        object_poses=obj_rows,
    )


def generate_catalog(seed: int, config: GeneratorConfig | None = None) -> Catalog:
    """All 1,000 scenes: 10 subjects x 20 objects x 5 trials.

    Trials 1-2 use the right hand, 3-4 the left, and trial 5 is drawn from
    the seeded generator.  Byte-identical across runs for a fixed seed.
    """
    config = config or GeneratorConfig()
    config.validate()
    scenes = tuple(generate_scene(seed, sid, config) for sid in range(TOTAL_SCENES))
    return Catalog(scenes)


def validate_generated_scene(scene: Scene) -> None:
    """Invariants every generated scene must satisfy."""
    model = OBJECT_MODELS[scene.object_id]
    dt = np.diff(scene.times)
    if len(dt) == 0 or np.any(dt <= 0):
        raise ValueError("frame times must be strictly increasing")
    if np.max(np.abs(dt - 1.0 / scene.frame_rate)) > 1e-9:
        raise ValueError("frame spacing must be uniform")
    if scene.duration >= 3.0:
        raise ValueError("trajectory must be shorter than 3 seconds")
    if not (2 <= len(scene.distractors) <= 4):
        raise ValueError("scene must have 2 to 4 distractors")
    rest_z = scene.table_height + model.half_height
    if abs(scene.object_poses[0, 2] - rest_z) > 1e-6:
        raise ValueError("object must rest on the table in frame 0")
    if scene.object_poses[-1, 2] <= rest_z + 0.05:
        raise ValueError("object must be presented in the air in the last frame")


# ---------------------------------------------------------------------------
# on-disk formats

SCENE_MAGIC = "handover-scene"
MANIFEST_MAGIC = "handover-manifest"
FORMAT_VERSION = "1"
_FRAME_FIELDS = 1 + 7 + 7 * N_HAND_CAPSULES + 7


def write_scene(scene: Scene, path: str | Path) -> None:
    lines = [
        f"{SCENE_MAGIC} {FORMAT_VERSION}",
        f"scene_id {scene.scene_id}",
        f"subject {scene.subject_id}",
        f"object {scene.object_id}",
        f"trial {scene.trial_index}",
        f"handedness {scene.handedness.value}",
        f"frame_rate {fmt_float(scene.frame_rate)}",
        f"table_height {fmt_float(scene.table_height)}",
        "distractors "
        + " ".join(f"{oid} {fmt_floats(row_from_pose(pose))}" for oid, pose in scene.distractors),
        f"frames {scene.frame_count}",
    ]
    for i in range(scene.frame_count):
        row = [scene.times[i], *scene.hand_poses[i]]
        row.extend(scene.capsule_poses[i].reshape(-1))
        row.extend(scene.object_poses[i])
        lines.append(fmt_floats(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _expect_key(fields: list[str], key: str, reader: LineReader, offset: int) -> list[str]:
    if fields[0] != key:
        raise reader.error(f"expected header {key!r}, got {fields[0]!r}", offset)
    return fields[1:]


def read_scene(path: str | Path) -> Scene:
    """Parse a scene file; raises FormatError with a byte offset on damage."""
    reader = LineReader(path)
    it = iter(reader)

    def next_line():
        try:
            return next(it)
        except StopIteration:
            raise reader.error("unexpected end of file") from None

    fields, off = next_line()
    if fields[:2] != [SCENE_MAGIC, FORMAT_VERSION]:
        raise reader.error(f"bad magic {' '.join(fields[:2])!r}", off)

    fields, off = next_line()
    scene_id = int(_expect_key(fields, "scene_id", reader, off)[0])
    fields, off = next_line()
    subject_id = int(_expect_key(fields, "subject", reader, off)[0])
    fields, off = next_line()
    object_id = _expect_key(fields, "object", reader, off)[0]
    fields, off = next_line()
    trial_index = int(_expect_key(fields, "trial", reader, off)[0])
    fields, off = next_line()
    handed_str = _expect_key(fields, "handedness", reader, off)[0]
    try:
        handed = Handedness(handed_str)
    except ValueError:
        raise reader.error(f"unknown handedness {handed_str!r}", off) from None
    fields, off = next_line()
    frame_rate = float(_expect_key(fields, "frame_rate", reader, off)[0])
    fields, off = next_line()
    table_height = float(_expect_key(fields, "table_height", reader, off)[0])

    fields, off = next_line()
    tokens = _expect_key(fields, "distractors", reader, off)
    if len(tokens) % 8 != 0:
        raise reader.error("distractor entries must be id + 7 pose numbers", off)
    distractors = []
    for k in range(0, len(tokens), 8):
        oid = tokens[k]
        try:
            nums = [float(t) for t in tokens[k + 1: k + 8]]
        except ValueError:
            raise reader.error("malformed distractor pose", off) from None
        distractors.append((oid, pose_from_row(nums)))

    fields, off = next_line()
    n_frames = int(_expect_key(fields, "frames", reader, off)[0])
    if n_frames < 1:
        raise reader.error("frame count must be at least 1", off)

    times = np.empty(n_frames)
    hand_rows = np.empty((n_frames, 7))
    capsule_rows = np.empty((n_frames, N_HAND_CAPSULES, 7))
    obj_rows = np.empty((n_frames, 7))
    for i in range(n_frames):
        fields, off = next_line()
        if len(fields) != _FRAME_FIELDS:
            raise reader.error(
                f"frame record needs {_FRAME_FIELDS} fields, got {len(fields)}", off
            )
        try:
            row = np.array([float(t) for t in fields])
        except ValueError:
            raise reader.error("malformed number in frame record", off) from None
        times[i] = row[0]
        if i > 0 and times[i] <= times[i - 1]:
            raise reader.error("frame times must be strictly increasing", off)
        hand_rows[i] = row[1:8]
        capsule_rows[i] = row[8: 8 + 7 * N_HAND_CAPSULES].reshape(N_HAND_CAPSULES, 7)
        obj_rows[i] = row[8 + 7 * N_HAND_CAPSULES:]

    try:
        extra, off = next(it)
        raise reader.error("trailing data after the last frame", off)
    except StopIteration:
        pass

    return Scene(
        scene_id=scene_id,
        subject_id=subject_id,
        object_id=object_id,
        trial_index=trial_index,
        handedness=handed,
        frame_rate=frame_rate,
        table_height=table_height,
        distractors=tuple(distractors),
        times=times,
        hand_poses=hand_rows,
        capsule_poses=capsule_rows,
        object_poses=obj_rows,
    )


def scene_filename(scene_id: int) -> str:
    return f"scene_{scene_id:04d}.txt"


def write_manifest(catalog: Catalog, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    lines = [f"{MANIFEST_MAGIC} {FORMAT_VERSION}"]
    for s in catalog.scenes:
        lines.append(
            f"scene {scene_filename(s.scene_id)} {s.scene_id} {s.subject_id} "
            f"{s.object_id} {s.trial_index} {s.handedness.value}"
        )
    path = out_dir / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def read_manifest(path: str | Path) -> list[SceneRef]:
    reader = LineReader(path)
    it = iter(reader)
    try:
        fields, off = next(iter(it))
    except StopIteration:
        raise reader.error("empty manifest") from None
    if fields[:2] != [MANIFEST_MAGIC, FORMAT_VERSION]:
        raise reader.error("bad manifest magic", off)
    refs = []
    base = Path(path).parent
    for fields, off in it:
        if fields[0] != "scene" or len(fields) != 7:
            raise reader.error("manifest rows are: scene <path> <id> <subject> <object> <trial> <handedness>", off)
        try:
            refs.append(
                SceneRef(
                    path=str(base / fields[1]),
                    scene_id=int(fields[2]),
                    subject_id=int(fields[3]),
                    object_id=fields[4],
                    trial_index=int(fields[5]),
                    handedness=Handedness(fields[6]),
                )
            )
        except ValueError as exc:
            raise reader.error(f"malformed manifest row: {exc}", off) from None
    return refs


def write_catalog(catalog: Catalog, out_dir: str | Path) -> Path:
    """Write every scene file plus the manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for s in catalog.scenes:
        write_scene(s, out_dir / scene_filename(s.scene_id))
    return write_manifest(catalog, out_dir)
