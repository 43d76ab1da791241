import math

import numpy as np
import pytest

from handover_bench.contact import (
    HAND,
    TABLE,
    TARGET_OBJECT,
    BodyKind,
    BodyTag,
    Box,
    Capsule,
    Sphere,
    arm_link,
    collide_world,
    distractor,
    finger_grip,
    query_pair,
)
from handover_bench.geometry import Pose, quat_mul, quat_rotate, vec_add


def random_pose(rng, span=0.3):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return Pose(tuple(rng.uniform(-span, span, size=3)), tuple(q))


# ---------------------------------------------------------------------------
# Surface-sampling penetration oracle: sample points on shape A's surface and
# measure how deep the deepest one sits inside shape B.


def _surface_points(shape, n, rng):
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if isinstance(shape, Sphere):
        return dirs * shape.radius
    if isinstance(shape, Capsule):
        t = rng.uniform(-shape.half_length, shape.half_length, size=(n, 1))
        pts = dirs * shape.radius
        pts[:, 2:3] += t
        # include the end caps via a second batch shifted to the tips
        caps = dirs[: n // 2] * shape.radius
        caps[:, 2] = np.abs(caps[:, 2]) * np.sign(rng.uniform(-1, 1, size=n // 2))
        caps[:, 2] += np.where(caps[:, 2] >= 0, shape.half_length, -shape.half_length) - np.sign(caps[:, 2]) * 0.0
        return np.vstack([pts, caps])
    h = np.asarray(shape.half_extents)
    face = rng.integers(0, 6, size=n)
    pts = rng.uniform(-1.0, 1.0, size=(n, 3)) * h
    for axis in range(3):
        pts[face == 2 * axis, axis] = h[axis]
        pts[face == 2 * axis + 1, axis] = -h[axis]
    return pts


def _depth_inside(shape, pts):
    """Penetration of each point into the shape (0 when outside)."""
    if isinstance(shape, Sphere):
        d = np.linalg.norm(pts, axis=1)
        return np.maximum(shape.radius - d, 0.0)
    if isinstance(shape, Capsule):
        z = np.clip(pts[:, 2], -shape.half_length, shape.half_length)
        closest = np.column_stack([np.zeros_like(z), np.zeros_like(z), z])
        d = np.linalg.norm(pts - closest, axis=1)
        return np.maximum(shape.radius - d, 0.0)
    h = np.asarray(shape.half_extents)
    gaps = h - np.abs(pts)
    inside = np.all(gaps > 0.0, axis=1)
    return np.where(inside, np.min(gaps, axis=1), 0.0)


def sampling_depth_oracle(shape_a, pose_a, shape_b, pose_b, n=100_000, seed=7):
    """Max penetration of either surface into the other shape."""
    rng = np.random.default_rng(seed)

    def one_way(s_from, p_from, s_into, p_into):
        pts = _surface_points(s_from, n, rng)
        q = np.array(p_from.orientation)
        r = _quat_to_mat(q)
        world = pts @ r.T + np.array(p_from.position)
        q2 = np.array(p_into.orientation)
        r2 = _quat_to_mat(q2)
        local = (world - np.array(p_into.position)) @ r2
        return float(np.max(_depth_inside(s_into, local)))

    return max(one_way(shape_a, pose_a, shape_b, pose_b), one_way(shape_b, pose_b, shape_a, pose_a))


def _quat_to_mat(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


# ---------------------------------------------------------------------------
# direct examples


def test_unit_spheres_overlapping():
    c = query_pair(Sphere(1.0), Pose((0, 0, 0)), Sphere(1.0), Pose((1.5, 0, 0)), margin=0.0)
    assert c is not None
    assert abs(c.depth - 0.5) < 1e-12
    assert c.normal == (1.0, 0.0, 0.0)


def test_unit_spheres_apart():
    c = query_pair(Sphere(1.0), Pose((0, 0, 0)), Sphere(1.0), Pose((2.5, 0, 0)), margin=0.0)
    assert c is None


def test_margin_inflates_detection():
    # gap of 0.5 mm closes once the 1 mm margin is added
    c = query_pair(Sphere(0.05), Pose((0, 0, 0)), Sphere(0.05), Pose((0.1005, 0, 0)))
    assert c is not None
    assert abs(c.depth - 0.0005) < 1e-12


def test_sphere_capsule_side_and_cap():
    cap = Capsule(0.05, 0.2)
    side = query_pair(Sphere(0.05), Pose((0.08, 0.0, 0.1)), cap, Pose(), margin=0.0)
    assert side is not None and abs(side.depth - 0.02) < 1e-12
    tip = query_pair(Sphere(0.05), Pose((0.0, 0.0, 0.29)), cap, Pose(), margin=0.0)
    assert tip is not None and abs(tip.depth - 0.01) < 1e-12
    miss = query_pair(Sphere(0.05), Pose((0.0, 0.0, 0.31)), cap, Pose(), margin=0.0)
    assert miss is None


def test_sphere_box_face():
    box = Box((0.1, 0.1, 0.1))
    c = query_pair(Sphere(0.05), Pose((0.14, 0.0, 0.0)), box, Pose(), margin=0.0)
    assert c is not None and abs(c.depth - 0.01) < 1e-12
    # normal points from sphere into box
    assert c.normal[0] < -0.99


def test_box_box_face_depth():
    a = Box((0.1, 0.1, 0.1))
    b = Box((0.1, 0.1, 0.1))
    c = query_pair(a, Pose((0.0, 0.0, 0.0)), b, Pose((0.19, 0.0, 0.0)), margin=0.0)
    assert c is not None and abs(c.depth - 0.01) < 1e-12


def test_capsule_box_straddle():
    # horizontal capsule lying across a box face
    box = Box((0.1, 0.1, 0.1))
    pose = Pose((0.0, 0.0, 0.13), (math.cos(math.pi / 4), 0.0, math.sin(math.pi / 4), 0.0))
    c = query_pair(Capsule(0.04, 0.3), pose, box, Pose(), margin=0.0)
    assert c is not None and abs(c.depth - 0.01) < 1e-9


# ---------------------------------------------------------------------------
# oracle comparison on randomized shallow contacts


def _random_shape(rng):
    kind = rng.integers(0, 3)
    if kind == 0:
        return Sphere(rng.uniform(0.02, 0.08))
    if kind == 1:
        return Capsule(rng.uniform(0.02, 0.06), rng.uniform(0.02, 0.12))
    return Box(tuple(rng.uniform(0.02, 0.1, size=3)))


def _pose_with_shallow_contact(shape_a, shape_b, rng, target_depth):
    """Move shape B along a random direction until analytic depth hits target."""
    qa = rng.normal(size=4)
    qa /= np.linalg.norm(qa)
    qb = rng.normal(size=4)
    qb /= np.linalg.norm(qb)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    pose_a = Pose((0.0, 0.0, 0.0), tuple(qa))

    def depth_at(dist):
        pose_b = Pose(tuple(direction * dist), tuple(qb))
        c = query_pair(shape_a, pose_a, shape_b, pose_b, margin=0.0)
        return 0.0 if c is None else c.depth

    lo, hi = 0.0, 1.0
    assert depth_at(hi) == 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if depth_at(mid) > target_depth:
            lo = mid
        else:
            hi = mid
    dist = 0.5 * (lo + hi)
    return pose_a, Pose(tuple(direction * dist), tuple(qb))


def test_depth_matches_sampling_oracle_on_random_pairs():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 60:
        shape_a = _random_shape(rng)
        shape_b = _random_shape(rng)
        target = rng.uniform(0.0002, 0.002)
        pose_a, pose_b = _pose_with_shallow_contact(shape_a, shape_b, rng, target)
        c = query_pair(shape_a, pose_a, shape_b, pose_b, margin=0.0)
        if c is None:
            continue
        oracle = sampling_depth_oracle(shape_a, pose_a, shape_b, pose_b, n=30_000, seed=checked)
        assert abs(c.depth - oracle) < 1e-3, (shape_a, shape_b, c.depth, oracle)
        checked += 1


def test_query_pair_symmetry():
    rng = np.random.default_rng(5)
    found = 0
    for trial in range(500):
        shape_a = _random_shape(rng)
        shape_b = _random_shape(rng)
        pose_a = random_pose(rng, span=0.05)
        pose_b = random_pose(rng, span=0.05)
        ab = query_pair(shape_a, pose_a, shape_b, pose_b, margin=0.0)
        ba = query_pair(shape_b, pose_b, shape_a, pose_a, margin=0.0)
        assert (ab is None) == (ba is None)
        if ab is not None:
            assert abs(ab.depth - ba.depth) < 1e-12
            found += 1
    assert found > 50  # the sampling must actually exercise contacts


def test_rigid_invariance():
    rng = np.random.default_rng(6)
    moved = Pose(tuple(rng.uniform(-2, 2, size=3)), tuple(np.array([0.5, 0.5, 0.5, 0.5])))
    count = 0
    for trial in range(300):
        shape_a = _random_shape(rng)
        shape_b = _random_shape(rng)
        pose_a = random_pose(rng, span=0.05)
        pose_b = random_pose(rng, span=0.05)
        base = query_pair(shape_a, pose_a, shape_b, pose_b, margin=0.0)
        shifted = query_pair(
            shape_a, moved.compose(pose_a), shape_b, moved.compose(pose_b), margin=0.0
        )
        assert (base is None) == (shifted is None)
        if base is not None:
            assert abs(base.depth - shifted.depth) < 1e-9
            count += 1
    assert count > 30


# ---------------------------------------------------------------------------
# world-level queries


def test_collide_world_exemption_hides_pair():
    shapes = [
        (Sphere(0.05), Pose((0.0, 0.0, 0.0)), HAND),
        (Sphere(0.05), Pose((0.06, 0.0, 0.0)), TARGET_OBJECT),
    ]
    hits = collide_world(shapes, exemptions=frozenset({(HAND, TARGET_OBJECT)}))
    assert len(hits) == 0
    hits = collide_world(shapes)
    assert len(hits) == 1


def test_collide_world_tag_propagation_and_order():
    shapes = [
        (Sphere(0.05), Pose((0.0, 0.0, 0.0)), TARGET_OBJECT),
        (Box((0.04, 0.04, 0.04)), Pose((0.07, 0.0, 0.0)), finger_grip(0)),
        (Sphere(0.05), Pose((0.0, 0.0, 0.07)), arm_link(2)),
    ]
    hits = collide_world(shapes)
    pairs = [(c.tag_a, c.tag_b) for c in hits]
    assert (arm_link(2), TARGET_OBJECT) in pairs
    assert (finger_grip(0), TARGET_OBJECT) in pairs
    # canonical order: tag_a <= tag_b and the set is sorted
    assert pairs == sorted(pairs)
    assert hits.grip_sides_on_target() == frozenset({0})
    assert hits.finger_on_target()
    assert hits.nongrip_robot_on_target()


def test_collide_world_empty():
    assert len(collide_world([])) == 0


def test_collide_world_deterministic():
    rng = np.random.default_rng(8)
    shapes = []
    for i in range(8):
        shapes.append((_random_shape(rng), random_pose(rng, span=0.06), distractor(i)))
    a = collide_world(shapes)
    b = collide_world(shapes)
    assert a.contacts == b.contacts


def test_contact_set_predicates():
    shapes = [
        (Sphere(0.05), Pose((0.0, 0.0, 0.0)), TARGET_OBJECT),
        (Box((0.5, 0.5, 0.03)), Pose((0.0, 0.0, -0.06)), TABLE),
        (Sphere(0.04), Pose((0.05, 0.0, 0.0)), HAND),
        (Capsule(0.03, 0.05), Pose((0.0, 0.07, 0.0)), arm_link(4)),
    ]
    hits = collide_world(shapes, exemptions=frozenset({(HAND, TARGET_OBJECT)}))
    assert hits.target_on_support()
    assert hits.robot_on_hand() is False
    shapes.append((Sphere(0.04), Pose((0.08, 0.0, 0.0)), arm_link(1)))
    hits = collide_world(shapes, exemptions=frozenset({(HAND, TARGET_OBJECT)}))
    assert hits.robot_on_hand()


def test_shape_validation():
    with pytest.raises(ValueError):
        Sphere(0.0)
    with pytest.raises(ValueError):
        Capsule(0.1, -0.1)
    with pytest.raises(ValueError):
        Box((0.1, 0.0, 0.1))
