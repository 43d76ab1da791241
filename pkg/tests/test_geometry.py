import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from handover_bench.geometry import (
    Pose,
    check_unit_quaternion,
    pose_lerp,
    quat_from_axis_angle,
    quat_mul,
    quat_norm,
    quat_normalize,
    quat_rotate,
    quat_slerp,
    quat_to_matrix,
    rot_x,
    rot_z,
    vec_cross,
    vec_dist,
    vec_norm,
)


def random_quat(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return tuple(q)


def test_quat_rotate_matches_matrix():
    rng = np.random.default_rng(0)
    for _ in range(200):
        q = random_quat(rng)
        v = tuple(rng.normal(size=3))
        rows = quat_to_matrix(q)
        expected = tuple(sum(rows[i][j] * v[j] for j in range(3)) for i in range(3))
        got = quat_rotate(q, v)
        assert vec_dist(got, expected) < 1e-12


def test_quat_mul_associative_with_rotation():
    rng = np.random.default_rng(1)
    for _ in range(100):
        qa, qb = random_quat(rng), random_quat(rng)
        v = tuple(rng.normal(size=3))
        lhs = quat_rotate(quat_mul(qa, qb), v)
        rhs = quat_rotate(qa, quat_rotate(qb, v))
        assert vec_dist(lhs, rhs) < 1e-12


def test_pose_compose_inverse_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = Pose(tuple(rng.normal(size=3)), random_quat(rng))
        q = p.compose(p.inverse())
        assert vec_norm(q.position) < 1e-12
        assert abs(abs(q.orientation[0]) - 1.0) < 1e-12


def test_transform_point_matches_compose():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = Pose(tuple(rng.normal(size=3)), random_quat(rng))
        x = tuple(rng.normal(size=3))
        via_pose = p.compose(Pose(x)).position
        direct = p.transform_point(x)
        assert vec_dist(via_pose, direct) < 1e-12


def test_slerp_endpoints_and_midpoint():
    a = rot_z(0.0)
    b = rot_z(math.pi / 2)
    assert vec_dist(quat_slerp(a, b, 0.0)[:3], a[:3]) < 1e-15
    mid = quat_slerp(a, b, 0.5)
    expected = rot_z(math.pi / 4)
    assert abs(abs(sum(m * e for m, e in zip(mid, expected))) - 1.0) < 1e-12


def test_slerp_shortest_path():
    a = rot_z(0.1)
    b_far = tuple(-c for c in rot_z(0.3))  # same rotation, opposite sign
    mid = quat_slerp(a, b_far, 0.5)
    expected = rot_z(0.2)
    assert abs(abs(sum(m * e for m, e in zip(mid, expected))) - 1.0) < 1e-12


@given(st.floats(0.0, 1.0))
def test_slerp_always_unit(s):
    a = quat_normalize((0.3, -0.4, 0.5, 0.6))
    b = quat_normalize((-0.8, 0.1, 0.2, 0.1))
    assert abs(quat_norm(quat_slerp(a, b, s)) - 1.0) < 1e-12


def test_check_unit_quaternion_rejects():
    with pytest.raises(ValueError):
        check_unit_quaternion((1.0 + 1e-6, 0.0, 0.0, 0.0))
    check_unit_quaternion(quat_normalize((1.0, 2.0, 3.0, 4.0)))


def test_axis_angle_basics():
    q = quat_from_axis_angle((0.0, 0.0, 2.0), math.pi / 2)  # non-unit axis ok
    v = quat_rotate(q, (1.0, 0.0, 0.0))
    assert vec_dist(v, (0.0, 1.0, 0.0)) < 1e-12
    assert vec_dist(quat_rotate(rot_x(math.pi), (0.0, 1.0, 0.0)), (0.0, -1.0, 0.0)) < 1e-12


def test_pose_lerp_midpoint():
    a = Pose((0.0, 0.0, 0.0), rot_z(0.0))
    b = Pose((2.0, 0.0, 4.0), rot_z(math.pi / 2))
    mid = pose_lerp(a, b, 0.5)
    assert vec_dist(mid.position, (1.0, 0.0, 2.0)) < 1e-15
    assert abs(abs(sum(m * e for m, e in zip(mid.orientation, rot_z(math.pi / 4)))) - 1.0) < 1e-12


def test_cross_handedness():
    assert vec_cross((1, 0, 0), (0, 1, 0)) == (0, 0, 1)
