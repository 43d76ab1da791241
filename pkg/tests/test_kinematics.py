import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from handover_bench.geometry import Pose, quat_rotate, rot_y, vec_dist
from handover_bench.kinematics import (
    ARM_DOF,
    DOF,
    HOME_Q,
    JointSpec,
    forward_kinematics,
    ik_solve,
    panda_like_chain,
    pd_step,
    read_chain,
    write_chain,
)
from handover_bench.textio import FormatError

CHAIN = panda_like_chain()


# ---------------------------------------------------------------------------
# independent oracle: homogeneous 4x4 matrix products


def _mat_from_pose(pose):
    w, x, y, z = pose.orientation
    r = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = pose.position
    return m


def _axis_angle_mat(axis, angle):
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    k = np.array([[0, -ax[2], ax[1]], [ax[2], 0, -ax[0]], [-ax[1], ax[0], 0]])
    r = np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)
    m = np.eye(4)
    m[:3, :3] = r
    return m


def _translation_mat(v):
    m = np.eye(4)
    m[:3, 3] = v
    return m


def oracle_palm_matrix(chain, q, base=Pose()):
    m = _mat_from_pose(base)
    for i, joint in enumerate(chain.arm_joints):
        m = m @ _mat_from_pose(joint.origin)
        if joint.kind == "revolute":
            m = m @ _axis_angle_mat(joint.axis, q[i])
        else:
            m = m @ _translation_mat(np.asarray(joint.axis) * q[i])
    return m @ _mat_from_pose(chain.palm_offset)


def _quat_abs_dot(qa, qb):
    return abs(sum(a * b for a, b in zip(qa, qb)))


def _mat_to_quat(r):
    t = np.trace(r)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        return (0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s)
    i = int(np.argmax([r[0, 0], r[1, 1], r[2, 2]]))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = math.sqrt(r[i, i] - r[j, j] - r[k, k] + 1.0) * 2
    q = [0.0, 0.0, 0.0, 0.0]
    q[0] = (r[k, j] - r[j, k]) / s
    q[i + 1] = 0.25 * s
    q[j + 1] = (r[j, i] + r[i, j]) / s
    q[k + 1] = (r[k, i] + r[i, k]) / s
    return tuple(q)


def random_q(rng):
    lo = np.array(CHAIN.lower_limits)
    hi = np.array(CHAIN.upper_limits)
    return tuple(rng.uniform(lo, hi))


def test_fk_matches_matrix_oracle():
    rng = np.random.default_rng(11)
    base = Pose((0.0, 0.0, 0.4))
    for _ in range(1000):
        q = random_q(rng)
        frames = forward_kinematics(CHAIN, q, base)
        m = oracle_palm_matrix(CHAIN, q, base)
        assert vec_dist(frames.palm.position, tuple(m[:3, 3])) < 1e-9
        oracle_quat = _mat_to_quat(m[:3, :3])
        assert 1.0 - _quat_abs_dot(frames.palm.orientation, oracle_quat) < 1e-9


def test_fk_zero_config_is_fixed_transform_product():
    q = tuple(CHAIN.clamp([0.0] * DOF))
    # joint4 and joint6 limits exclude zero; use their clamped values in the oracle too
    frames = forward_kinematics(CHAIN, q)
    m = oracle_palm_matrix(CHAIN, q)
    assert vec_dist(frames.palm.position, tuple(m[:3, 3])) < 1e-12


def test_prismatic_finger_displacement():
    q0 = HOME_Q[:ARM_DOF] + (0.0, 0.0)
    q1 = HOME_Q[:ARM_DOF] + (0.04, 0.0)
    f0 = forward_kinematics(CHAIN, q0)
    f1 = forward_kinematics(CHAIN, q1)
    moved = vec_dist(f0.fingertips[0].position, f1.fingertips[0].position)
    assert abs(moved - 0.04) < 1e-12
    # displacement is along the palm y axis
    axis = quat_rotate(f0.palm.orientation, (0.0, 1.0, 0.0))
    delta = np.array(f1.fingertips[0].position) - np.array(f0.fingertips[0].position)
    assert abs(float(np.dot(delta, axis)) - 0.04) < 1e-12


def test_fk_rejects_out_of_limits():
    bad = (99.0,) + HOME_Q[1:]
    with pytest.raises(ValueError):
        forward_kinematics(CHAIN, bad)


# ---------------------------------------------------------------------------
# PD stepping


def test_pd_zero_error_is_identity():
    q = HOME_Q
    assert pd_step(CHAIN, q, q, 1 / 240) == q


def test_pd_velocity_clamp_binds_on_huge_error():
    dt = 1 / 240
    q = HOME_Q
    target = list(q)
    target[0] = CHAIN.joints[0].limits[1]
    out = pd_step(CHAIN, q, target, dt)
    assert abs(out[0] - q[0] - CHAIN.joints[0].max_velocity * dt) < 1e-15


def test_pd_linear_regime_exact():
    dt = 1 / 240
    q = HOME_Q
    target = list(q)
    target[2] = q[2] + 1e-3  # gain*err*dt = 10*1e-3/240 << vmax*dt
    out = pd_step(CHAIN, q, target, dt)
    assert out[2] == q[2] + CHAIN.gain * 1e-3 * dt


def test_pd_rejects_nan_and_bad_dt():
    with pytest.raises(ValueError):
        pd_step(CHAIN, HOME_Q, (float("nan"),) * DOF, 1 / 240)
    with pytest.raises(ValueError):
        pd_step(CHAIN, HOME_Q, HOME_Q, 0.0)


def test_pd_clamps_target_to_limits():
    dt = 1.0
    q = HOME_Q
    target = [1e9] * DOF
    out = pd_step(CHAIN, q, target, dt)
    for v, j in zip(out, CHAIN.joints):
        assert j.limits[0] <= v <= j.limits[1]


@settings(max_examples=200, deadline=None)
@given(
    data=st.data(),
    dt=st.floats(1e-4, 0.1),
)
def test_pd_contraction_property(data, dt):
    # contraction holds whenever gain*dt <= 2; defaults satisfy it amply
    if CHAIN.gain * dt > 2.0:
        dt = 2.0 / CHAIN.gain
    q = []
    target = []
    for j in CHAIN.joints:
        q.append(data.draw(st.floats(j.limits[0], j.limits[1])))
        target.append(data.draw(st.floats(j.limits[0], j.limits[1])))
    out = pd_step(CHAIN, q, target, dt)
    for qi, ti, oi in zip(q, target, out):
        assert abs(ti - oi) <= abs(ti - qi) + 1e-12


def test_pd_convergence_bound():
    # documented bound: after ceil(|e0|/(vmax*dt)) + k steps the error is
    # below (vmax/gain) * (1 - gain*dt)^k
    dt = 1 / 60
    joint = CHAIN.joints[0]
    q = list(HOME_Q)
    target = list(HOME_Q)
    target[0] = 1.5
    e0 = abs(target[0] - q[0])
    n = math.ceil(e0 / (joint.max_velocity * dt))
    k = 25
    cur = tuple(q)
    for _ in range(n + k):
        cur = pd_step(CHAIN, cur, target, dt)
    bound = (joint.max_velocity / CHAIN.gain) * (1.0 - CHAIN.gain * dt) ** k
    assert abs(target[0] - cur[0]) < bound + 1e-12


def test_pd_repeated_reaches_target_region():
    dt = 1 / 60
    cur = HOME_Q
    target = tuple(CHAIN.clamp([0.3, -0.5, 0.2, -1.8, 0.4, 2.0, 0.1, 0.01, 0.02]))
    for _ in range(600):
        cur = pd_step(CHAIN, cur, target, dt)
    assert max(abs(c - t) for c, t in zip(cur, target)) < 1e-6


# ---------------------------------------------------------------------------
# IK helper and chain IO


def test_ik_solve_reaches_target():
    base = Pose((0.0, 0.0, 0.4))
    start = forward_kinematics(CHAIN, HOME_Q, base)
    target = Pose(
        (start.palm.position[0] + 0.12, start.palm.position[1] - 0.08, start.palm.position[2] - 0.15),
        start.palm.orientation,
    )
    q = ik_solve(CHAIN, HOME_Q, target, base=base)
    assert q is not None
    frames = forward_kinematics(CHAIN, q, base)
    assert vec_dist(frames.palm.position, target.position) < 1e-3


def test_ik_solve_unreachable_returns_none():
    target = Pose((3.0, 0.0, 0.5))
    assert ik_solve(CHAIN, HOME_Q, target, iterations=60) is None


def test_chain_file_roundtrip(tmp_path):
    path = tmp_path / "chain.txt"
    write_chain(CHAIN, path)
    loaded = read_chain(path)
    assert loaded == CHAIN


def test_chain_file_rejects_garbage(tmp_path):
    path = tmp_path / "chain.txt"
    path.write_text("kinematic-chain 1\nname x\nbogus 1 2 3\n")
    with pytest.raises(FormatError):
        read_chain(path)
    path.write_text("not-a-chain 1\n")
    with pytest.raises(FormatError):
        read_chain(path)


def test_joint_spec_validation():
    with pytest.raises(ValueError):
        JointSpec("j", "revolute", Pose(), (0.0, 0.0, 2.0), (-1.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        JointSpec("j", "revolute", Pose(), (0.0, 0.0, 1.0), (1.0, -1.0), 1.0)
    with pytest.raises(ValueError):
        JointSpec("j", "twisty", Pose(), (0.0, 0.0, 1.0), (-1.0, 1.0), 1.0)
