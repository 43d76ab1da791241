"""Analytic narrow-phase contact queries between primitive shapes.

Shapes are spheres, capsules (axis along local z), and boxes.  A contact is
reported only on strict interpenetration after inflating surfaces by a
detection margin, which emulates engine contact tolerance.  Depth is measured
at the closest feature, which matches a dense surface-sampling oracle in the
shallow-contact regime the detector operates in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional, Sequence

from .geometry import (
    Pose,
    Vec3,
    quat_rotate,
    quat_to_matrix,
    vec_cross,
    vec_dist,
    vec_dot,
    vec_norm,
    vec_scale,
    vec_sub,
)

DEFAULT_CONTACT_MARGIN = 0.001  # m, added once per shape pair


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class Capsule:
    """Segment of half_length along local z, inflated by radius."""

    radius: float
    half_length: float

    def __post_init__(self):
        if self.radius <= 0.0 or self.half_length <= 0.0:
            raise ValueError("capsule dimensions must be positive")


@dataclass(frozen=True)
class Box:
    half_extents: Vec3

    def __post_init__(self):
        if min(self.half_extents) <= 0.0:
            raise ValueError("box half extents must be positive")


Shape = Sphere | Capsule | Box


class BodyKind(IntEnum):
    ARM_LINK = 0
    FINGER_GRIP = 1
    FINGER_OTHER = 2
    HAND = 3
    TARGET_OBJECT = 4
    DISTRACTOR = 5
    TABLE = 6


ROBOT_KINDS = frozenset({BodyKind.ARM_LINK, BodyKind.FINGER_GRIP, BodyKind.FINGER_OTHER})


@dataclass(frozen=True, order=True)
class BodyTag:
    """Identity of a collidable body; index is the link/distractor number
    or 0/1 for left/right fingers."""

    kind: BodyKind
    index: int = 0

    def __str__(self) -> str:
        if self.kind in (BodyKind.ARM_LINK, BodyKind.DISTRACTOR):
            return f"{self.kind.name.lower()}[{self.index}]"
        if self.kind in (BodyKind.FINGER_GRIP, BodyKind.FINGER_OTHER):
            side = "left" if self.index == 0 else "right"
            return f"{self.kind.name.lower()}[{side}]"
        return self.kind.name.lower()


HAND = BodyTag(BodyKind.HAND)
TARGET_OBJECT = BodyTag(BodyKind.TARGET_OBJECT)
TABLE = BodyTag(BodyKind.TABLE)

LEFT = 0
RIGHT = 1


def arm_link(i: int) -> BodyTag:
    return BodyTag(BodyKind.ARM_LINK, i)


def finger_grip(side: int) -> BodyTag:
    return BodyTag(BodyKind.FINGER_GRIP, side)


def finger_other(side: int) -> BodyTag:
    return BodyTag(BodyKind.FINGER_OTHER, side)


def distractor(i: int) -> BodyTag:
    return BodyTag(BodyKind.DISTRACTOR, i)


@dataclass(frozen=True)
class Contact:
    tag_a: BodyTag | None
    tag_b: BodyTag | None
    point: Vec3
    normal: Vec3  # unit, from body a into body b
    depth: float  # > 0 means interpenetration


class ContactSet:
    """Contacts of one step, sorted by tag pair for deterministic order."""

    def __init__(self, contacts: Iterable[Contact]):
        self.contacts = tuple(sorted(contacts, key=lambda c: (c.tag_a, c.tag_b)))

    def __iter__(self):
        return iter(self.contacts)

    def __len__(self) -> int:
        return len(self.contacts)

    def touching(self, kind_a: BodyKind, kind_b: BodyKind) -> bool:
        for c in self.contacts:
            ka, kb = c.tag_a.kind, c.tag_b.kind
            if (ka == kind_a and kb == kind_b) or (ka == kind_b and kb == kind_a):
                return True
        return False

    def grip_sides_on_target(self) -> frozenset[int]:
        """Finger sides whose gripping surface touches the target object."""
        sides = set()
        for c in self.contacts:
            for tag, other in ((c.tag_a, c.tag_b), (c.tag_b, c.tag_a)):
                if tag.kind == BodyKind.FINGER_GRIP and other.kind == BodyKind.TARGET_OBJECT:
                    sides.add(tag.index)
        return frozenset(sides)

    def finger_on_target(self) -> bool:
        for c in self.contacts:
            kinds = {c.tag_a.kind, c.tag_b.kind}
            if BodyKind.TARGET_OBJECT in kinds and (
                BodyKind.FINGER_GRIP in kinds or BodyKind.FINGER_OTHER in kinds
            ):
                return True
        return False

    def nongrip_robot_on_target(self) -> bool:
        for c in self.contacts:
            for tag, other in ((c.tag_a, c.tag_b), (c.tag_b, c.tag_a)):
                if other.kind == BodyKind.TARGET_OBJECT and tag.kind in (
                    BodyKind.ARM_LINK,
                    BodyKind.FINGER_OTHER,
                ):
                    return True
        return False

    def robot_on_hand(self) -> bool:
        for c in self.contacts:
            kinds = {c.tag_a.kind, c.tag_b.kind}
            if BodyKind.HAND in kinds and kinds & ROBOT_KINDS:
                return True
        return False

    def target_on_support(self) -> bool:
        """Target object against the table or a distractor."""
        for c in self.contacts:
            kinds = {c.tag_a.kind, c.tag_b.kind}
            if BodyKind.TARGET_OBJECT in kinds and (
                BodyKind.TABLE in kinds or BodyKind.DISTRACTOR in kinds
            ):
                return True
        return False


def _capsule_segment(pose: Pose, half_length: float) -> tuple[Vec3, Vec3]:
    axis = quat_rotate(pose.orientation, (0.0, 0.0, half_length))
    p = pose.position
    return (
        (p[0] - axis[0], p[1] - axis[1], p[2] - axis[2]),
        (p[0] + axis[0], p[1] + axis[1], p[2] + axis[2]),
    )


def _closest_on_segment(a: Vec3, b: Vec3, p: Vec3) -> Vec3:
    ab = vec_sub(b, a)
    denom = vec_dot(ab, ab)
    if denom == 0.0:
        return a
    t = vec_dot(vec_sub(p, a), ab) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return (a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2])


def _closest_between_segments(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> tuple[Vec3, Vec3]:
    """Closest point pair between two segments (Ericson-style clamping)."""
    d1 = vec_sub(q1, p1)
    d2 = vec_sub(q2, p2)
    r = vec_sub(p1, p2)
    a = vec_dot(d1, d1)
    e = vec_dot(d2, d2)
    f = vec_dot(d2, r)
    eps = 1e-14
    if a <= eps and e <= eps:
        return p1, p2
    if a <= eps:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = vec_dot(d1, r)
        if e <= eps:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = vec_dot(d1, d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > eps else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    c1 = (p1[0] + s * d1[0], p1[1] + s * d1[1], p1[2] + s * d1[2])
    c2 = (p2[0] + t * d2[0], p2[1] + t * d2[1], p2[2] + t * d2[2])
    return c1, c2


def _point_box_closest(local: Vec3, h: Vec3) -> tuple[Vec3, float, bool]:
    """Closest box-surface point to a local-frame point.

    Returns (surface point, signed distance, inside flag); for inside points
    the distance is negative (depth below the nearest face).
    """
    cx = min(h[0], max(-h[0], local[0]))
    cy = min(h[1], max(-h[1], local[1]))
    cz = min(h[2], max(-h[2], local[2]))
    dx = local[0] - cx
    dy = local[1] - cy
    dz = local[2] - cz
    d2 = dx * dx + dy * dy + dz * dz
    if d2 > 0.0:
        return (cx, cy, cz), math.sqrt(d2), False
    # interior: project to the nearest face
    gaps = (h[0] - abs(local[0]), h[1] - abs(local[1]), h[2] - abs(local[2]))
    axis = min(range(3), key=lambda i: gaps[i])
    surf = [local[0], local[1], local[2]]
    surf[axis] = h[axis] if local[axis] >= 0.0 else -h[axis]
    return (surf[0], surf[1], surf[2]), -gaps[axis], True


def _segment_box_closest(a: Vec3, b: Vec3, h: Vec3) -> tuple[float, Vec3, Vec3]:
    """Closest approach between a segment and a box, both in box frame.

    The squared point-to-box distance is piecewise quadratic in the segment
    parameter, with breakpoints where a coordinate crosses a slab plane, so
    each interval admits a closed-form minimizer.  Returns (signed distance,
    segment point, box surface point); distance is negative when a segment
    point lies inside the box (deepest point reported).
    """
    d = vec_sub(b, a)

    # breakpoints where |a_i + t d_i| crosses h_i
    ts = [0.0, 1.0]
    for i in range(3):
        if d[i] != 0.0:
            inv = 1.0 / d[i]
            for face in (-h[i], h[i]):
                t = (face - a[i]) * inv
                if 0.0 < t < 1.0:
                    ts.append(t)
    ts.sort()

    best_d2 = math.inf
    best_t = 0.0
    any_inside = False
    inside_best = -math.inf
    inside_t = 0.0
    for k in range(len(ts) - 1):
        lo, hi = ts[k], ts[k + 1]
        tm = 0.5 * (lo + hi)
        # fixed clamping pattern on this interval, from the midpoint
        qa = 0.0  # quadratic coeff
        qb = 0.0
        qc = 0.0
        outside = False
        for i in range(3):
            ci = a[i] + tm * d[i]
            if ci > h[i]:
                e0 = a[i] - h[i]
                qa += d[i] * d[i]
                qb += 2.0 * e0 * d[i]
                qc += e0 * e0
                outside = True
            elif ci < -h[i]:
                e0 = a[i] + h[i]
                qa += d[i] * d[i]
                qb += 2.0 * e0 * d[i]
                qc += e0 * e0
                outside = True
        if not outside:
            # segment passes through the box on this interval
            any_inside = True
            for t in (lo, tm, hi):
                px = a[0] + t * d[0]
                py = a[1] + t * d[1]
                pz = a[2] + t * d[2]
                gap = min(h[0] - abs(px), h[1] - abs(py), h[2] - abs(pz))
                if gap > inside_best:
                    inside_best = gap
                    inside_t = t
            continue
        t_star = tm if qa == 0.0 else -qb / (2.0 * qa)
        if t_star < lo:
            t_star = lo
        elif t_star > hi:
            t_star = hi
        d2 = qa * t_star * t_star + qb * t_star + qc
        if d2 < best_d2:
            best_d2 = d2
            best_t = t_star

    if any_inside:
        p = (a[0] + inside_t * d[0], a[1] + inside_t * d[1], a[2] + inside_t * d[2])
        surf, sd, _ = _point_box_closest(p, h)
        return sd, p, surf
    p = (a[0] + best_t * d[0], a[1] + best_t * d[1], a[2] + best_t * d[2])
    surf, sd, _ = _point_box_closest(p, h)
    return sd, p, surf


def _contact_sphere_sphere(ca: Vec3, ra: float, cb: Vec3, rb: float, margin: float):
    d = vec_dist(ca, cb)
    depth = ra + rb + margin - d
    if depth <= 0.0:
        return None
    if d > 0.0:
        normal = vec_scale(vec_sub(cb, ca), 1.0 / d)
    else:
        normal = (0.0, 0.0, 1.0)
    point = (
        ca[0] + normal[0] * (ra - 0.5 * depth),
        ca[1] + normal[1] * (ra - 0.5 * depth),
        ca[2] + normal[2] * (ra - 0.5 * depth),
    )
    return point, normal, depth


def _contact_round_box(center: Vec3, radius: float, box: Box, pose_b: Pose, margin: float):
    """Sphere (or capsule closest point) against an oriented box."""
    inv = pose_b.inverse()
    local = inv.transform_point(center)
    surf, sd, inside = _point_box_closest(local, box.half_extents)
    depth = radius + margin - sd
    if depth <= 0.0:
        return None
    surf_w = pose_b.transform_point(surf)
    if inside:
        normal = vec_scale(vec_sub(surf_w, center), 1.0)
        n = vec_norm(normal)
        normal = vec_scale(normal, 1.0 / n) if n > 0.0 else (0.0, 0.0, 1.0)
        normal = vec_scale(normal, -1.0)  # from the round shape into the box
    else:
        delta = vec_sub(surf_w, center)
        n = vec_norm(delta)
        normal = vec_scale(delta, 1.0 / n) if n > 0.0 else (0.0, 0.0, 1.0)
    return surf_w, normal, depth


def _box_axes(pose: Pose) -> tuple[Vec3, Vec3, Vec3]:
    rows = quat_to_matrix(pose.orientation)
    # rows of R are world-frame rows; columns are the box axes
    return (
        (rows[0][0], rows[1][0], rows[2][0]),
        (rows[0][1], rows[1][1], rows[2][1]),
        (rows[0][2], rows[1][2], rows[2][2]),
    )


def _contact_box_box(box_a: Box, pose_a: Pose, box_b: Box, pose_b: Pose, margin: float):
    """Separating-axis test over the 15 candidate axes."""
    a0, a1, a2 = _box_axes(pose_a)
    b0, b1, b2 = _box_axes(pose_b)
    ha0, ha1, ha2 = box_a.half_extents
    hb0, hb1, hb2 = box_b.half_extents
    pa, pb = pose_a.position, pose_b.position
    dx = pb[0] - pa[0]
    dy = pb[1] - pa[1]
    dz = pb[2] - pa[2]

    best_depth = math.inf
    best_axis: Vec3 | None = None

    def test(lx: float, ly: float, lz: float) -> bool:
        nonlocal best_depth, best_axis
        ra = (
            ha0 * abs(a0[0] * lx + a0[1] * ly + a0[2] * lz)
            + ha1 * abs(a1[0] * lx + a1[1] * ly + a1[2] * lz)
            + ha2 * abs(a2[0] * lx + a2[1] * ly + a2[2] * lz)
        )
        rb = (
            hb0 * abs(b0[0] * lx + b0[1] * ly + b0[2] * lz)
            + hb1 * abs(b1[0] * lx + b1[1] * ly + b1[2] * lz)
            + hb2 * abs(b2[0] * lx + b2[1] * ly + b2[2] * lz)
        )
        sep = abs(dx * lx + dy * ly + dz * lz)
        overlap = ra + rb + margin - sep
        if overlap <= 0.0:
            return False
        if overlap < best_depth:
            best_depth = overlap
            best_axis = (lx, ly, lz)
        return True

    for ax in (a0, a1, a2, b0, b1, b2):
        if not test(ax[0], ax[1], ax[2]):
            return None
    for u in (a0, a1, a2):
        for v in (b0, b1, b2):
            cx = u[1] * v[2] - u[2] * v[1]
            cy = u[2] * v[0] - u[0] * v[2]
            cz = u[0] * v[1] - u[1] * v[0]
            n = math.sqrt(cx * cx + cy * cy + cz * cz)
            if n > 1e-9:
                inv = 1.0 / n
                if not test(cx * inv, cy * inv, cz * inv):
                    return None
    assert best_axis is not None
    if dx * best_axis[0] + dy * best_axis[1] + dz * best_axis[2] < 0.0:
        best_axis = vec_scale(best_axis, -1.0)
    point = vec_lerp_mid(pa, pb)
    return point, best_axis, best_depth


def vec_lerp_mid(a: Vec3, b: Vec3) -> Vec3:
    return (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2]))


_SHAPE_RANK = {Sphere: 0, Capsule: 1, Box: 2}


def query_pair(
    shape_a: Shape,
    pose_a: Pose,
    shape_b: Shape,
    pose_b: Pose,
    margin: float = DEFAULT_CONTACT_MARGIN,
    tag_a: BodyTag | None = None,
    tag_b: BodyTag | None = None,
) -> Optional[Contact]:
    """Penetration query between two posed shapes.

    Returns a contact (normal from a into b) iff the margin-inflated shapes
    interpenetrate.  The pair order does not affect the reported depth.
    """
    in_tag_a, in_tag_b = tag_a, tag_b
    swap = _SHAPE_RANK[type(shape_a)] > _SHAPE_RANK[type(shape_b)]
    if swap:
        shape_a, shape_b = shape_b, shape_a
        pose_a, pose_b = pose_b, pose_a

    result = None
    if isinstance(shape_a, Sphere):
        if isinstance(shape_b, Sphere):
            result = _contact_sphere_sphere(
                pose_a.position, shape_a.radius, pose_b.position, shape_b.radius, margin
            )
        elif isinstance(shape_b, Capsule):
            seg_a, seg_b = _capsule_segment(pose_b, shape_b.half_length)
            closest = _closest_on_segment(seg_a, seg_b, pose_a.position)
            result = _contact_sphere_sphere(
                pose_a.position, shape_a.radius, closest, shape_b.radius, margin
            )
        else:
            result = _contact_round_box(pose_a.position, shape_a.radius, shape_b, pose_b, margin)
    elif isinstance(shape_a, Capsule):
        if isinstance(shape_b, Capsule):
            a1, a2 = _capsule_segment(pose_a, shape_a.half_length)
            b1, b2 = _capsule_segment(pose_b, shape_b.half_length)
            ca, cb = _closest_between_segments(a1, a2, b1, b2)
            result = _contact_sphere_sphere(ca, shape_a.radius, cb, shape_b.radius, margin)
        else:
            a1, a2 = _capsule_segment(pose_a, shape_a.half_length)
            inv = pose_b.inverse()
            la = inv.transform_point(a1)
            lb = inv.transform_point(a2)
            sd, seg_pt, _surf = _segment_box_closest(la, lb, shape_b.half_extents)
            depth = shape_a.radius + margin - sd
            if depth > 0.0:
                center_w = pose_b.transform_point(seg_pt)
                result = _contact_round_box(center_w, shape_a.radius, shape_b, pose_b, margin)
                if result is None:
                    # guard: closest-point recomputation should agree
                    result = (center_w, (0.0, 0.0, 1.0), depth)
    else:
        result = _contact_box_box(shape_a, pose_a, shape_b, pose_b, margin)

    if result is None:
        return None
    point, normal, depth = result
    if swap:
        normal = vec_scale(normal, -1.0)
    return Contact(tag_a=in_tag_a, tag_b=in_tag_b, point=point, normal=normal, depth=depth)


def shape_aabb(shape: Shape, pose: Pose, margin: float) -> tuple[float, float, float, float, float, float]:
    """World axis-aligned bounds, inflated by half the pair margin."""
    pad = 0.5 * margin
    p = pose.position
    if isinstance(shape, Sphere):
        r = shape.radius + pad
        return (p[0] - r, p[1] - r, p[2] - r, p[0] + r, p[1] + r, p[2] + r)
    if isinstance(shape, Capsule):
        axis = quat_rotate(pose.orientation, (0.0, 0.0, shape.half_length))
        r = shape.radius + pad
        ex = abs(axis[0]) + r
        ey = abs(axis[1]) + r
        ez = abs(axis[2]) + r
        return (p[0] - ex, p[1] - ey, p[2] - ez, p[0] + ex, p[1] + ey, p[2] + ez)
    rows = quat_to_matrix(pose.orientation)
    h = shape.half_extents
    ex = abs(rows[0][0]) * h[0] + abs(rows[0][1]) * h[1] + abs(rows[0][2]) * h[2] + pad
    ey = abs(rows[1][0]) * h[0] + abs(rows[1][1]) * h[1] + abs(rows[1][2]) * h[2] + pad
    ez = abs(rows[2][0]) * h[0] + abs(rows[2][1]) * h[1] + abs(rows[2][2]) * h[2] + pad
    return (p[0] - ex, p[1] - ey, p[2] - ez, p[0] + ex, p[1] + ey, p[2] + ez)


WorldShape = tuple[Shape, Pose, BodyTag]

# pair table row: (index_a, index_b, canonical tag_a, canonical tag_b, flip)
PairTable = tuple[tuple[int, int, BodyTag, BodyTag, bool], ...]


def _pair_key(a: BodyTag, b: BodyTag) -> tuple[BodyTag, BodyTag]:
    return (a, b) if a <= b else (b, a)


def build_pair_table(
    tags: Sequence[BodyTag],
    exemptions: frozenset[tuple[BodyTag, BodyTag]] = frozenset(),
) -> PairTable:
    """Candidate pairs for a fixed world layout, exemptions applied once.

    Pairs sharing a tag never collide (one body, several shapes).
    """
    rows = []
    n = len(tags)
    for i in range(n):
        for j in range(i + 1, n):
            ti, tj = tags[i], tags[j]
            if ti == tj:
                continue
            if _pair_key(ti, tj) in exemptions:
                continue
            flip = not ti <= tj
            ta, tb = (tj, ti) if flip else (ti, tj)
            rows.append((i, j, ta, tb, flip))
    return tuple(rows)


def collide_pairs(
    shapes: Sequence[tuple[Shape, Pose]],
    pair_table: PairTable,
    margin: float = DEFAULT_CONTACT_MARGIN,
) -> ContactSet:
    """Narrow-phase over a precomputed pair table with an AABB prefilter."""
    aabbs = [shape_aabb(s, p, margin) for s, p in shapes]
    contacts: list[Contact] = []
    for i, j, ta, tb, flip in pair_table:
        ai = aabbs[i]
        aj = aabbs[j]
        if (
            ai[3] < aj[0]
            or aj[3] < ai[0]
            or ai[4] < aj[1]
            or aj[4] < ai[1]
            or ai[5] < aj[2]
            or aj[5] < ai[2]
        ):
            continue
        si, pi = shapes[i]
        sj, pj = shapes[j]
        hit = query_pair(si, pi, sj, pj, margin)
        if hit is not None:
            normal = vec_scale(hit.normal, -1.0) if flip else hit.normal
            contacts.append(Contact(ta, tb, hit.point, normal, hit.depth))
    return ContactSet(contacts)


def collide_world(
    world_shapes: Sequence[WorldShape],
    exemptions: frozenset[tuple[BodyTag, BodyTag]] = frozenset(),
    margin: float = DEFAULT_CONTACT_MARGIN,
) -> ContactSet:
    """All interpenetrating non-exempt shape pairs, deterministically ordered.

    Exemptions are unordered tag pairs.
    """
    table = build_pair_table([t for _, _, t in world_shapes], exemptions)
    return collide_pairs([(s, p) for s, p, _ in world_shapes], table, margin)
