import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armcast.errors import DomainError, ParameterError
from armcast.pose3d import ArmAngles, JointAngleFrame, JointLimits, clamp_to_limits
from armcast.skeleton import (
    PART_BUDGET,
    PART_NAMES,
    BodyParams,
    FrustumPrimitive,
    TriMesh,
    build_dancer_mesh,
    export_obj,
    forward_kinematics,
    frustum_mesh,
    joint_table,
    pose_mesh,
    read_obj,
)

B = BodyParams()
REST = build_dancer_mesh(B)

angle_frames = st.lists(st.floats(-400, 400, allow_nan=False), min_size=12, max_size=12).map(
    lambda v: clamp_to_limits(JointAngleFrame(tuple(v)))
)


def edge_use(tris):
    """Undirected edge -> number of triangles using it (independent enumeration)."""
    c = Counter()
    for t in tris.tolist():
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            c[(min(a, b), max(a, b))] += 1
    return c


def test_joint_table_matches_dof_counts():
    t = joint_table()
    assert {k: v.dof for k, v in t.items()} == {"A": 3, "B": 3, "C": 3, "D": 1, "E": 1, "F": 1, "G": 1}
    # every chain reaches the torso root
    for spec in t.values():
        seen, node = set(), spec
        while node.parent is not None:
            assert node.label not in seen
            seen.add(node.label)
            node = t[node.parent]


def test_zero_frame_is_t_pose():
    fk = forward_kinematics(JointAngleFrame(), B)
    reach = B.shoulder_width / 2 + B.upper_arm_len + B.forearm_len
    assert np.allclose(fk["right_wrist"], [B.body_center_x + reach, B.torso_top, 0])
    assert np.allclose(fk["left_wrist"], [B.body_center_x - reach, B.torso_top, 0])


def test_elbow_flexion_moves_wrist_toward_camera():
    j = JointAngleFrame.from_arms(ArmAngles(), ArmAngles(elbow=90.0))
    fk = forward_kinematics(j, B)
    rest = forward_kinematics(JointAngleFrame(), B)
    assert np.allclose(fk["right_elbow"], rest["right_elbow"])
    assert np.allclose(fk["right_wrist"], rest["right_elbow"] + [0, 0, B.forearm_len])


@given(angle_frames)
def test_fk_mirror_symmetry(j):
    fk, fm = forward_kinematics(j, B), forward_kinematics(j.mirrored(), B)
    for joint in ("shoulder", "elbow", "wrist"):
        a, b = fk[f"left_{joint}"], fm[f"right_{joint}"]
        assert np.allclose([2 * B.body_center_x - a[0], a[1], a[2]], b)


def test_fk_rejects_out_of_limit():
    with pytest.raises(DomainError):
        forward_kinematics(JointAngleFrame((0.0,) * 9 + (160.0, 0.0, 0.0)), B)


# --- frusta ------------------------------------------------------------------------

def test_cylinder_counts():
    m = frustum_mesh(FrustumPrimitive((3, 3), (3, 3), 5, 8, 1))
    assert len(m.triangles) == 16 and len(m.vertices) == 16


def test_cone_counts():
    m = frustum_mesh(FrustumPrimitive((3, 2), (0, 0), 5, 8, 1))
    assert len(m.triangles) == 8 and len(m.vertices) == 9


def test_circular_rings_sit_at_radius():
    m = frustum_mesh(FrustumPrimitive((4, 4), (4, 4), 10, 12, 3))
    assert np.allclose(np.hypot(m.vertices[:, 0], m.vertices[:, 1]), 4.0)


@pytest.mark.parametrize("bottom, top", [((2, 1), (1, 3)), ((2, 1), (0, 0)), ((0, 0), (1, 1))])
def test_count_formulas_exact(bottom, top):
    for segments, stacks in itertools.product(range(3, 65), range(1, 9)):
        p = FrustumPrimitive(bottom, top, 4.0, segments, stacks)
        m = frustum_mesh(p)
        assert (len(m.triangles), len(m.vertices)) == p.expected_counts()
        point = bottom == (0, 0) or top == (0, 0)
        if point:
            assert len(m.triangles) == 2 * segments * (stacks - 1) + segments
        else:
            assert len(m.triangles) == 2 * segments * stacks


@pytest.mark.parametrize("point_end", [None, "top", "bottom"])
def test_side_surface_is_closed(point_end):
    n, k = 9, 3
    bottom = (0, 0) if point_end == "bottom" else (2, 2)
    top = (0, 0) if point_end == "top" else (1, 1)
    m = frustum_mesh(FrustumPrimitive(bottom, top, 5, n, k))
    uses = edge_use(m.triangles)
    assert set(uses.values()) <= {1, 2}
    # only the open rims are used once
    rims = 2 * n if point_end is None else n
    assert sum(1 for v in uses.values() if v == 1) == rims


def test_segment_count_scales_linearly():
    a = frustum_mesh(FrustumPrimitive((2, 2), (1, 1), 5, 10, 3))
    b = frustum_mesh(FrustumPrimitive((2, 2), (1, 1), 5, 20, 3))
    assert len(b.triangles) == 2 * len(a.triangles)


def test_frustum_validation():
    with pytest.raises(ParameterError):
        FrustumPrimitive((1, 1), (1, 1), 1, 2, 1)
    with pytest.raises(ParameterError):
        FrustumPrimitive((0, 0), (0, 0), 1, 8, 1)
    with pytest.raises(ParameterError):
        TriMesh(np.zeros((3, 3)), [[0, 1, 3]], ["x"])


# --- dancer mesh --------------------------------------------------------------------

def test_part_budgets():
    counts = REST.part_counts()
    assert set(counts) == set(PART_NAMES)
    for part, n in counts.items():
        budget = PART_BUDGET[part.rsplit("_", 1)[0] if part != "body_dress" else part]
        assert abs(n - budget) <= 0.1 * budget


def test_no_degenerate_triangles():
    assert REST.triangle_areas().min() > 1e-9


def test_dress_has_front_facing_uv():
    ids = REST.part_vertex_ids("body_dress")
    uv = REST.uv[ids]
    assert uv.min() >= 0 and uv.max() <= 1
    front = ids[REST.vertices[ids, 2] > 0]
    assert np.all(np.abs(REST.uv[front, 0] - 0.5) < 0.25)


def test_zero_pose_is_identity():
    posed = pose_mesh(REST, JointAngleFrame(), B)
    assert np.array_equal(posed.vertices, REST.vertices)
    assert export_obj(posed) == export_obj(REST)


@settings(max_examples=30, deadline=None)
@given(angle_frames)
def test_posing_is_rigid_per_part(j):
    posed = pose_mesh(REST, j, B)
    t = REST.triangles
    for part in PART_NAMES:
        tri = t[REST.parts == part]
        e0 = np.linalg.norm(REST.vertices[tri[:, 0]] - REST.vertices[tri[:, 1]], axis=1)
        e1 = np.linalg.norm(posed.vertices[tri[:, 0]] - posed.vertices[tri[:, 1]], axis=1)
        assert np.allclose(e0, e1, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(angle_frames)
def test_palm_tracks_wrist(j):
    posed = pose_mesh(REST, j, B)
    fk = forward_kinematics(j, B)
    for side, tag in (("left", "l"), ("right", "r")):
        centroid = posed.vertices[posed.part_vertex_ids(f"palm_{tag}")].mean(axis=0)
        assert np.linalg.norm(centroid - fk[f"{side}_wrist"]) <= B.palm_len


def test_pose_mesh_rejects_out_of_limit():
    with pytest.raises(DomainError):
        pose_mesh(REST, JointAngleFrame((90.0,) + (0.0,) * 11), B)


# --- OBJ --------------------------------------------------------------------------------

def test_single_triangle_obj():
    m = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]], ["head"])
    lines = export_obj(m).decode().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 3
    assert sum(l.startswith("f ") for l in lines) == 1
    assert "f 1 2 3" in lines


def test_obj_roundtrip_and_groups():
    text = export_obj(REST)
    groups = {l.split()[1] for l in text.decode().splitlines() if l.startswith("g ")}
    assert groups == set(PART_NAMES)
    back = read_obj(text)
    assert np.allclose(back.vertices, REST.vertices, atol=5e-7, rtol=0)
    assert Counter(back.parts.tolist()) == Counter(REST.parts.tolist())
    assert export_obj(REST) == text


def test_custom_limits_are_honoured():
    lim = JointLimits.default().with_overrides({"r_elbow_flexion": (0.0, 170.0)})
    j = JointAngleFrame((0.0,) * 9 + (165.0, 0.0, 0.0))
    forward_kinematics(j, B, lim)
    pose_mesh(REST, j, B, lim)
