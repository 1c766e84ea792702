"""Articulated upper-body model built from elliptical frustum primitives.

Everything is expressed in the camera frame of :mod:`armcast.pose3d`
(pixels, x right, y down, z toward the camera) so that forward
kinematics, the synthetic renderer and the lifted poses share one set of
coordinates.  The rest pose is the T-pose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, ParameterError
from .pose3d import (
    SIDE_SIGN,
    SIDES,
    JointAngleFrame,
    JointLimits,
    rot_hinge,
    rot_roll,
    rot_azimuth,
    shoulder_rotation,
)

SHOULDER_TO_BODY = 0.8
HEAD_TO_SHOULDER = 0.22
PALM_TO_FOREARM = 0.45


@dataclass(frozen=True)
class BodyParams:
    """Body geometry in pixels and the three intensity levels of the scene."""

    shoulder_width: float = 100.0
    torso_height: float = 200.0
    torso_top: float = 240.0
    body_center_x: float = 320.0
    upper_arm_len: float = 108.0
    forearm_len: float = 92.0
    arm_width: float = 14.0
    head_radius: float = 22.0
    skin_intensity: int = 200
    clothing_intensity: int = 110
    background_intensity: int = 15

    def __post_init__(self) -> None:
        lengths = ("shoulder_width", "torso_height", "upper_arm_len", "forearm_len", "arm_width", "head_radius")
        for name in lengths:
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        for name in ("skin_intensity", "clothing_intensity", "background_intensity"):
            if not 0 <= getattr(self, name) <= 255:
                raise ParameterError(f"{name} must lie in [0, 255]")
        if abs(self.skin_intensity - self.clothing_intensity) < 40:
            raise ParameterError("skin and clothing intensities must differ by at least 40 levels")
        if not self.background_intensity < min(self.skin_intensity, self.clothing_intensity) - 40:
            raise ParameterError("background must be at least 40 levels darker than skin and clothing")

    @property
    def body_width(self) -> float:
        return self.shoulder_width / SHOULDER_TO_BODY

    @property
    def arm_len(self) -> float:
        return self.upper_arm_len + self.forearm_len

    @property
    def torso_bottom(self) -> float:
        return self.torso_top + self.torso_height

    @property
    def head_center(self) -> tuple[float, float]:
        # overlaps the torso slightly so head and body form one silhouette
        return self.body_center_x, self.torso_top - 0.8 * self.head_radius

    @property
    def palm_len(self) -> float:
        return PALM_TO_FOREARM * self.forearm_len

    def shoulder(self, side: str) -> np.ndarray:
        return np.array([self.body_center_x + SIDE_SIGN[side] * self.shoulder_width / 2, self.torso_top, 0.0])


# --- joint table ----------------------------------------------------------

@dataclass(frozen=True)
class JointSpec:
    label: str
    name: str
    dof: int
    limits: tuple[tuple[float, float], ...]
    parent: str | None  # None is the torso root


def joint_table(lim: JointLimits | None = None) -> dict[str, JointSpec]:
    lim = JointLimits.default() if lim is None else lim
    r = lambda i: (lim.lo[i], lim.hi[i])  # noqa: E731
    neck_roll = (-40.0, 40.0)  # carried by the model, never transmitted
    return {
        "A": JointSpec("A", "neck", 3, (r(0), r(1), neck_roll), None),
        "B": JointSpec("B", "left_shoulder", 3, (r(2), r(3), r(4)), None),
        "C": JointSpec("C", "right_shoulder", 3, (r(6), r(7), r(8)), None),
        "D": JointSpec("D", "left_elbow", 1, (r(5),), "B"),
        "E": JointSpec("E", "right_elbow", 1, (r(9),), "C"),
        "F": JointSpec("F", "left_wrist", 1, (r(10),), "D"),
        "G": JointSpec("G", "right_wrist", 1, (r(11),), "E"),
    }


# --- forward kinematics -----------------------------------------------------

def _mirror(side: str) -> np.ndarray:
    return np.diag([SIDE_SIGN[side], 1.0, 1.0])


def _check_limits(j: JointAngleFrame, lim: JointLimits | None) -> None:
    lim = JointLimits.default() if lim is None else lim
    bad = lim.violations(j)
    if bad:
        raise DomainError(f"angles out of limits in slots {bad}")


def _arm_chain(j: JointAngleFrame, b: BodyParams, side: str):
    """World rotations of upper arm, forearm and palm plus joint positions."""
    a = j.arm(side)
    m = _mirror(side)
    q = shoulder_rotation(a.azimuth, a.elevation, a.roll)
    q_fore = q @ rot_hinge(a.elbow)
    q_palm = q_fore @ rot_hinge(a.wrist)
    s = b.shoulder(side)
    x = np.array([1.0, 0.0, 0.0])
    e = s + b.upper_arm_len * (m @ q @ x)
    w = e + b.forearm_len * (m @ q_fore @ x)
    # mirrored rotation acting on mirrored rest geometry
    return [m @ r @ m for r in (q, q_fore, q_palm)], (s, e, w)


def _head_rotation(j: JointAngleFrame) -> np.ndarray:
    pitch, yaw = j.neck
    # positive pitch tips the crown toward the camera
    return rot_azimuth(-yaw) @ rot_roll(-pitch)


def forward_kinematics(
    j: JointAngleFrame, b: BodyParams, lim: JointLimits | None = None
) -> dict[str, np.ndarray]:
    """3-D joint positions: neck, shoulders, elbows and wrists keyed ``<side>_<joint>``."""
    _check_limits(j, lim)
    out = {"neck": np.array([b.body_center_x, b.torso_top, 0.0])}
    for side in SIDES:
        _, (s, e, w) = _arm_chain(j, b, side)
        out[f"{side}_shoulder"], out[f"{side}_elbow"], out[f"{side}_wrist"] = s, e, w
    return out


# --- meshes -------------------------------------------------------------------

PART_NAMES = ("head", "upper_arm_l", "upper_arm_r", "forearm_l", "forearm_r", "palm_l", "palm_r", "body_dress")
PART_BUDGET = {"head": 400, "upper_arm": 350, "forearm": 250, "palm": 100, "body_dress": 350}


@dataclass(frozen=True)
class FrustumPrimitive:
    bottom: tuple[float, float]
    top: tuple[float, float]
    height: float
    segments: int = 16
    stacks: int = 1

    def __post_init__(self) -> None:
        if self.segments < 3:
            raise ParameterError(f"segments must be >= 3, got {self.segments}")
        if self.stacks < 1:
            raise ParameterError(f"stacks must be >= 1, got {self.stacks}")
        if min(self.bottom + self.top) < 0:
            raise ParameterError("ellipse semi-axes must be non-negative")
        if not self.height > 0:
            raise ParameterError("frustum height must be positive")
        if self.bottom_is_point and self.top_is_point:
            raise ParameterError("at most one frustum end may be a point")

    @property
    def bottom_is_point(self) -> bool:
        return self.bottom[0] == 0 and self.bottom[1] == 0

    @property
    def top_is_point(self) -> bool:
        return self.top[0] == 0 and self.top[1] == 0

    def expected_counts(self) -> tuple[int, int]:
        """(triangles, vertices) of the generated mesh."""
        n, k = self.segments, self.stacks
        if self.bottom_is_point or self.top_is_point:
            return 2 * n * (k - 1) + n, n * k + 1
        return 2 * n * k, n * (k + 1)


@dataclass
class TriMesh:
    vertices: np.ndarray  # (N, 3) float
    triangles: np.ndarray  # (M, 3) int
    parts: np.ndarray  # (M,) part label per triangle
    uv: np.ndarray | None = None  # (N, 2)

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.parts = np.asarray(self.parts, dtype=object).reshape(-1)
        if len(self.parts) != len(self.triangles):
            raise ParameterError("one part label per triangle required")
        if len(self.triangles) and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise ParameterError("triangle index out of range")
        if self.uv is not None:
            self.uv = np.asarray(self.uv, dtype=float).reshape(-1, 2)
            if len(self.uv) != len(self.vertices):
                raise ParameterError("one uv pair per vertex required")

    def triangle_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def part_counts(self) -> dict[str, int]:
        labels, counts = np.unique(self.parts.astype(str), return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))

    def vertex_parts(self) -> np.ndarray:
        out = np.empty(len(self.vertices), dtype=object)
        out[self.triangles.ravel()] = np.repeat(self.parts, 3)
        return out

    def part_vertex_ids(self, part: str) -> np.ndarray:
        return np.unique(self.triangles[self.parts == part].ravel())

    def copy(self) -> "TriMesh":
        return TriMesh(self.vertices.copy(), self.triangles.copy(), self.parts.copy(),
                       None if self.uv is None else self.uv.copy())


def concat_meshes(meshes: Iterable[TriMesh]) -> TriMesh:
    verts, tris, parts, uvs = [], [], [], []
    offset = 0
    with_uv = False
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        parts.append(m.parts)
        uvs.append(m.uv if m.uv is not None else np.zeros((len(m.vertices), 2)))
        with_uv |= m.uv is not None
        offset += len(m.vertices)
    return TriMesh(np.vstack(verts), np.vstack(tris), np.concatenate(parts),
                   np.vstack(uvs) if with_uv else None)


def frustum_mesh(p: FrustumPrimitive, part: str = "") -> TriMesh:
    """Triangulate a frustum standing on the local xy-plane, axis along +z.

    Side triangles wind counter-clockwise seen from outside.  A point end
    collapses its ring into a single apex joined by a triangle fan.
    """
    n, k = p.segments, p.stacks
    theta = 2 * math.pi * np.arange(n) / n
    cos, sin = np.cos(theta), np.sin(theta)
    verts: list[np.ndarray] = []
    ring_ids: list[np.ndarray | int] = []
    count = 0
    for level in range(k + 1):
        t = level / k
        a = (1 - t) * p.bottom[0] + t * p.top[0]
        b = (1 - t) * p.bottom[1] + t * p.top[1]
        z = t * p.height
        if (level == 0 and p.bottom_is_point) or (level == k and p.top_is_point):
            verts.append(np.array([[0.0, 0.0, z]]))
            ring_ids.append(count)
            count += 1
        else:
            verts.append(np.column_stack([a * cos, b * sin, np.full(n, z)]))
            ring_ids.append(np.arange(count, count + n))
            count += n
    tris = []
    nxt = np.roll(np.arange(n), -1)
    for level in range(k):
        lo, hi = ring_ids[level], ring_ids[level + 1]
        if isinstance(lo, int):
            tris.append(np.column_stack([np.full(n, lo), hi[nxt], hi]))
        elif isinstance(hi, int):
            tris.append(np.column_stack([lo, lo[nxt], np.full(n, hi)]))
        else:
            tris.append(np.column_stack([lo, lo[nxt], hi[nxt]]))
            tris.append(np.column_stack([lo, hi[nxt], hi]))
    tri = np.vstack(tris)
    return TriMesh(np.vstack(verts), tri, np.full(len(tri), part, dtype=object))


def _place(m: TriMesh, origin, frame: np.ndarray) -> TriMesh:
    """Map local coordinates through the column ``frame`` and translate."""
    out = m.copy()
    out.vertices = m.vertices @ np.asarray(frame).T + np.asarray(origin, dtype=float)
    return out


def _mirror_mesh(m: TriMesh, center_x: float, rename: dict[str, str]) -> TriMesh:
    out = m.copy()
    out.vertices[:, 0] = 2 * center_x - out.vertices[:, 0]
    out.triangles = out.triangles[:, ::-1].copy()  # keep outward winding
    out.parts = np.array([rename.get(p, p) for p in out.parts], dtype=object)
    return out


_ALONG_X = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])  # local z -> +x
_DOWN = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])  # local z -> +y
_UP = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])  # local z -> -y
_TOWARD_CAMERA = np.eye(3)


def _right_arm_parts(b: BodyParams) -> list[TriMesh]:
    r = b.arm_width / 2
    s = b.shoulder("right")
    e = s + np.array([b.upper_arm_len, 0.0, 0.0])
    w = e + np.array([b.forearm_len, 0.0, 0.0])
    palm_w, palm_t = 0.55 * b.arm_width, 0.2 * b.arm_width
    cap = 0.06 * b.palm_len
    pieces = [
        (FrustumPrimitive((1.1 * r, 1.1 * r), (0.95 * r, 0.95 * r), b.upper_arm_len, 25, 7), "upper_arm_r", s),
        (FrustumPrimitive((0.95 * r, 0.95 * r), (0.75 * r, 0.75 * r), b.forearm_len, 25, 5), "forearm_r", e),
        (FrustumPrimitive((0.0, 0.0), (palm_w, palm_t), cap, 10, 1), "palm_r", w),
        (FrustumPrimitive((palm_w, palm_t), (0.8 * palm_w, 0.8 * palm_t), 0.8 * b.palm_len, 10, 4), "palm_r",
         w + [cap, 0, 0]),
        (FrustumPrimitive((0.8 * palm_w, 0.8 * palm_t), (0.0, 0.0), b.palm_len - 0.8 * b.palm_len - cap, 10, 1),
         "palm_r", w + [cap + 0.8 * b.palm_len, 0, 0]),
    ]
    return [_place(frustum_mesh(p, part), origin, _ALONG_X) for p, part, origin in pieces]


def _head_parts(b: BodyParams) -> list[TriMesh]:
    hr = b.head_radius
    neck = np.array([b.body_center_x, b.torso_top, 0.0])
    up = np.array([0.0, -1.0, 0.0])
    h_neck, h_jaw, h_cran = 0.25 * hr, 0.8 * hr, 1.2 * hr
    crown = neck + up * (h_neck + h_jaw + h_cran)
    pieces = [
        (FrustumPrimitive((0.4 * hr, 0.4 * hr), (0.4 * hr, 0.4 * hr), h_neck, 20, 1), neck, _UP),
        (FrustumPrimitive((0.6 * hr, 0.6 * hr), (hr, hr), h_jaw, 20, 4), neck + up * h_neck, _UP),
        (FrustumPrimitive((hr, hr), (0.0, 0.0), h_cran, 20, 3), neck + up * (h_neck + h_jaw), _UP),
        # headgear halo behind the head, facing the camera
        (FrustumPrimitive((1.6 * hr, 1.6 * hr), (1.5 * hr, 1.5 * hr), 0.15 * hr, 20, 2),
         neck + up * (h_neck + 1.4 * hr) - [0, 0, 1.2 * hr], _TOWARD_CAMERA),
        (FrustumPrimitive((0.7 * hr, 0.7 * hr), (0.0, 0.0), 0.8 * hr, 20, 1), crown - up * 0.3 * hr, _UP),
    ]
    return [_place(frustum_mesh(p, "head"), origin, frame) for p, origin, frame in pieces]


def _body_parts(b: BodyParams) -> list[TriMesh]:
    a, d = b.body_width / 2, 0.3 * b.body_width
    top = np.array([b.body_center_x, b.torso_top, 0.0])
    down = np.array([0.0, 1.0, 0.0])
    waist = 0.6 * b.torso_height
    skirt = b.torso_height - waist
    pieces = [
        (FrustumPrimitive((a, d), (0.0, 0.0), 0.1 * b.shoulder_width, 25, 1), top, _UP),
        (FrustumPrimitive((a, d), (0.85 * a, 0.85 * d), waist, 25, 4), top, _DOWN),
        (FrustumPrimitive((0.85 * a, 0.85 * d), (1.3 * a, 1.2 * d), skirt, 25, 2), top + down * waist, _DOWN),
        (FrustumPrimitive((1.3 * a, 1.2 * d), (0.0, 0.0), 0.05 * b.torso_height, 25, 1),
         top + down * b.torso_height, _DOWN),
    ]
    meshes = [_place(frustum_mesh(p, "body_dress"), origin, frame) for p, origin, frame in pieces]
    for m in meshes:
        m.uv = _dress_uv(m.vertices, b)
    return meshes


def _dress_uv(v: np.ndarray, b: BodyParams) -> np.ndarray:
    # cylindrical around the vertical axis with the seam at the back,
    # so the front of the dress maps to the middle of the texture
    ang = np.arctan2(v[:, 0] - b.body_center_x, v[:, 2])
    u = 0.5 + ang / (2 * math.pi)
    vv = 1.0 - (v[:, 1] - b.torso_top) / b.torso_height
    return np.column_stack([u, np.clip(vv, 0.0, 1.0)])


def build_dancer_mesh(b: BodyParams | None = None) -> TriMesh:
    """Rest-pose (T-pose) dancer: head, body/dress and two arms of stacked frusta."""
    b = BodyParams() if b is None else b
    right = _right_arm_parts(b)
    left = [_mirror_mesh(m, b.body_center_x, {"upper_arm_r": "upper_arm_l", "forearm_r": "forearm_l",
                                               "palm_r": "palm_l"}) for m in right]
    mesh = concat_meshes(_head_parts(b) + left + right + _body_parts(b))
    return mesh


def _part_transforms(j: JointAngleFrame, b: BodyParams) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per part: rotation, rest pivot, posed pivot."""
    out = {}
    neck = np.array([b.body_center_x, b.torso_top, 0.0])
    out["head"] = (_head_rotation(j), neck, neck)
    x = np.array([1.0, 0.0, 0.0])
    for side, tag in (("left", "l"), ("right", "r")):
        (q, q_fore, q_palm), (s, e, w) = _arm_chain(j, b, side)
        sx = SIDE_SIGN[side] * x
        e_rest = s + b.upper_arm_len * sx
        w_rest = e_rest + b.forearm_len * sx
        out[f"upper_arm_{tag}"] = (q, s, s)
        out[f"forearm_{tag}"] = (q_fore, e_rest, e)
        out[f"palm_{tag}"] = (q_palm, w_rest, w)
    return out


def pose_mesh(m: TriMesh, j: JointAngleFrame, b: BodyParams, lim: JointLimits | None = None) -> TriMesh:
    """Rigidly move every part of a rest mesh to the pose ``j``."""
    _check_limits(j, lim)
    out = m.copy()
    vparts = m.vertex_parts()
    for part, (rot, pivot_rest, pivot_posed) in _part_transforms(j, b).items():
        if np.array_equal(rot, np.eye(3)) and np.array_equal(pivot_rest, pivot_posed):
            continue
        ids = np.nonzero(vparts == part)[0]
        out.vertices[ids] = (m.vertices[ids] - pivot_rest) @ rot.T + pivot_posed
    return out


# --- OBJ ------------------------------------------------------------------------

def export_obj(m: TriMesh) -> bytes:
    lines = ["# armcast dancer mesh"]
    lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in m.vertices]
    if m.uv is not None:
        lines += [f"vt {u:.6f} {v:.6f}" for u, v in m.uv]
    order = [p for p in PART_NAMES if p in set(m.parts)] + sorted(set(m.parts) - set(PART_NAMES))
    for part in order:
        lines.append(f"g {part}")
        for a, b_, c in m.triangles[m.parts == part] + 1:
            if m.uv is not None:
                lines.append(f"f {a}/{a} {b_}/{b_} {c}/{c}")
            else:
                lines.append(f"f {a} {b_} {c}")
    return ("\n".join(lines) + "\n").encode("ascii")


def read_obj(data: bytes) -> TriMesh:
    """Parse the subset of OBJ written by :func:`export_obj`."""
    verts, uvs, tris, parts = [], [], [], []
    group = ""
    for line in data.decode("ascii").splitlines():
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] == "v":
            verts.append([float(t) for t in tok[1:4]])
        elif tok[0] == "vt":
            uvs.append([float(t) for t in tok[1:3]])
        elif tok[0] == "g":
            group = tok[1] if len(tok) > 1 else ""
        elif tok[0] == "f":
            tris.append([int(t.split("/")[0]) - 1 for t in tok[1:4]])
            parts.append(group)
    return TriMesh(np.array(verts), np.array(tris, dtype=np.int64).reshape(-1, 3),
                   np.array(parts, dtype=object), np.array(uvs) if uvs else None)
