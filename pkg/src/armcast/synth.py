"""Forward renderer producing silhouette frames with known ground truth.

The camera is orthographic at one pixel per model unit, so the 2-D
keypoints of a pose are the xy components of its forward kinematics.
Shapes are antialiased by pixel coverage (a pixel centre lying exactly on
an edge gets half coverage), composited in painter's order: torso, head,
left arm, right arm.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FramingError, ParameterError
from .frame_io import Frame
from .pose3d import SIDES, ArmAngles, JointAngleFrame, JointLimits
from .skeleton import BodyParams, forward_kinematics

__all__ = [
    "BodyParams",
    "GroundTruthPose",
    "render_silhouette",
    "render_layers",
    "project_keypoints",
    "parse_angle_script",
    "sample_pose",
    "calibration_pose",
]

# smallest projected angle between upper arm and forearm for a pose to
# count as non-degenerate in the oracle suites
MIN_ELBOW_OPENING = 40.0

SCRIPT_COLUMNS = (
    "l_azimuth", "l_elevation", "l_roll", "l_elbow", "l_wrist",
    "r_azimuth", "r_elevation", "r_roll", "r_elbow", "r_wrist",
)


@dataclass(frozen=True)
class GroundTruthPose:
    left: ArmAngles = field(default_factory=ArmAngles)
    right: ArmAngles = field(default_factory=ArmAngles)
    occluded: tuple[bool, bool] = (False, False)

    def to_frame(self) -> JointAngleFrame:
        return JointAngleFrame.from_arms(self.left, self.right, occluded=self.occluded)

    def arm(self, side: str) -> ArmAngles:
        return self.left if side == "left" else self.right

    def mirrored(self) -> "GroundTruthPose":
        return GroundTruthPose(self.right, self.left, (self.occluded[1], self.occluded[0]))


def calibration_pose() -> GroundTruthPose:
    """Arms stretched out horizontally."""
    return GroundTruthPose()


def _fk(b: BodyParams, p: GroundTruthPose, lim: JointLimits | None = None) -> dict[str, np.ndarray]:
    try:
        return forward_kinematics(p.to_frame(), b, lim)
    except DomainError as exc:
        raise DomainError(f"pose out of joint limits: {exc}") from None


def project_keypoints(b: BodyParams, p: GroundTruthPose) -> dict[str, np.ndarray]:
    """Image positions of shoulder, elbow and wrist per side, as (3, 2) arrays."""
    fk = _fk(b, p)
    return {s: np.array([fk[f"{s}_{j}"][:2] for j in ("shoulder", "elbow", "wrist")]) for s in SIDES}


# --- signed distances on a pixel grid ----------------------------------------

def _segment_distance(xs, ys, a, b):
    ab = np.asarray(b, float) - np.asarray(a, float)
    denom = float(ab @ ab)
    px, py = xs - a[0], ys - a[1]
    if denom == 0.0:
        return np.hypot(px, py)
    t = np.clip((px * ab[0] + py * ab[1]) / denom, 0.0, 1.0)
    return np.hypot(px - t * ab[0], py - t * ab[1])


def _rect_sd(xs, ys, x0, y0, x1, y1):
    cx, cy, hx, hy = (x0 + x1) / 2, (y0 + y1) / 2, (x1 - x0) / 2, (y1 - y0) / 2
    dx, dy = np.abs(xs - cx) - hx, np.abs(ys - cy) - hy
    outside = np.hypot(np.maximum(dx, 0), np.maximum(dy, 0))
    return outside + np.minimum(np.maximum(dx, dy), 0)


def _coverage(sd: np.ndarray) -> np.ndarray:
    return np.clip(0.5 - sd, 0.0, 1.0)


def render_layers(b: BodyParams, p: GroundTruthPose, w: int, h: int) -> dict[str, np.ndarray]:
    """Per-shape pixel coverage in [0, 1]: torso, head, left_arm, right_arm."""
    if w <= 0 or h <= 0:
        raise ParameterError("frame size must be positive")
    kp = project_keypoints(b, p)
    r = b.arm_width / 2
    x0, x1 = b.body_center_x - b.body_width / 2, b.body_center_x + b.body_width / 2
    hx, hy = b.head_center
    boxes = [
        (x0, b.torso_top, x1, b.torso_bottom),
        (hx - b.head_radius, hy - b.head_radius, hx + b.head_radius, hy + b.head_radius),
    ]
    for s in SIDES:
        pts = kp[s]
        boxes.append((pts[:, 0].min() - r, pts[:, 1].min() - r, pts[:, 0].max() + r, pts[:, 1].max() + r))
    for bx0, by0, bx1, by1 in boxes:
        if bx0 < 0 or by0 < 0 or bx1 > w - 1 or by1 > h - 1:
            raise FramingError(f"figure extent ({bx0:.1f},{by0:.1f})-({bx1:.1f},{by1:.1f}) exceeds {w}x{h}")
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    layers = {
        "torso": _coverage(_rect_sd(xs, ys, x0, b.torso_top, x1, b.torso_bottom)),
        "head": _coverage(np.hypot(xs - hx, ys - hy) - b.head_radius),
    }
    for s in SIDES:
        sh, el, wr = kp[s]
        d = np.minimum(_segment_distance(xs, ys, sh, el), _segment_distance(xs, ys, el, wr))
        layers[f"{s}_arm"] = _coverage(d - r)
    return layers


def render_silhouette(
    b: BodyParams,
    p: GroundTruthPose,
    w: int = 640,
    h: int = 480,
    noise_sigma: float = 2.0,
    seed: int | None = 0,
) -> Frame:
    """Rasterize what the camera sees for body ``b`` in pose ``p``.

    Additive Gaussian noise of ``noise_sigma`` levels is drawn from a
    generator seeded with ``seed``; ``noise_sigma=0`` renders noiselessly.
    """
    layers = render_layers(b, p, w, h)
    img = np.full((h, w), float(b.background_intensity))
    order = (
        ("torso", b.clothing_intensity),
        ("head", b.skin_intensity),
        ("left_arm", b.skin_intensity),
        ("right_arm", b.skin_intensity),
    )
    for name, value in order:
        c = layers[name]
        img = img * (1.0 - c) + value * c
    if noise_sigma > 0:
        img = img + np.random.default_rng(seed).normal(0.0, noise_sigma, img.shape)
    return Frame.from_array(np.clip(np.rint(img), 0, 255).astype(np.uint8))


# --- angle scripts --------------------------------------------------------------

def parse_angle_script(text: str, lim: JointLimits | None = None) -> list[GroundTruthPose]:
    """One pose per non-comment line: ten arm angles in :data:`SCRIPT_COLUMNS` order."""
    lim = JointLimits.default() if lim is None else lim
    poses = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 10:
            raise ParameterError(f"line {lineno}: expected 10 angles, got {len(fields)}")
        try:
            vals = [float(v) for v in fields]
        except ValueError:
            raise ParameterError(f"line {lineno}: non-numeric angle") from None
        pose = GroundTruthPose(ArmAngles(*vals[:5]), ArmAngles(*vals[5:]))
        bad = lim.violations(pose.to_frame())
        if bad:
            raise DomainError(f"line {lineno}: angles out of limits")
        poses.append(pose)
    return poses


def format_angle_script(poses) -> str:
    lines = ["# " + " ".join(SCRIPT_COLUMNS)]
    for p in poses:
        lines.append(" ".join(f"{v:.3f}" for v in p.left.as_tuple() + p.right.as_tuple()))
    return "\n".join(lines) + "\n"


# --- pose sampling for oracle suites ---------------------------------------------

def _point_rect_distance(pt, x0, y0, x1, y1) -> float:
    dx = max(x0 - pt[0], 0.0, pt[0] - x1)
    dy = max(y0 - pt[1], 0.0, pt[1] - y1)
    return float(np.hypot(dx, dy))


def _seg_points(a, b, n=24) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return a[None, :] * (1 - t) + b[None, :] * t


def _inside_rect(pt, x0, y0, x1, y1, margin) -> bool:
    return x0 + margin <= pt[0] <= x1 - margin and y0 + margin <= pt[1] <= y1 - margin


def _segment_gap(a0, a1, b0, b1) -> float:
    pa, pb = _seg_points(a0, a1), _seg_points(b0, b1)
    return float(np.min(np.linalg.norm(pa[:, None] - pb[None], axis=2)))


def _arm_is_clean(b: BodyParams, pts: np.ndarray, max_phi: float, w: int, h: int) -> bool:
    """Arm is well separated from itself, the torso, the head and the frame border."""
    sh, el, wr = pts
    r = b.arm_width / 2
    cos_lim = np.cos(np.radians(max_phi))
    if np.linalg.norm(el - sh) < cos_lim * b.upper_arm_len or np.linalg.norm(wr - el) < cos_lim * b.forearm_len:
        return False
    # forearm must not fold back over the upper arm
    u, f = sh - el, wr - el
    inner = np.degrees(np.arccos(np.clip(u @ f / (np.linalg.norm(u) * np.linalg.norm(f)), -1.0, 1.0)))
    if inner < MIN_ELBOW_OPENING:
        return False
    if _segment_gap(sh, el, wr, wr) < 2 * b.arm_width or _segment_gap(sh, sh, el, wr) < 2 * b.arm_width:
        return False
    margin = 3 * r
    if min(pts[:, 0].min(), pts[:, 1].min()) < margin or pts[:, 0].max() > w - 1 - margin or pts[:, 1].max() > h - 1 - margin:
        return False
    return True


def _clear_of_body(b: BodyParams, pts: np.ndarray) -> bool:
    sh, el, wr = pts
    r = b.arm_width / 2
    x0, x1 = b.body_center_x - b.body_width / 2, b.body_center_x + b.body_width / 2
    hx, hy = b.head_center
    lead = 2.5 * b.arm_width / max(np.linalg.norm(el - sh), 1e-9)
    samples = np.vstack([_seg_points(sh + min(lead, 1.0) * (el - sh), el), _seg_points(el, wr)])
    for q in samples:
        if _point_rect_distance(q, x0, b.torso_top, x1, b.torso_bottom) < r + 3:
            return False
        if np.hypot(q[0] - hx, q[1] - hy) < b.head_radius + r + 3:
            return False
    return True


def _random_arm(rng: np.random.Generator, lim: JointLimits, side: str) -> ArmAngles:
    i = 2 if side == "left" else 6
    az = rng.uniform(max(lim.lo[i], 0.0), lim.hi[i])  # upper arm toward the camera
    el = rng.uniform(lim.lo[i + 1], lim.hi[i + 1])
    roll = rng.uniform(lim.lo[i + 2], lim.hi[i + 2])
    elbow = rng.uniform(lim.lo[i + 3], lim.hi[i + 3])
    return ArmAngles(az, el, roll, elbow, 0.0)


def _toward_camera(b: BodyParams, p: GroundTruthPose, side: str) -> bool:
    fk = _fk(b, p)
    s, e, w = fk[f"{side}_shoulder"], fk[f"{side}_elbow"], fk[f"{side}_wrist"]
    return e[2] - s[2] >= 0 and w[2] - e[2] >= 0


def sample_pose(
    rng: np.random.Generator,
    b: BodyParams | None = None,
    occluded_side: str | None = None,
    max_phi: float = 70.0,
    w: int = 640,
    h: int = 480,
    lim: JointLimits | None = None,
    max_tries: int = 100000,
) -> GroundTruthPose:
    """Rejection-sample an in-limit pose suited to the oracle suites.

    Both segments of each arm point toward the camera (the branch the
    lifter picks by default) and tilt at most ``max_phi`` degrees out of
    the image plane.  With ``occluded_side`` None neither arm overlaps the
    torso, head or the other arm; otherwise that arm's hand lies well
    inside the torso while the other arm stays clear.
    """
    b = BodyParams() if b is None else b
    lim = JointLimits.default() if lim is None else lim
    x0, x1 = b.body_center_x - b.body_width / 2, b.body_center_x + b.body_width / 2
    for _ in range(max_tries):
        arms = {s: _random_arm(rng, lim, s) for s in SIDES}
        flags = (occluded_side == "left", occluded_side == "right")
        pose = GroundTruthPose(arms["left"], arms["right"], flags)
        kp = project_keypoints(b, pose)
        ok = True
        for s in SIDES:
            if not _toward_camera(b, pose, s) or not _arm_is_clean(b, kp[s], max_phi, w, h):
                ok = False
                break
            if s == occluded_side:
                wr = kp[s][2]
                hx, hy = b.head_center
                if not _inside_rect(wr, x0, b.torso_top, x1, b.torso_bottom, b.arm_width):
                    ok = False
                elif np.hypot(wr[0] - hx, wr[1] - hy) < b.head_radius + 2 * b.arm_width:
                    ok = False
            elif not _clear_of_body(b, kp[s]):
                ok = False
            if not ok:
                break
        if not ok:
            continue
        gap = min(
            _segment_gap(kp["left"][i], kp["left"][i + 1], kp["right"][j], kp["right"][j + 1])
            for i in (0, 1) for j in (0, 1)
        )
        if gap < 2 * b.arm_width:
            continue
        return pose
    raise RuntimeError("pose sampler exhausted its attempts")
