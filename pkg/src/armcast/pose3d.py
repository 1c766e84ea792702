"""Foreshortening lift of 2-D arm keypoints and the twelve-slot angle frame.

Camera frame, in pixels: x right, y down, z toward the camera, each
shoulder at z = 0.  Projection is orthographic, so dropping z from a
lifted pose gives back the image keypoints.

Arm angle conventions (shared with :mod:`armcast.skeleton`), written for
the right arm; the left arm is the mirror image through the body centre
line, so identical angles give mirrored poses:

* zero angles put the arm straight out sideways (the T-pose);
* azimuth turns the arm about the vertical axis, positive toward the
  camera, 180 degrees pointing it across the front of the body;
* elevation is measured from the horizontal plane, positive upward;
* roll spins the arm about its own axis;
* elbow and wrist flexion are hinges that, at zero roll, bend the distal
  segment toward the camera.  Roll of +90 degrees turns that bend upward.

Rotations compose azimuth, then elevation, then roll.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

import numpy as np

from .errors import OrientationError, ParameterError

SLOT_NAMES = (
    "neck_pitch",
    "neck_yaw",
    "l_shoulder_azimuth",
    "l_shoulder_elevation",
    "l_shoulder_roll",
    "l_elbow_flexion",
    "r_shoulder_azimuth",
    "r_shoulder_elevation",
    "r_shoulder_roll",
    "r_elbow_flexion",
    "l_wrist_flexion",
    "r_wrist_flexion",
)

# slot indices of (azimuth, elevation, roll, elbow, wrist) per side
ARM_SLOTS = {"left": (2, 3, 4, 5, 10), "right": (6, 7, 8, 9, 11)}
SIDES = ("left", "right")
SIDE_SIGN = {"left": -1.0, "right": 1.0}

_EPS = 1e-9


# --- rotation conventions ------------------------------------------------

def rot_azimuth(deg: float) -> np.ndarray:
    """Rotation about the vertical axis taking +x toward +z."""
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rot_elevation(deg: float) -> np.ndarray:
    """Rotation about z taking +x upward (toward -y)."""
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_roll(deg: float) -> np.ndarray:
    """Rotation about the limb axis (+x)."""
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


# hinge flexion bends +x toward +z, the same motion as azimuth
rot_hinge = rot_azimuth


def shoulder_rotation(azimuth: float, elevation: float, roll: float) -> np.ndarray:
    return rot_azimuth(azimuth) @ rot_elevation(elevation) @ rot_roll(roll)


# --- angle frame -----------------------------------------------------------

@dataclass(frozen=True)
class ArmAngles:
    azimuth: float = 0.0
    elevation: float = 0.0
    roll: float = 0.0
    elbow: float = 0.0
    wrist: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.azimuth, self.elevation, self.roll, self.elbow, self.wrist)


@dataclass(frozen=True)
class JointAngleFrame:
    """Twelve joint angles in degrees plus per-arm occlusion flags.

    ``clamped`` holds the slot indices altered by :func:`clamp_to_limits`;
    it is diagnostic only and ignored by equality.
    """

    slots: tuple[float, ...] = (0.0,) * 12
    occluded: tuple[bool, bool] = (False, False)
    clamped: frozenset[int] = field(default=frozenset(), compare=False)

    def __post_init__(self) -> None:
        slots = tuple(float(v) for v in self.slots)
        if len(slots) != 12:
            raise ParameterError(f"expected 12 slots, got {len(slots)}")
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "occluded", (bool(self.occluded[0]), bool(self.occluded[1])))

    @classmethod
    def from_arms(
        cls,
        left: ArmAngles,
        right: ArmAngles,
        neck: tuple[float, float] = (0.0, 0.0),
        occluded: tuple[bool, bool] = (False, False),
    ) -> "JointAngleFrame":
        slots = [0.0] * 12
        slots[0], slots[1] = neck
        for side, arm in (("left", left), ("right", right)):
            for idx, v in zip(ARM_SLOTS[side], arm.as_tuple()):
                slots[idx] = v
        return cls(tuple(slots), occluded)

    def arm(self, side: str) -> ArmAngles:
        return ArmAngles(*(self.slots[i] for i in ARM_SLOTS[side]))

    @property
    def neck(self) -> tuple[float, float]:
        return self.slots[0], self.slots[1]

    def as_array(self) -> np.ndarray:
        return np.array(self.slots)

    def mirrored(self) -> "JointAngleFrame":
        """Swap left and right arm slots (and flags); the pose mirrors about the body axis."""
        return JointAngleFrame.from_arms(
            self.arm("right"), self.arm("left"), neck=(self.slots[0], -self.slots[1]),
            occluded=(self.occluded[1], self.occluded[0]),
        )


@dataclass(frozen=True)
class JointLimits:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 12 or len(hi) != 12:
            raise ParameterError("joint limits need 12 slots")
        bad = [SLOT_NAMES[i] for i in range(12) if not lo[i] < hi[i]]
        if bad:
            raise ParameterError(f"empty limit interval for {', '.join(bad)}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def default(cls) -> "JointLimits":
        arm_lo, arm_hi = (-60.0, -90.0, -90.0, 0.0), (180.0, 90.0, 90.0, 150.0)
        lo = (-45.0, -75.0) + arm_lo + arm_lo + (-60.0, -60.0)
        hi = (45.0, 75.0) + arm_hi + arm_hi + (60.0, 60.0)
        return cls(lo, hi)

    def with_overrides(self, overrides: dict[str, tuple[float, float]]) -> "JointLimits":
        lo, hi = list(self.lo), list(self.hi)
        for name, (a, b) in overrides.items():
            i = SLOT_NAMES.index(name)
            lo[i], hi[i] = a, b
        return JointLimits(tuple(lo), tuple(hi))

    def violations(self, j: JointAngleFrame) -> list[int]:
        return [i for i, v in enumerate(j.slots) if not self.lo[i] <= v <= self.hi[i]]


def clamp_to_limits(j: JointAngleFrame, lim: JointLimits | None = None) -> JointAngleFrame:
    lim = JointLimits.default() if lim is None else lim
    out, flagged = [], set()
    for i, v in enumerate(j.slots):
        c = min(max(v, lim.lo[i]), lim.hi[i])
        if c != v:
            flagged.add(i)
        out.append(c)
    return replace(j, slots=tuple(out), clamped=frozenset(flagged))


# --- lifting ----------------------------------------------------------------

class LiftResult(NamedTuple):
    offset: np.ndarray  # (dx, dy, dz)
    sign: int
    phi: float  # out-of-plane angle, degrees
    over_length: bool


def lift_segment(p0, p1, full_len: float, prev_sign: int | None = None) -> LiftResult:
    """Recover the depth offset of a limb segment from its projected length.

    The segment tilts out of the image plane by ``phi = arccos(l / L)``;
    its depth offset is ``sign * L * sin(phi)``.  The sign cannot be seen
    in a single view: ``prev_sign`` carries it over from the previous
    frame, otherwise the segment is taken to point toward the camera.
    """
    if not full_len > 0:
        raise ParameterError(f"segment length must be positive, got {full_len}")
    dx, dy = float(p1[0]) - float(p0[0]), float(p1[1]) - float(p0[1])
    l = math.hypot(dx, dy)
    ratio = l / full_len
    over = ratio > 1.0
    phi = math.acos(min(ratio, 1.0))
    sign = 1 if prev_sign is None else (1 if prev_sign >= 0 else -1)
    dz = sign * full_len * math.sin(phi)
    return LiftResult(np.array([dx, dy, dz]), sign, math.degrees(phi), over)


@dataclass(frozen=True)
class ArmPose3D:
    shoulder: np.ndarray
    elbow: np.ndarray
    wrist: np.ndarray
    depth_signs: tuple[int, int] = (1, 1)
    over_length: tuple[bool, bool] = (False, False)
    occluded: bool = False

    def flipped(self, segment: int | None = None) -> "ArmPose3D":
        """The mirror-in-depth pose with identical projection.

        ``segment`` 0 flips only the upper arm, 1 only the forearm, None both.
        """
        d_upper = self.elbow - self.shoulder
        d_fore = self.wrist - self.elbow
        s0, s1 = self.depth_signs
        if segment in (None, 0):
            d_upper = d_upper * np.array([1.0, 1.0, -1.0])
            s0 = -s0
        if segment in (None, 1):
            d_fore = d_fore * np.array([1.0, 1.0, -1.0])
            s1 = -s1
        elbow = self.shoulder + d_upper
        return replace(self, elbow=elbow, wrist=elbow + d_fore, depth_signs=(s0, s1))

    def projected(self) -> tuple[tuple[float, float], tuple[float, float], tuple[float, float]]:
        return tuple((float(p[0]), float(p[1])) for p in (self.shoulder, self.elbow, self.wrist))


def lift_arm(arm, calib, prev: ArmPose3D | None = None) -> ArmPose3D:
    """Lift one arm's 2-D keypoints (shoulder, elbow, wrist) to 3-D.

    ``arm`` needs ``shoulder``/``elbow``/``wrist`` pixel coordinates;
    ``calib`` needs ``upper_arm_len`` and ``arm_len``.
    """
    upper = float(calib.upper_arm_len)
    fore = float(calib.arm_len) - upper
    s = np.array([float(arm.shoulder[0]), float(arm.shoulder[1]), 0.0])
    signs = prev.depth_signs if prev is not None else (None, None)
    up = lift_segment(arm.shoulder, arm.elbow, upper, signs[0])
    lo = lift_segment(arm.elbow, arm.wrist, fore, signs[1])
    elbow = s + up.offset
    wrist = elbow + lo.offset
    return ArmPose3D(
        s, elbow, wrist, (up.sign, lo.sign), (up.over_length, lo.over_length),
        bool(getattr(arm, "occluded", False)),
    )


# --- angles -----------------------------------------------------------------

def _arm_angles(pose: ArmPose3D, side: str) -> ArmAngles:
    mirror = np.array([SIDE_SIGN[side], 1.0, 1.0])
    upper = (pose.elbow - pose.shoulder) * mirror
    fore = (pose.wrist - pose.elbow) * mirror
    nu, nf = np.linalg.norm(upper), np.linalg.norm(fore)
    if nu < _EPS or nf < _EPS:
        raise OrientationError(f"{side} arm has a zero-length segment")
    u, f = upper / nu, fore / nf
    elevation = math.degrees(math.asin(max(-1.0, min(1.0, -u[1]))))
    horiz = math.hypot(u[0], u[2])
    azimuth = math.degrees(math.atan2(u[2], u[0])) if horiz > 1e-6 else 0.0
    # forearm expressed in the un-rolled upper-arm frame
    g = (rot_azimuth(azimuth) @ rot_elevation(elevation)).T @ f
    elbow = math.degrees(math.acos(max(-1.0, min(1.0, g[0]))))
    bend = math.hypot(g[1], g[2])
    roll = math.degrees(math.atan2(-g[1], g[2])) if bend > 1e-6 else 0.0
    return ArmAngles(azimuth, elevation, roll, elbow, 0.0)


def angles_from_pose(left: ArmPose3D, right: ArmPose3D, lim: JointLimits | None = None) -> JointAngleFrame:
    """Joint angles reproducing the two lifted arms; neck and wrist slots stay zero."""
    j = JointAngleFrame.from_arms(
        _arm_angles(left, "left"),
        _arm_angles(right, "right"),
        occluded=(left.occluded, right.occluded),
    )
    return clamp_to_limits(j, lim)


# --- CSV --------------------------------------------------------------------

CSV_HEADER = ("frame",) + SLOT_NAMES + ("occluded_left", "occluded_right")


def frames_to_csv(
    frames: Iterable[JointAngleFrame],
    start: int = 1,
    confidence: Iterable[float] | None = None,
) -> str:
    """Angle table, one row per frame; ``confidence`` adds a trailing column."""
    frames = list(frames)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + (("confidence",) if confidence is not None else ()))
    conf = list(confidence) if confidence is not None else None
    for i, j in enumerate(frames):
        row = [i + start] + [f"{v:.2f}" for v in j.slots] + [int(j.occluded[0]), int(j.occluded[1])]
        if conf is not None:
            row.append(f"{conf[i]:.3f}")
        w.writerow(row)
    return buf.getvalue()


def frames_from_csv(text: str) -> list[JointAngleFrame]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        JointAngleFrame(
            tuple(float(r[n]) for n in SLOT_NAMES),
            (r["occluded_left"] == "1", r["occluded_right"] == "1"),
        )
        for r in rows
    ]
