"""Frame-by-frame tracking: detect, lift, convert to joint angles, clamp."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import ArmcastError
from .frame_io import Frame
from .pose3d import ArmPose3D, JointAngleFrame, JointLimits, angles_from_pose, lift_arm
from .vision import ArmKeypoints2D, Calibration, detect_keypoints

REST_FRAME = JointAngleFrame((0.0,) * 12)


@dataclass(frozen=True)
class TrackResult:
    angles: JointAngleFrame
    confidence: float
    keypoints: ArmKeypoints2D | None = None
    warning: str | None = None


@dataclass
class StageTimes:
    detect: float = 0.0
    lift: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {"detect": self.detect, "lift": self.lift}


@dataclass
class Tracker:
    """Stateful tracker carrying keypoints and depth signs between frames.

    A frame that cannot be interpreted repeats the previous angles (the
    rest pose if there are none yet) at confidence 0, so a downstream
    animation never stalls.
    """

    calibration: Calibration
    limits: JointLimits = field(default_factory=JointLimits.default)
    times: StageTimes = field(default_factory=StageTimes)
    _prev_k: ArmKeypoints2D | None = None
    _prev_pose: tuple[ArmPose3D, ArmPose3D] | None = None
    _prev_j: JointAngleFrame | None = None

    def step(self, f: Frame) -> TrackResult:
        c = self.calibration
        try:
            t0 = time.perf_counter()
            k = detect_keypoints(f, c, self._prev_k)
            t1 = time.perf_counter()
            prev = self._prev_pose or (None, None)
            left = lift_arm(k.left, c, prev[0])
            right = lift_arm(k.right, c, prev[1])
            j = angles_from_pose(left, right, self.limits)
            t2 = time.perf_counter()
        except ArmcastError as exc:
            held = self._prev_j if self._prev_j is not None else REST_FRAME
            return TrackResult(held, 0.0, None, str(exc))
        self.times.detect += t1 - t0
        self.times.lift += t2 - t1
        self._prev_k, self._prev_pose, self._prev_j = k, (left, right), j
        return TrackResult(j, min(k.left.confidence, k.right.confidence), k)
