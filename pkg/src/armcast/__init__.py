"""Monocular silhouette arm tracking with a low-bandwidth joint-angle stream.

A dark-background grayscale camera frame is binarized, the arms are
located as shoulder/elbow/wrist keypoints, lifted to 3-D from their
foreshortening, converted to twelve joint angles and sent as 38-byte
messages.  The receiving side poses a frustum-built dancer mesh.
"""
from .errors import ArmcastError
from .frame_io import Frame, Hist256, Region, histogram, read_pgm, write_pgm
from .pose3d import JointAngleFrame, JointLimits, angles_from_pose, clamp_to_limits, lift_arm, lift_segment
from .skeleton import BodyParams, TriMesh, build_dancer_mesh, export_obj, forward_kinematics, frustum_mesh, pose_mesh
from .synth import GroundTruthPose, project_keypoints, render_silhouette
from .vision import Calibration, calibrate, detect_keypoints, dynamic_threshold
from .wire import PoseMessage, decode, encode

__version__ = "0.1.0"

__all__ = [
    "ArmcastError",
    "BodyParams",
    "Calibration",
    "Frame",
    "GroundTruthPose",
    "Hist256",
    "JointAngleFrame",
    "JointLimits",
    "PoseMessage",
    "Region",
    "TriMesh",
    "angles_from_pose",
    "build_dancer_mesh",
    "calibrate",
    "clamp_to_limits",
    "decode",
    "detect_keypoints",
    "dynamic_threshold",
    "encode",
    "export_obj",
    "forward_kinematics",
    "frustum_mesh",
    "histogram",
    "lift_arm",
    "lift_segment",
    "pose_mesh",
    "project_keypoints",
    "read_pgm",
    "render_silhouette",
    "write_pgm",
]
