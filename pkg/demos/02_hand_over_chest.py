"""A hand in front of the body: the self-occlusion case.

When the right hand rests on the chest, the silhouette alone cannot show
where the arm ends, because arm and torso merge into one blob.  The
calibrated skin band picks the bare arm out of the clothed torso, and the
arm is flagged as occluded in the output.

    python demos/02_hand_over_chest.py
"""
import numpy as np

from armcast import BodyParams, calibrate, detect_keypoints, render_silhouette
from armcast.synth import calibration_pose, project_keypoints, sample_pose
from armcast.vision import binarize, dynamic_threshold, gaussian_smooth, skin_mask
from armcast.frame_io import histogram

body = BodyParams()
calib = calibrate(render_silhouette(body, calibration_pose(), seed=0))

pose = sample_pose(np.random.default_rng(11), body, occluded_side="right")
frame = render_silhouette(body, pose, seed=2)

smooth = gaussian_smooth(frame, calib.sigma)
t = dynamic_threshold(histogram(smooth))
sil = binarize(smooth, t).bits
skin = skin_mask(frame, calib).bits
print(f"threshold {t}: silhouette {sil.sum()} px, of which skin {(sil & skin).sum()} px")


def ascii_view(step=8):
    """Coarse picture: '#' clothing, 'o' skin, '.' background."""
    rows = []
    for y in range(200, 460, step):
        row = ""
        for x in range(180, 520, step // 2):
            row += "o" if skin[y, x] else "#" if sil[y, x] else "."
        rows.append(row)
    return "\n".join(rows)


print(ascii_view())

k = detect_keypoints(frame, calib)
truth = project_keypoints(body, pose)
for side in ("left", "right"):
    arm = k.arm(side)
    err = np.linalg.norm(np.array(arm.wrist) - truth[side][2])
    print(f"{side:>5}: occluded={arm.occluded!s:<5} branch={arm.branch:<8} wrist error {err:.2f} px")
