"""Silhouette analysis: calibration, binarization and arm keypoint detection.

Detection works on a Gaussian-smoothed copy of the frame.  The silhouette
is the largest 8-connected component above the calibrated threshold.
Each arm is the connected region around its shoulder made of silhouette
pixels off the torso plus skin-band pixels on top of it, which is what
lets a hand held in front of the body be separated from the clothing.

Within an arm region the wrist is the tip with the largest geodesic
distance from the shoulder.  Limbs are drawn as round-ended strokes of
width ``arm_width``, so the tip pixel sits half a width beyond the joint
and is pulled back by that amount.  The elbow is the point of the region
farthest from the shoulder-wrist chord (again pulled back by half a
width); when no such corner stands out the arm is straight and the elbow
divides the chord in the calibrated upper-arm proportion.
"""
from __future__ import annotations

import math
from dataclasses import MISSING, asdict, dataclass, field, fields, replace

import numpy as np
from scipy import ndimage, optimize
from scipy.signal import find_peaks
from skimage.graph import MCP_Geometric

from .errors import DetectionError, NoContrastError, ParameterError, PoseError
from .frame_io import Frame, Hist256, histogram

SIDES = ("left", "right")
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Mask:
    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise ParameterError("mask must be 2-D")
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Calibration:
    """Per-user measurements taken from the arms-out calibration frame."""

    threshold: int
    skin_lo: int
    skin_hi: int
    arm_len: float
    upper_arm_len: float
    arm_width: float
    shoulder_width: float
    body_width: float
    shoulder_left: tuple[float, float]
    shoulder_right: tuple[float, float]
    body_center_x: float
    torso_top: float
    torso_bottom: float
    head_top: float
    head_half_width: float
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.skin_lo <= self.skin_hi <= 255:
            raise ParameterError(f"bad skin band [{self.skin_lo}, {self.skin_hi}]")
        if not 0 <= self.threshold <= 255:
            raise ParameterError("threshold must lie in [0, 255]")
        if not 0 < self.arm_width < self.upper_arm_len < self.arm_len:
            raise ParameterError("need 0 < arm_width < upper_arm_len < arm_len")
        mid = (self.shoulder_left[0] + self.shoulder_right[0]) / 2
        if abs(mid - self.body_center_x) > 2:
            raise ParameterError("shoulders are not symmetric about the body centre")

    @property
    def skin_band(self) -> tuple[int, int]:
        return self.skin_lo, self.skin_hi

    @property
    def forearm_len(self) -> float:
        return self.arm_len - self.upper_arm_len

    def shoulder(self, side: str) -> tuple[float, float]:
        return self.shoulder_left if side == "left" else self.shoulder_right

    def torso_box(self, margin: float = 0.0) -> tuple[float, float, float, float]:
        h = self.body_width / 2 + margin
        return (self.body_center_x - h, self.torso_top - margin, self.body_center_x + h, self.torso_bottom + margin)

    def mirrored(self, width: int) -> "Calibration":
        """Calibration of the column-mirrored scene in a frame ``width`` wide."""
        m = lambda p: (width - 1 - p[0], p[1])  # noqa: E731
        return replace(
            self,
            shoulder_left=m(self.shoulder_right),
            shoulder_right=m(self.shoulder_left),
            body_center_x=width - 1 - self.body_center_x,
        )

    def to_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                lines.append(f"{k}_x={v[0]:.4f}")
                lines.append(f"{k}_y={v[1]:.4f}")
            elif isinstance(v, int):
                lines.append(f"{k}={v}")
            else:
                lines.append(f"{k}={v:.4f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Calibration":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"calibration line {lineno}: expected key=value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
        kwargs = {}
        try:
            for f in fields(cls):
                if f.name in ("shoulder_left", "shoulder_right"):
                    kwargs[f.name] = (float(raw[f.name + "_x"]), float(raw[f.name + "_y"]))
                elif f.name in ("threshold", "skin_lo", "skin_hi"):
                    kwargs[f.name] = int(raw[f.name])
                elif f.name in raw or f.default is MISSING:
                    kwargs[f.name] = float(raw[f.name])
        except KeyError as exc:
            raise ParameterError(f"calibration file missing key {exc.args[0]}") from None
        except ValueError as exc:
            raise ParameterError(f"calibration file has a bad value: {exc}") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class DetectorConfig:
    sigma: float = 1.0
    inside_fraction: float = 0.9
    width_band: tuple[float, float] = (0.5, 1.5)
    length_tolerance: float = 0.25
    tie_fraction: float = 0.05
    straight_deviation: float = 2.0  # px of corner beyond the stroke edge
    torso_margin: float = 2.0
    upper_arm_ratio: float = 0.54
    shoulder_ratio: float = 0.8


@dataclass(frozen=True)
class Arm2D:
    shoulder: tuple[float, float]
    elbow: tuple[float, float]
    wrist: tuple[float, float]
    occluded: bool = False
    confidence: float = 1.0
    branch: str = "straight"  # straight | bent | occluded | missing

    def as_array(self) -> np.ndarray:
        return np.array([self.shoulder, self.elbow, self.wrist], dtype=float)


@dataclass(frozen=True)
class ArmKeypoints2D:
    left: Arm2D
    right: Arm2D

    def arm(self, side: str) -> Arm2D:
        return self.left if side == "left" else self.right


# --- histogram threshold -------------------------------------------------------

def smooth_histogram(counts) -> np.ndarray:
    """Centred 5-bin moving average; windows are truncated at the ends."""
    c = np.asarray(counts, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(c)])
    idx = np.arange(len(c))
    lo, hi = np.maximum(idx - 2, 0), np.minimum(idx + 3, len(c))
    return (csum[hi] - csum[lo]) / (hi - lo)


def dynamic_threshold(h: Hist256 | np.ndarray, min_prominence: float = 0.05) -> int:
    """Intensity of the deepest valley between the two highest histogram modes.

    Modes are peaks of the smoothed histogram whose prominence is at least
    ``min_prominence`` of the highest count; among equally deep valley bins
    the lowest intensity wins.
    """
    counts = h.counts if isinstance(h, Hist256) else np.asarray(h)
    if counts.sum() <= 0:
        raise NoContrastError("no-contrast: empty histogram")
    s = smooth_histogram(counts)
    top = s.max()
    padded = np.concatenate([[-1.0], s, [-1.0]])
    peaks, props = find_peaks(padded, prominence=min_prominence * top)
    peaks = peaks - 1
    if len(peaks) < 2:
        raise NoContrastError("no-contrast: histogram is unimodal")
    order = np.argsort(-s[peaks], kind="stable")
    p1, p2 = sorted(peaks[order[:2]])
    valley = p1 + 1 + int(np.argmin(s[p1 + 1 : p2]))
    if min(s[p1], s[p2]) - s[valley] < min_prominence * max(s[p1], s[p2]):
        raise NoContrastError("no-contrast: valley too shallow")
    return int(valley)


# --- pixel operations ----------------------------------------------------------

def gaussian_kernel(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def gaussian_smooth(f: Frame, sigma: float = 1.0) -> Frame:
    """Separable Gaussian blur with edge replication, rounded back to 8 bits."""
    k = gaussian_kernel(sigma)
    img = ndimage.correlate1d(f.pixels, k, axis=0, output=np.float64, mode="nearest")
    img = ndimage.correlate1d(img, k, axis=1, output=np.float64, mode="nearest")
    return Frame.from_array(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def binarize(f: Frame, t: int) -> Mask:
    return Mask(f.pixels > t)


def skin_mask(f: Frame, c: Calibration) -> Mask:
    px = f.pixels
    return Mask((px >= c.skin_lo) & (px <= c.skin_hi))


def largest_component(m: Mask) -> Mask:
    labels, n = ndimage.label(m.bits, structure=_EIGHT)
    if n == 0:
        return Mask(np.zeros_like(m.bits))
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return Mask(labels == int(np.argmax(sizes)))


# --- calibration ----------------------------------------------------------------

def calibrate(f: Frame, config: DetectorConfig | None = None) -> Calibration:
    """Measure the user from a frame of the arms-out calibration pose."""
    cfg = DetectorConfig() if config is None else config
    smooth = gaussian_smooth(f, cfg.sigma)
    t = dynamic_threshold(histogram(smooth))
    sil = largest_component(binarize(smooth, t)).bits
    ys, xs = np.nonzero(sil)
    if len(xs) == 0:
        raise NoContrastError("no-contrast: empty silhouette")
    top, bottom = ys.min(), ys.max()
    x_min, x_max = xs.min(), xs.max()

    # body width from the lower half, where only the torso is present
    lower = sil[(top + bottom) // 2 : bottom + 1]
    colsum = lower.sum(axis=0).astype(float)
    jumps = np.diff(colsum)
    left_edge = int(np.argmax(jumps)) + 1
    right_edge = int(np.argmin(jumps))
    if right_edge <= left_edge:
        raise PoseError("pose error: cannot find the torso")
    full = np.median(colsum[left_edge : right_edge + 1])
    body_width = float(colsum[max(left_edge - 2, 0) : right_edge + 3].sum() / full)
    center = (left_edge + right_edge) / 2
    extent = x_max - x_min + 1
    if extent < 1.5 * body_width:
        raise PoseError(f"pose error: arms not extended (extent {extent} px, body {body_width:.1f} px)")

    # horizontal arms: centre row and thickness of every column outside the torso
    rows = np.arange(sil.shape[0])[:, None]
    margin = 3
    arm_cols = np.r_[x_min : int(center - body_width / 2) - margin, int(center + body_width / 2) + margin + 1 : x_max + 1]
    col = sil[:, arm_cols]
    thick = col.sum(axis=0)
    centres = (rows * col).sum(axis=0) / np.maximum(thick, 1)
    arm_width_est = float(np.median(thick[thick > 0]))
    # keep clear of the rounded tips
    core = (arm_cols > x_min + 2 * arm_width_est) & (arm_cols < x_max - 2 * arm_width_est) & (thick > 0)
    if core.sum() < 4:
        raise PoseError("pose error: arms not extended")
    arm_width = float(np.median(thick[core]))
    shoulder_y = float(np.median(centres[core]))

    shoulder_width = cfg.shoulder_ratio * body_width
    sl = (center - shoulder_width / 2, shoulder_y)
    sr = (center + shoulder_width / 2, shoulder_y)
    arm_len = ((sl[0] - x_min) + (x_max - sr[0])) / 2 - arm_width / 2

    torso_cols = slice(int(math.ceil(center - body_width / 4)), int(center + body_width / 4) + 1)
    torso_bottom = float(np.nonzero(sil[:, torso_cols].any(axis=1))[0].max())

    # head: the blob above the arms near the centre line
    head = sil.copy()
    head[int(shoulder_y - arm_width) :] = False
    head[:, : int(sl[0])] = False
    head[:, int(sr[0]) + 1 :] = False
    head = largest_component(Mask(head)).bits
    hy, hx = np.nonzero(head)
    if len(hx) == 0:
        raise PoseError("pose error: head not found")
    head_top = float(hy.min())
    head_half_width = float(np.abs(hx - center).max()) + 0.5

    inner = ndimage.binary_erosion(head, structure=_EIGHT, iterations=2)
    samples = f.pixels[inner] if inner.any() else f.pixels[head]
    p5, p95 = np.percentile(samples, [5, 95])
    pad = max(2.0, 0.5 * (p95 - p5))
    skin_lo = int(max(0, math.floor(p5 - pad)))
    skin_hi = int(min(255, math.ceil(p95 + pad)))

    return Calibration(
        threshold=t,
        skin_lo=skin_lo,
        skin_hi=skin_hi,
        arm_len=float(arm_len),
        upper_arm_len=float(cfg.upper_arm_ratio * arm_len),
        arm_width=arm_width,
        shoulder_width=float(shoulder_width),
        body_width=body_width,
        shoulder_left=(float(sl[0]), shoulder_y),
        shoulder_right=(float(sr[0]), shoulder_y),
        body_center_x=float(center),
        torso_top=shoulder_y,
        torso_bottom=torso_bottom,
        head_top=head_top,
        head_half_width=head_half_width,
        sigma=cfg.sigma,
    )


# --- keypoint detection -----------------------------------------------------------

def arm_region_mask(smooth: Frame, sil: np.ndarray, c: Calibration, margin: float = 2.0) -> np.ndarray:
    """Silhouette pixels that can belong to an arm.

    Off the torso every silhouette pixel qualifies; on the torso only
    skin-band pixels do; the head is always excluded.
    """
    h, w = sil.shape
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    x0, y0, x1, y1 = c.torso_box(margin)
    on_torso = (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
    on_head = (np.abs(xs - c.body_center_x) <= c.head_half_width + margin) & (ys >= c.head_top - margin) & (
        ys <= c.torso_top + margin
    )
    skin = skin_mask(smooth, c).bits
    return sil & ~(on_torso & ~skin) & ~on_head


def _sample_segment(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    n = max(int(math.ceil(np.linalg.norm(b - a))), 1)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return a * (1 - t) + b * t


def _lookup(mask: np.ndarray, pts: np.ndarray) -> np.ndarray:
    xi = np.rint(pts[..., 0]).astype(int)
    yi = np.rint(pts[..., 1]).astype(int)
    ok = (xi >= 0) & (yi >= 0) & (xi < mask.shape[1]) & (yi < mask.shape[0])
    out = np.zeros(xi.shape, dtype=bool)
    out[ok] = mask[yi[ok], xi[ok]]
    return out


def _inside_fraction(mask: np.ndarray, *points) -> float:
    pts = np.vstack([_sample_segment(a, b) for a, b in zip(points[:-1], points[1:])])
    return float(_lookup(mask, pts).mean())


def _thickness(mask: np.ndarray, a, b, reach: float) -> np.ndarray:
    """Run length across the a->b line at each 1-px sample of its distal half."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    d = b - a
    n = np.linalg.norm(d)
    if n < 1:
        return np.zeros(0)
    u = d / n
    normal = np.array([-u[1], u[0]])
    pts = _sample_segment(a + 0.5 * d, b)
    r = int(math.ceil(reach))
    offs = np.arange(-r, r + 1, dtype=float)
    grid = pts[:, None, :] + offs[None, :, None] * normal[None, None, :]
    hit = _lookup(mask, grid)
    mid = r
    right = np.cumprod(hit[:, mid:], axis=1).sum(axis=1)
    left = np.cumprod(hit[:, : mid + 1][:, ::-1], axis=1).sum(axis=1)
    return np.where(hit[:, mid], left + right - 1, 0).astype(float)


def line_test(sil: np.ndarray, arm: np.ndarray, shoulder, tip, c: Calibration, cfg: DetectorConfig) -> tuple[bool, float]:
    """Straight-arm check along shoulder->tip: (passes, inside fraction)."""
    frac = _inside_fraction(sil, shoulder, tip)
    thick = _thickness(arm, shoulder, tip, 2 * c.arm_width)
    lo, hi = cfg.width_band
    band_ok = len(thick) > 0 and bool(np.all((thick >= lo * c.arm_width) & (thick <= hi * c.arm_width)))
    return frac >= cfg.inside_fraction and band_ok, frac


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 1e-9 else np.zeros_like(v)


def _clamp_length(origin: np.ndarray, p: np.ndarray, max_len: float) -> np.ndarray:
    d = p - origin
    n = np.linalg.norm(d)
    return origin + d * (max_len / n) if n > max_len else p


def _geodesic(region: np.ndarray, seed: tuple[int, int]) -> np.ndarray:
    costs = np.where(region, 1.0, np.inf)
    cum, _ = MCP_Geometric(costs).find_costs([seed])
    return np.where(np.isfinite(cum), cum, -1.0)


def _chord_corner(pts: np.ndarray, s: np.ndarray, w: np.ndarray):
    """Region pixel farthest from the s-w chord and its signed distance."""
    d = w - s
    n = np.linalg.norm(d)
    if n < 1e-9:
        return None, 0.0
    rel = pts - s
    dist = (d[0] * rel[:, 1] - d[1] * rel[:, 0]) / n
    idx = int(np.argmax(np.abs(dist)))
    return idx, float(dist[idx])


def _polyline_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    def seg(p0, p1):
        d = p1 - p0
        den = float(d @ d)
        t = np.clip((pts - p0) @ d / den, 0.0, 1.0) if den > 0 else np.zeros(len(pts))
        return np.linalg.norm(pts - p0 - t[:, None] * d, axis=1)

    return np.minimum(seg(a, b), seg(b, c))


def _fit_outline(crop: np.ndarray, origin, s, elbow, wrist, r: float, max_shift: float = np.inf):
    """Least-squares fit of elbow and wrist so the region outline sits at a
    constant distance from the shoulder-elbow-wrist polyline."""
    edge = crop & ~ndimage.binary_erosion(crop)
    ey, ex = np.nonzero(edge)
    pts = np.column_stack([ex + origin[0], ey + origin[1]]).astype(float)

    def resid(v):
        e, w = v[0:2], v[2:4]
        return _polyline_distance(pts, s, e, w) - v[4]

    x0 = np.r_[elbow, wrist, r - 0.5]
    sol = optimize.least_squares(resid, x0, loss="soft_l1", f_scale=1.0, x_scale=np.r_[5, 5, 5, 5, 1])
    e, w = sol.x[0:2], sol.x[2:4]
    if not (np.all(np.isfinite(sol.x)) and np.linalg.norm(e - elbow) <= max_shift
            and np.linalg.norm(w - wrist) <= max_shift):
        return elbow, wrist
    return e, w


def _arm_from_tip(pts, g, tip_i, s, sil, crop, origin, c: Calibration, cfg: DetectorConfig):
    """Elbow and wrist given the arm's far tip.

    Returns (elbow, wrist, branch, inside_fraction, consistent); an arm is
    consistent when its segments have plausible lengths and lie inside
    the silhouette.
    """
    r = c.arm_width / 2
    # the far cap is flat in geodesic distance; average its top pixels
    # laterally, keeping the reach of the farthest one
    top = (g >= g[tip_i] - 1.0) & (np.linalg.norm(pts - pts[tip_i], axis=1) < r)
    u = _unit(pts[tip_i] - s)
    n = np.array([-u[1], u[0]])
    tip = s + ((pts[tip_i] - s) @ u) * u + float(((pts[top] - s) @ n).mean()) * n
    wrist = tip - r * _unit(tip - s)
    corner_i, dev = _chord_corner(pts, s, wrist)
    if abs(dev) - r <= cfg.straight_deviation:
        elbow = s + (c.upper_arm_len / c.arm_len) * (wrist - s)
        frac = _inside_fraction(sil, s, tip)
        ok = np.linalg.norm(wrist - s) <= (1 + cfg.length_tolerance) * c.arm_len
        return elbow, wrist, "straight", frac, bool(ok and frac >= cfg.inside_fraction)
    normal = _unit(np.array([-(wrist - s)[1], (wrist - s)[0]])) * math.copysign(1.0, dev)
    elbow = pts[corner_i] - r * normal
    # forearm tip: the farthest point from the elbow beyond the corner
    beyond = g >= g[corner_i]
    far = np.nonzero(beyond)[0][int(np.argmax(np.linalg.norm(pts[beyond] - elbow, axis=1)))]
    wrist = pts[far] - r * _unit(pts[far] - elbow)
    if np.linalg.norm(wrist - elbow) > r:
        elbow, wrist = _fit_outline(crop, origin, s, elbow, wrist, r, max_shift=2 * c.arm_width)
    # bend consistency: segments inside the silhouette and not over-long
    ok = (
        np.linalg.norm(elbow - s) <= (1 + cfg.length_tolerance) * c.upper_arm_len
        and r < np.linalg.norm(wrist - elbow) <= (1 + cfg.length_tolerance) * c.forearm_len
        and _inside_fraction(sil, s, elbow, wrist) >= cfg.inside_fraction
    )
    if not ok:
        elbow = s + (c.upper_arm_len / c.arm_len) * (wrist - s)
        return elbow, wrist, "straight", _inside_fraction(sil, s, elbow, wrist), False
    return elbow, wrist, "bent", _inside_fraction(sil, s, elbow, wrist), True


def _detect_arm(
    side: str,
    sil: np.ndarray,
    labels: np.ndarray,
    objects: list,
    c: Calibration,
    cfg: DetectorConfig,
    prev: Arm2D | None,
) -> Arm2D | None:
    s = np.array(c.shoulder(side), dtype=float)
    # arm component: the one touching the shoulder neighbourhood
    h, w = sil.shape
    rad = int(math.ceil(1.5 * c.arm_width))
    x0, x1 = max(int(s[0]) - rad, 0), min(int(s[0]) + rad + 1, w)
    y0, y1 = max(int(s[1]) - rad, 0), min(int(s[1]) + rad + 1, h)
    win = labels[y0:y1, x0:x1]
    wy, wx = np.nonzero(win)
    if len(wx) == 0:
        return None
    dist = np.hypot(wx + x0 - s[0], wy + y0 - s[1])
    k = int(np.argmin(dist))
    label = win[wy[k], wx[k]]
    seed_full = (wy[k] + y0, wx[k] + x0)

    sl = objects[label - 1]
    by0, bx0 = sl[0].start, sl[1].start
    crop = labels[sl] == label
    geo = _geodesic(crop, (seed_full[0] - by0, seed_full[1] - bx0))
    gy, gx = np.nonzero(crop)
    g = geo[gy, gx]
    pts = np.column_stack([gx + bx0, gy + by0]).astype(float)

    # tip candidates within the tie band; a second branch defers to the previous wrist
    best = int(np.argmax(g))
    solved = _arm_from_tip(pts, g, best, s, sil, crop, (bx0, by0), c, cfg)
    if prev is not None:
        cand = np.zeros_like(crop)
        near = g >= (1 - cfg.tie_fraction) * g[best]
        cand[gy[near], gx[near]] = True
        cl, ncl = ndimage.label(cand, structure=_EIGHT)
        if ncl > 1:
            pw = np.asarray(prev.wrist)
            groups = cl[gy, gx]
            options = [(np.linalg.norm(solved[1] - pw), solved)]
            for gi in range(1, ncl + 1):
                members = np.nonzero(groups == gi)[0]
                top_i = members[int(np.argmax(g[members]))]
                if top_i == best:
                    continue
                alt = _arm_from_tip(pts, g, top_i, s, sil, crop, (bx0, by0), c, cfg)
                options.append((np.linalg.norm(alt[1] - pw), alt))
            consistent = [o for o in options if o[1][4]]
            solved = min(consistent or options, key=lambda o: o[0])[1]
    elbow, wrist, branch, frac, _ = solved

    elbow = _clamp_length(s, elbow, c.upper_arm_len + c.arm_width)
    wrist = _clamp_length(elbow, wrist, c.forearm_len + c.arm_width)
    tx0, ty0, tx1, ty1 = c.torso_box()
    occluded = bool(tx0 <= wrist[0] <= tx1 and ty0 <= wrist[1] <= ty1)
    if occluded:
        branch = "occluded"
    return Arm2D(
        (float(s[0]), float(s[1])),
        (float(elbow[0]), float(elbow[1])),
        (float(wrist[0]), float(wrist[1])),
        occluded,
        float(frac),
        branch,
    )


def detect_keypoints(
    f: Frame,
    c: Calibration,
    prev: ArmKeypoints2D | None = None,
    config: DetectorConfig | None = None,
) -> ArmKeypoints2D:
    """Shoulder, elbow and wrist of both arms in one frame."""
    cfg = DetectorConfig(sigma=c.sigma) if config is None else config
    smooth = gaussian_smooth(f, c.sigma)
    sil = largest_component(binarize(smooth, c.threshold)).bits
    if not sil.any():
        raise DetectionError("silhouette missing")
    region = arm_region_mask(smooth, sil, c, cfg.torso_margin)
    labels, _ = ndimage.label(region, structure=_EIGHT)
    objects = ndimage.find_objects(labels)
    arms = {}
    for side in SIDES:
        p = prev.arm(side) if prev is not None else None
        arm = _detect_arm(side, sil, labels, objects, c, cfg, p)
        if arm is None:
            if p is None:
                raise DetectionError(f"{side} arm not found")
            arm = replace(p, confidence=0.0, branch="missing")
        arms[side] = arm
    return ArmKeypoints2D(arms["left"], arms["right"])


def mirror_keypoints(k: ArmKeypoints2D, width: int) -> ArmKeypoints2D:
    def m(a: Arm2D) -> Arm2D:
        flip = lambda p: (width - 1 - p[0], p[1])  # noqa: E731
        return replace(a, shoulder=flip(a.shoulder), elbow=flip(a.elbow), wrist=flip(a.wrist))

    return ArmKeypoints2D(m(k.right), m(k.left))
