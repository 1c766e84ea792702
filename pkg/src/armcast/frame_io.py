"""Grayscale frames, PGM codec, region histograms and frame sequences.

Coordinates follow raster order everywhere in the package: origin at the
top-left pixel, x to the right, y downward.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import BoundsError, DecodeError, ParameterError

SEQUENCE_PATTERN = "frame_{:06d}.pgm"
_SEQUENCE_RE = re.compile(r"^frame_(\d+)\.pgm$")


class Frame:
    """Immutable 8-bit grayscale raster.

    ``data`` may be a 2-D array of shape (height, width) or any flat
    row-major sequence of ``width * height`` intensities.
    """

    __slots__ = ("_pixels",)

    def __init__(self, width: int, height: int, data) -> None:
        if int(width) <= 0 or int(height) <= 0:
            raise ParameterError(f"frame dimensions must be positive, got {width}x{height}")
        arr = np.asarray(data)
        if arr.size != int(width) * int(height):
            raise ParameterError(
                f"data length {arr.size} does not match {width}x{height}={int(width) * int(height)}"
            )
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ParameterError("intensities must lie in [0, 255]")
        pixels = arr.astype(np.uint8, copy=True).reshape(int(height), int(width))
        pixels.flags.writeable = False
        self._pixels = pixels

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Frame":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ParameterError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(arr.shape[1], arr.shape[0], arr)

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def pixels(self) -> np.ndarray:
        """Read-only (height, width) uint8 view."""
        return self._pixels

    @property
    def data(self) -> bytes:
        return self._pixels.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self) -> int:
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self) -> str:
        return f"Frame({self.width}x{self.height})"


@dataclass(frozen=True)
class Region:
    x0: int
    y0: int
    w: int
    h: int

    def check_within(self, frame: Frame) -> None:
        if (
            self.w <= 0
            or self.h <= 0
            or self.x0 < 0
            or self.y0 < 0
            or self.x0 + self.w > frame.width
            or self.y0 + self.h > frame.height
        ):
            raise BoundsError(f"{self} is not inside a {frame.width}x{frame.height} frame")

    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y0 + self.h), slice(self.x0, self.x0 + self.w)

    @classmethod
    def whole(cls, frame: Frame) -> "Region":
        return cls(0, 0, frame.width, frame.height)


@dataclass(frozen=True)
class Hist256:
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (256,):
            raise ParameterError(f"histogram needs 256 bins, got {counts.shape}")
        if (counts < 0).any():
            raise ParameterError("histogram counts must be non-negative")
        counts = counts.copy()
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram(f: Frame, r: Region | None = None) -> Hist256:
    """Intensity histogram of the pixels inside ``r`` (whole frame if omitted)."""
    r = Region.whole(f) if r is None else r
    r.check_within(f)
    ys, xs = r.slices()
    return Hist256(np.bincount(f.pixels[ys, xs].ravel(), minlength=256))


# --- PGM ------------------------------------------------------------------

def _header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the single whitespace
    byte that terminates the last token.
    """
    tokens: list[bytes] = []
    i, n = 0, len(buf)
    while len(tokens) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i < n and buf[i : i + 1] == b"#":
            while i < n and buf[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not buf[i : i + 1].isspace() and buf[i : i + 1] != b"#":
            i += 1
        if start == i:
            break
        tokens.append(buf[start:i])
    return tokens, i + 1


def read_pgm(buf: bytes) -> Frame:
    """Decode a binary (P5) or ASCII (P2) PGM with maxval <= 255."""
    buf = bytes(buf)
    magic = buf[:2]
    if magic not in (b"P5", b"P2"):
        raise DecodeError(f"magic: expected P5 or P2, got {magic!r}")
    tokens, offset = _header_tokens(buf[2:], 3)
    offset += 2
    names = ("width", "height", "maxval")
    if len(tokens) < 3:
        raise DecodeError(f"{names[len(tokens)]}: header truncated")
    values = []
    for name, tok in zip(names, tokens):
        try:
            values.append(int(tok))
        except ValueError:
            raise DecodeError(f"{name}: not an integer ({tok!r})") from None
    width, height, maxval = values
    if width <= 0 or height <= 0:
        raise DecodeError(f"width/height: must be positive, got {width}x{height}")
    if not 0 < maxval <= 255:
        raise DecodeError(f"maxval: {maxval} not in 1..255")
    npix = width * height
    if magic == b"P5":
        payload = buf[offset : offset + npix]
        if len(payload) < npix:
            raise DecodeError(f"pixel data: truncated, expected {npix} bytes, got {len(payload)}")
        pixels = np.frombuffer(payload, dtype=np.uint8)
    else:
        fields = buf[offset - 1 :].split()
        if len(fields) < npix:
            raise DecodeError(f"pixel data: truncated, expected {npix} samples, got {len(fields)}")
        try:
            pixels = np.array([int(v) for v in fields[:npix]], dtype=np.int64)
        except ValueError:
            raise DecodeError("pixel data: non-integer sample") from None
    if pixels.max(initial=0) > maxval:
        raise DecodeError(f"pixel data: sample exceeds maxval {maxval}")
    return Frame(width, height, pixels)


def write_pgm(f: Frame) -> bytes:
    return b"P5\n%d %d\n255\n" % (f.width, f.height) + f.data


def load_pgm(path: str | os.PathLike) -> Frame:
    return read_pgm(Path(path).read_bytes())


def save_pgm(path: str | os.PathLike, f: Frame) -> None:
    Path(path).write_bytes(write_pgm(f))


# --- sequences --------------------------------------------------------------

def sequence_paths(directory: str | os.PathLike) -> list[Path]:
    """Numbered frame files of a capture directory in frame order."""
    found = []
    for p in Path(directory).iterdir():
        m = _SEQUENCE_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    return [p for _, p in sorted(found)]


def read_sequence(directory: str | os.PathLike) -> Iterator[Frame]:
    for p in sequence_paths(directory):
        yield load_pgm(p)


def write_sequence(directory: str | os.PathLike, frames: Sequence[Frame], start: int = 1) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, f in enumerate(frames, start=start):
        p = directory / SEQUENCE_PATTERN.format(i)
        save_pgm(p, f)
        paths.append(p)
    return paths
