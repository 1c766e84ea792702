"""``armcast`` command line: calibrate, track, synth, receive, bench."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

from . import __version__
from .errors import ArmcastError
from .frame_io import SEQUENCE_PATTERN, load_pgm, save_pgm, sequence_paths
from .pipeline import Tracker
from .pose3d import SIDES, SLOT_NAMES, JointLimits, frames_to_csv
from .skeleton import BodyParams, build_dancer_mesh, export_obj, pose_mesh
from .synth import parse_angle_script, project_keypoints, render_silhouette
from .vision import Calibration, calibrate
from .wire import PoseReceiver, PoseSender, encode

DEFAULT_PORT = 7370
KEYPOINT_HEADER = ("frame",) + tuple(
    f"{s[0]}_{j}_{ax}" for s in SIDES for j in ("shoulder", "elbow", "wrist") for ax in "xy"
) + ("occluded_left", "occluded_right")


class CommandError(Exception):
    pass


# --- argument helpers ------------------------------------------------------------

def _limit_override(text: str) -> tuple[str, tuple[float, float]]:
    try:
        name, rng = text.split("=", 1)
        lo, hi = (float(v) for v in rng.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected SLOT=LO:HI, got {text!r}") from None
    if name not in SLOT_NAMES:
        raise argparse.ArgumentTypeError(f"unknown slot {name!r}")
    return name, (lo, hi)


def _body_override(text: str) -> tuple[str, float]:
    names = {f.name for f in fields(BodyParams)}
    try:
        name, value = text.split("=", 1)
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}") from None
    if name not in names:
        raise argparse.ArgumentTypeError(f"unknown body parameter {name!r}")
    return name, v


def _endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}") from None


def _limits(args) -> JointLimits:
    return JointLimits.default().with_overrides(dict(args.limit or []))


def _body(args) -> BodyParams:
    over = {}
    for name, v in args.body or []:
        kind = next(f.type for f in fields(BodyParams) if f.name == name)
        over[name] = int(v) if kind in (int, "int") else v
    return replace(BodyParams(), **over)


def _load_calibration(path: str) -> Calibration:
    try:
        return Calibration.from_text(Path(path).read_text())
    except OSError as exc:
        raise CommandError(f"cannot read calibration {path}: {exc.strerror}") from None


def _frame_paths(directory: str) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise CommandError(f"{directory}: not a directory")
    paths = sequence_paths(d)
    if not paths:
        raise CommandError(f"{directory}: no frames")
    return paths


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- commands -------------------------------------------------------------------

def cmd_calibrate(args) -> int:
    try:
        frame = load_pgm(args.frame)
    except OSError as exc:
        raise CommandError(f"cannot read {args.frame}: {exc.strerror}") from None
    _write(args.output, calibrate(frame).to_text())
    return 0


def cmd_track(args) -> int:
    calib = _load_calibration(args.calibration)
    paths = _frame_paths(args.frames)
    tracker = Tracker(calib, _limits(args))
    sender = PoseSender(*args.stream) if args.stream else None
    frames, conf = [], []
    try:
        for i, p in enumerate(paths):
            res = tracker.step(load_pgm(p))
            if res.warning:
                print(f"warning: {p.name}: {res.warning}; repeating previous angles", file=sys.stderr)
            frames.append(res.angles)
            conf.append(res.confidence)
            if sender is not None:
                sender.send(res.angles, ts=round(i * 1000 / args.fps))
    finally:
        if sender is not None:
            sender.close()
    if args.csv or not args.stream:
        _write(args.csv, frames_to_csv(frames, confidence=conf))
    return 0


def cmd_synth(args) -> int:
    body = _body(args)
    try:
        text = Path(args.script).read_text()
    except OSError as exc:
        raise CommandError(f"cannot read {args.script}: {exc.strerror}") from None
    poses = parse_angle_script(text, _limits(args))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(KEYPOINT_HEADER)
    for i, pose in enumerate(poses, start=1):
        frame = render_silhouette(body, pose, args.width, args.height, args.noise, args.seed + i)
        save_pgm(out / SEQUENCE_PATTERN.format(i), frame)
        kp = project_keypoints(body, pose)
        w.writerow([i] + [f"{v:.3f}" for s in SIDES for v in kp[s].ravel()] + [int(o) for o in pose.occluded])
    (out / "keypoints.csv").write_text(rows.getvalue())
    print(f"wrote {len(poses)} frames to {out}", file=sys.stderr)
    return 0


def cmd_receive(args) -> int:
    body = _body(args)
    rest = build_dancer_mesh(body) if args.obj_dir else None
    if args.obj_dir:
        Path(args.obj_dir).mkdir(parents=True, exist_ok=True)
    frames = []
    with PoseReceiver(args.host, args.port, _limits(args), max_connections=args.connections) as rx:
        rx.start()
        print(f"listening on {rx.address[0]}:{rx.address[1]}", file=sys.stderr, flush=True)
        for n, d in enumerate(rx, start=1):
            frames.append(d.frame)
            if rest is not None:
                mesh = pose_mesh(rest, d.frame, body)
                (Path(args.obj_dir) / f"frame_{n:06d}.obj").write_bytes(export_obj(mesh))
            if args.count and n >= args.count:
                break
        stats = rx.stats()
    if args.csv or not args.obj_dir:
        _write(args.csv, frames_to_csv(frames))
    print(stats.to_json(), file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    calib = _load_calibration(args.calibration)
    paths = _frame_paths(args.frames)
    tracker = Tracker(calib, _limits(args))
    t_read = t_encode = 0.0
    failures = 0
    for i, p in enumerate(paths):
        t0 = time.perf_counter()
        frame = load_pgm(p)
        t1 = time.perf_counter()
        res = tracker.step(frame)
        t2 = time.perf_counter()
        encode(res.angles, i, round(i * 1000 / 30))
        t_encode += time.perf_counter() - t2
        t_read += t1 - t0
        failures += res.warning is not None
    n = len(paths)
    stages = {"read": t_read, **tracker.times.as_dict(), "encode": t_encode}
    pipeline = stages["detect"] + stages["lift"] + stages["encode"]
    report = {
        "frames": n,
        "failures": failures,
        "fps": n / pipeline if pipeline > 0 else float("inf"),
        "fps_with_io": n / (pipeline + t_read) if pipeline + t_read > 0 else float("inf"),
        "ms_per_frame": {k: 1000 * v / n for k, v in stages.items()},
    }
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        print(f"frames        {n}  (failures {failures})")
        for k, v in report["ms_per_frame"].items():
            print(f"  {k:<10} {v:8.2f} ms/frame")
        print(f"pipeline fps  {report['fps']:.1f}  (detect+lift+encode)")
        print(f"with file io  {report['fps_with_io']:.1f}")
    return 0


# --- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armcast",
        description="Silhouette arm tracking, joint-angle streaming and dancer mesh posing.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def limit_flag(p):
        p.add_argument("--limit", action="append", type=_limit_override, metavar="SLOT=LO:HI",
                       help="override one joint limit in degrees (repeatable)")

    def body_flag(p):
        p.add_argument("--body", action="append", type=_body_override, metavar="NAME=VALUE",
                       help="override one body parameter (repeatable)")

    p = sub.add_parser("calibrate", help="measure a user from an arms-out calibration frame")
    p.add_argument("frame", help="PGM calibration frame")
    p.add_argument("-o", "--output", help="calibration file to write (default stdout)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("track", help="turn a frame sequence into joint angles")
    p.add_argument("frames", help="directory of frame_NNNNNN.pgm files")
    p.add_argument("-c", "--calibration", required=True)
    p.add_argument("--csv", help="angle CSV to write (default stdout unless --stream is given)")
    p.add_argument("--stream", type=_endpoint, metavar="HOST:PORT", help="send each frame to a receiver")
    p.add_argument("--fps", type=float, default=30.0, help="frame rate used for message timestamps")
    limit_flag(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("synth", help="render an angle script into a frame sequence")
    p.add_argument("script", help="text file, ten arm angles per line")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="noise seed (frame i uses seed+i)")
    p.add_argument("--noise", type=float, default=2.0, help="noise sigma in grey levels")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    body_flag(p)
    limit_flag(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("receive", help="receive a pose stream and write angles or meshes")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--csv", help="angle CSV to write (default stdout unless --obj-dir is given)")
    p.add_argument("--obj-dir", help="write one posed OBJ mesh per frame here")
    p.add_argument("--count", type=int, default=0, help="stop after this many frames")
    p.add_argument("--connections", type=int, default=1, help="sender sessions to serve before exiting")
    body_flag(p)
    limit_flag(p)
    p.set_defaults(func=cmd_receive)

    p = sub.add_parser("bench", help="time the tracking pipeline over a frame sequence")
    p.add_argument("frames")
    p.add_argument("-c", "--calibration", required=True)
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    limit_flag(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ArmcastError, CommandError) as exc:
        print(f"armcast {args.command}: {exc}", file=sys.stderr)
        return 1
