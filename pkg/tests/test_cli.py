import json
import socket
import threading
import time

import numpy as np
import pytest

from armcast.cli import main
from armcast.frame_io import Frame, save_pgm, sequence_paths
from armcast.pipeline import REST_FRAME, Tracker
from armcast.pose3d import JointAngleFrame, frames_from_csv
from armcast.skeleton import BodyParams as MeshBody
from armcast.skeleton import build_dancer_mesh, export_obj
from armcast.synth import calibration_pose, format_angle_script, render_silhouette, sample_pose
from armcast.vision import Calibration
from armcast.wire import PoseReceiver, PoseSender


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, body):
    d = tmp_path_factory.mktemp("cli")
    save_pgm(d / "calib.pgm", render_silhouette(body, calibration_pose(), seed=0))
    rng = np.random.default_rng(4)
    (d / "script.txt").write_text(format_angle_script([sample_pose(rng, body) for _ in range(10)]))
    assert main(["synth", str(d / "script.txt"), "-o", str(d / "seq"), "--seed", "7"]) == 0
    assert main(["calibrate", str(d / "calib.pgm"), "-o", str(d / "calib.cfg")]) == 0
    return d


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def run_receiver(argv):
    result = {}
    t = threading.Thread(target=lambda: result.setdefault("rc", main(argv)), daemon=True)
    t.start()
    return t, result


def wait_for_listener(port, timeout=5.0):
    """Poll until the port accepts; the probe itself is one (empty) session."""
    end = time.monotonic() + timeout
    while time.monotonic() < end:
        with socket.socket() as s:
            s.settimeout(0.2)
            if s.connect_ex(("127.0.0.1", port)) != 0:
                time.sleep(0.02)
                continue
        return
    raise AssertionError("receiver never listened")


# --- calibrate ------------------------------------------------------------------------

def test_calibrate_writes_usable_file(workdir, body):
    c = Calibration.from_text((workdir / "calib.cfg").read_text())
    assert abs(c.body_width - body.body_width) <= 2
    assert abs(c.arm_len - (body.upper_arm_len + body.forearm_len)) <= 2


def test_calibrate_dark_frame(tmp_path, capsys):
    save_pgm(tmp_path / "dark.pgm", Frame.from_array(np.full((480, 640), 15, np.uint8)))
    assert main(["calibrate", str(tmp_path / "dark.pgm")]) == 1
    assert "contrast" in capsys.readouterr().err


def test_calibrate_missing_file(tmp_path, capsys):
    assert main(["calibrate", str(tmp_path / "nope.pgm")]) == 1
    assert "armcast calibrate: cannot read" in capsys.readouterr().err


# --- synth ------------------------------------------------------------------------------

def test_synth_writes_frames_and_truth(workdir):
    assert len(sequence_paths(workdir / "seq")) == 10
    rows = (workdir / "seq" / "keypoints.csv").read_text().splitlines()
    assert len(rows) == 11 and rows[0].startswith("frame,")


def test_synth_is_reproducible(workdir, tmp_path):
    assert main(["synth", str(workdir / "script.txt"), "-o", str(tmp_path), "--seed", "7"]) == 0
    for a, b in zip(sequence_paths(workdir / "seq"), sequence_paths(tmp_path)):
        assert a.read_bytes() == b.read_bytes()


def test_synth_reports_bad_line(tmp_path, capsys):
    (tmp_path / "s.txt").write_text("# header\n0 0 0 0 0 0 0 0 0 0\n0 0 0 200 0 0 0 0 0 0\n")
    assert main(["synth", str(tmp_path / "s.txt"), "-o", str(tmp_path / "o")]) == 1
    assert "line 3" in capsys.readouterr().err


# --- track ------------------------------------------------------------------------------

def test_track_csv(workdir, capsys):
    assert main(["track", str(workdir / "seq"), "-c", str(workdir / "calib.cfg")]) == 0
    out = capsys.readouterr().out
    frames = frames_from_csv(out)
    assert len(frames) == 10
    assert out.splitlines()[0].endswith(",confidence")
    assert all(len(f.slots) == 12 for f in frames)


def test_track_empty_directory(tmp_path, workdir, capsys):
    assert main(["track", str(tmp_path), "-c", str(workdir / "calib.cfg")]) == 1
    assert "no frames" in capsys.readouterr().err


def test_track_streams_every_frame(workdir, tmp_path):
    with PoseReceiver() as rx:
        rx.start()
        host, port = rx.address
        argv = ["track", str(workdir / "seq"), "-c", str(workdir / "calib.cfg"),
                "--stream", f"{host}:{port}", "--csv", str(tmp_path / "sent.csv")]
        assert main(argv) == 0
        got = list(rx)
    sent = frames_from_csv((tmp_path / "sent.csv").read_text())
    assert [d.seq for d in got] == list(range(10))
    assert [d.frame for d in got] == sent
    assert [d.timestamp_ms for d in got] == [round(i * 1000 / 30) for i in range(10)]


def test_tracker_holds_previous_frame_on_failure(workdir, body):
    c = Calibration.from_text((workdir / "calib.cfg").read_text())
    t = Tracker(c)
    blank = Frame.from_array(np.full((480, 640), 15, np.uint8))
    first = t.step(blank)
    assert first.angles == REST_FRAME and first.confidence == 0 and first.warning
    good = t.step(render_silhouette(body, sample_pose(np.random.default_rng(2), body), seed=1))
    assert good.warning is None
    held = t.step(blank)
    assert held.angles == good.angles and held.confidence == 0


# --- receive ----------------------------------------------------------------------------

def test_receive_writes_rest_mesh_for_zero_frame(tmp_path):
    port = free_port()
    t, res = run_receiver(["receive", "--port", str(port), "--obj-dir", str(tmp_path), "--count", "1",
                         "--connections", "2"])
    wait_for_listener(port)
    with PoseSender("127.0.0.1", port) as tx:
        tx.send(JointAngleFrame())
    t.join(10)
    assert res["rc"] == 0
    expected = export_obj(build_dancer_mesh(MeshBody()))
    assert (tmp_path / "frame_000001.obj").read_bytes() == expected


def test_receive_csv_matches_track_csv(workdir, tmp_path):
    port = free_port()
    t, res = run_receiver(["receive", "--port", str(port), "--csv", str(tmp_path / "got.csv"),
                         "--connections", "2"])
    wait_for_listener(port)
    argv = ["track", str(workdir / "seq"), "-c", str(workdir / "calib.cfg"),
            "--stream", f"127.0.0.1:{port}", "--csv", str(tmp_path / "sent.csv")]
    assert main(argv) == 0
    t.join(10)
    assert res.get("rc") == 0
    assert frames_from_csv((tmp_path / "got.csv").read_text()) == frames_from_csv(
        (tmp_path / "sent.csv").read_text()
    )


def test_receive_bind_error(capsys):
    with PoseReceiver() as rx:
        assert main(["receive", "--port", str(rx.address[1])]) == 1
    assert "bind" in capsys.readouterr().err


# --- bench ------------------------------------------------------------------------------

def test_bench_reports_stages(workdir, capsys):
    assert main(["bench", str(workdir / "seq"), "-c", str(workdir / "calib.cfg"), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["frames"] == 10
    assert set(report["ms_per_frame"]) == {"read", "detect", "lift", "encode"}
    assert report["fps"] > 0


def test_bench_empty_directory(tmp_path, workdir, capsys):
    assert main(["bench", str(tmp_path), "-c", str(workdir / "calib.cfg")]) == 1
    assert "no frames" in capsys.readouterr().err
