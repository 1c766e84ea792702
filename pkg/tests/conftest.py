import pytest

from armcast.synth import BodyParams, calibration_pose, render_silhouette
from armcast.vision import calibrate


@pytest.fixture(scope="session")
def body():
    return BodyParams()


@pytest.fixture(scope="session")
def calib_frame(body):
    return render_silhouette(body, calibration_pose(), seed=0)


@pytest.fixture(scope="session")
def calib(calib_frame):
    return calibrate(calib_frame)


# Acceptance criteria record a one-line verdict here; the lines are printed
# after the run whether or not output capture is on.
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def verdict():
    """``verdict(n, ok, text)`` records criterion ``n`` and returns ``ok``."""

    def record(n: int, ok: bool, text: str) -> bool:
        ACCEPTANCE[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {text}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
