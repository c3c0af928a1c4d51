import numpy as np
import pytest

from gazekit import kernels
from gazekit.scenario import OraclePolicy, build_script, oracle_gaze, render_frames

_CRITERIA = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    marker = props.get("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    number, title = marker
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    measured = [v for k, v in report.user_properties if k == "measured"]
    _, previous, notes = _CRITERIA.get(number, (title, None, []))
    if previous == "FAIL" or (previous == "SKIP" and outcome == "PASS"):
        outcome = previous
    _CRITERIA[number] = (title, outcome, notes + measured)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome, notes = _CRITERIA[number]
        line = f"criterion {number} [{outcome}] {title}"
        if notes:
            line += " :: " + "; ".join(notes)
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(request, record_property):
    """Tag a test with its acceptance criterion; returns a recorder for measured values."""
    marker = request.node.get_closest_marker("criterion")
    record_property("criterion", tuple(marker.args))

    def measured(text):
        record_property("measured", text)

    return measured


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return kernels.load_backend(request.param)


@pytest.fixture(scope="session")
def canonical():
    return render_frames(build_script({"canonical": "animation"}))


@pytest.fixture(scope="session")
def canonical_gaze(canonical):
    return oracle_gaze(canonical, OraclePolicy())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
