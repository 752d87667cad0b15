import numpy as np
import pytest

from eqrate import standard_games


@pytest.fixture
def brps():
    return standard_games.biased_rps()


@pytest.fixture
def pd():
    return standard_games.prisoners_dilemma()


@pytest.fixture
def coordination():
    return standard_games.preferential_coordination()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (report.when == "call" or report.failed):
        return
    number, title = marker.args
    status = "PASS" if report.passed else "FAIL"
    item.config._criteria.append((number, f"criterion {number} {status}: {title}"))


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_criteria", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
