import numpy as np
import pytest

from cpball import algebra as alg

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, label = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        _OUTCOMES[number] = (label, report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        label, passed = _OUTCOMES[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {label}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def m2r():
    return alg.make_matrix_algebra(2, "R")


@pytest.fixture(scope="session")
def m2c():
    return alg.make_matrix_algebra(2, "C")


@pytest.fixture(scope="session")
def m1r():
    return alg.make_matrix_algebra(1, "R")


@pytest.fixture(scope="session")
def m1c():
    return alg.make_matrix_algebra(1, "C")


@pytest.fixture(scope="session")
def m1h():
    return alg.make_matrix_algebra(1, "H")
