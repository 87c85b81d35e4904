import numpy as np
import pytest

from qutrit_nmr.spin_model import SpinSystem, equilibrium_deviation

_ACCEPTANCE = {}  # criterion test name -> all cases passed


@pytest.fixture(scope="session")
def system():
    return SpinSystem.from_splitting(240.0)


@pytest.fixture
def eq():
    return equilibrium_deviation()


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        test = report.nodeid.split("::")[-1].split("[")[0]
        ok = _ACCEPTANCE.get(test, True) and report.outcome == "passed"
        _ACCEPTANCE[test] = ok
    elif report.failed and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE[report.nodeid.split("::")[-1].split("[")[0]] = False


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _ACCEPTANCE.items():
        label = name.removeprefix("test_criterion_").replace("_", " ")
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {label}")
