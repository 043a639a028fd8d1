import numpy as np
import pytest

from sqgpatch.contour import circle, ellipse


@pytest.fixture(scope="session")
def ellipse256():
    return ellipse(1.0, 0.5, 256)


@pytest.fixture(scope="session")
def ellipse128():
    return ellipse(1.0, 0.5, 128)


@pytest.fixture(scope="session")
def unit_circle():
    return circle(1.0, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}"
        request.config.stash[_ACCEPTANCE].append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("]")[1].split(".")[0])):
            terminalreporter.write_line(line)
