import numpy as np
import pytest

from kerrjpa.core import DeviceParams

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def device():
    """gamma = 2 pi x 54.5 MHz, K/gamma = -8.3e-4, omega0 = 130 gamma."""
    return DeviceParams.typical()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def report(request):
    """Record one acceptance verdict, print it, then assert it."""

    def _report(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} | {detail}"
        request.config.stash[_RESULTS].append((number, line))
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = sorted(config.stash.get(_RESULTS, []))
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in results:
        terminalreporter.write_line(line)
