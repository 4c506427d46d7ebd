import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ndtstream.netmodel import LinkTrace, NetworkSample

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def constant_trace(bandwidth, rtt=0.0, loss=0.0, duration=1000.0):
    return LinkTrace((NetworkSample(0.0, bandwidth, rtt, loss),), duration)


def step_trace(points, duration, rtt=0.0):
    """``points`` is a list of (t, bandwidth bit/s)."""
    return LinkTrace(tuple(NetworkSample(float(t), float(b), rtt, 0.0) for t, b in points), duration)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one "PASS/FAIL criterion: detail" line per acceptance criterion, echoed at the end of the run
ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def verdict(request):
    def record(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}"
        request.config.stash[ACCEPTANCE].append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
