import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("pkg", max_examples=40, deadline=None)
settings.load_profile("pkg")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))


_criteria = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_criteria] = []


@pytest.fixture
def criterion(request):
    """Record one ``criterion N: PASS|FAIL`` line and fail the test on FAIL."""
    lines = request.config.stash[_criteria]

    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((n, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_criteria]
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
