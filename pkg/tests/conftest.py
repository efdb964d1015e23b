import numpy as np
import pytest

from fracspec.geometry import RadialGrid, build_domain, build_ray_fan

ACCEPTANCE_LINES: dict[int, str] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    """Store the PASS/FAIL line of an acceptance criterion and echo it."""
    line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


@pytest.fixture
def acceptance_record():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def interval_fan():
    dom = build_domain("interval", length=1.0)
    return build_ray_fan(dom, [0.0], 1)


@pytest.fixture(scope="session")
def disk_fan():
    dom = build_domain("disk", radius=0.5)
    return build_ray_fan(dom, [0.5, 0.0], 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def uniform(n: int) -> RadialGrid:
    return RadialGrid.uniform(n)
