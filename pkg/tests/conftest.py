import numpy as np
import pytest

from magsob.fields import GridSpec, make_grid

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""
    def emit(number: int, name: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(GridSpec(4, 6.0, 6.0, 24, 24, 1.5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
