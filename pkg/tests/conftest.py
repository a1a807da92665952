import numpy as np
import pytest

_CRITERIA = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def record():
    """Record the outcome of an acceptance criterion for the terminal summary."""

    def _record(number: int, passed: bool, message: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {message}"
        _CRITERIA[number] = line
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])
