import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_CRITERIA: list[str] = []


def record_criterion(line: str) -> None:
    _CRITERIA.append(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
