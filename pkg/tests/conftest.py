import numpy as np
import pytest

from secloc.scenario import Scenario


@pytest.fixture
def cross4():
    """Four anchors at unit offsets around a target at (3, 4)."""
    x = np.array([3.0, 4.0])
    anchors = x + np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return x, anchors


@pytest.fixture
def square6():
    """Six well-spread anchors and an interior target, no attack."""
    anchors = np.array(
        [[5.0, 5.0], [95.0, 8.0], [90.0, 92.0], [10.0, 88.0], [50.0, 2.0], [3.0, 50.0]]
    )
    return Scenario(anchors=anchors, target=np.array([41.0, 57.0]), b=100.0)


ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def _log(number: int, name: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number} [{name}]: {'PASS' if passed else 'FAIL'} ({detail})"
        ACCEPTANCE.append(line)
        print(line)
        return passed

    return _log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
