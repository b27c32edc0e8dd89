import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kersize.measure import DiscreteMeasure  # noqa: E402
from kersize.problem import Problem  # noqa: E402


@pytest.fixture
def two_point():
    """Recover (x1, x2) from x1 with M1 = {(0,0), (0,1)}, noiseless."""
    return Problem.linear([[1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def three_point():
    return Problem.linear([[1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def injective():
    return Problem.linear(np.eye(2), [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])


def mu_alpha(alpha):
    return DiscreteMeasure(np.array([[alpha], [1.0 - alpha]]))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in rep.nodeid or rep.when != "call":
                continue
            props = dict(rep.user_properties)
            lines.append((rep.nodeid, props.get("criterion", rep.nodeid),
                          "PASS" if outcome == "passed" else "FAIL",
                          props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, name, status, detail in sorted(lines):
            terminalreporter.write_line(f"[{status}] {name}  {detail}")
