import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pivotplan import shapes  # noqa: E402
from pivotplan.config import PlannerConfig  # noqa: E402
from pivotplan.graph import build_offline  # noqa: E402


@pytest.fixture(scope="session")
def cfg():
    return PlannerConfig(max_grasps=30)


@pytest.fixture(scope="session")
def cube_offline(cfg):
    return build_offline(shapes.cube(60.0), cfg)


@pytest.fixture(scope="session")
def lblock_offline(cfg):
    return build_offline(shapes.l_block(), cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.getreports(outcome):
            for key, value in getattr(rep, "user_properties", []):
                if key == "acceptance":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(lines), key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
