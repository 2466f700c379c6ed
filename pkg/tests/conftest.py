import numpy as np
import pytest

from jumpgame.grid import SpatialGrid
from jumpgame.levy import build_quadrature
from jumpgame.model import build_problem
from jumpgame.solver import SchemeConfig

TWO_PI = 2 * np.pi


def setup(preset, lower, upper, dx, **overrides):
    """Problem, quadrature and grid for a preset with optional section overrides."""
    problem = build_problem(dict({"preset": preset}, **overrides))
    quad = build_quadrature(problem.levy)
    grid = SpatialGrid.uniform(lower, upper, dx)
    return problem, quad, grid


@pytest.fixture
def scheme():
    return SchemeConfig()


@pytest.fixture
def null_problem():
    return build_problem({"preset": "null"})


ACCEPTANCE_LINES = []


def record(criterion: int, ok: bool, detail: str):
    """Print and keep one acceptance line; the terminal summary repeats them in order."""
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append((criterion, line))
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
