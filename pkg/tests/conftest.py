from __future__ import annotations

import numpy as np
import pytest

from resumfem.fem import assemble, build_space, reduce_dirichlet


@pytest.fixture(scope="session")
def p1_h20():
    space = build_space(0.0, 1.0, 20, 1)
    full = assemble(space)
    return space, full, reduce_dirichlet(full, space)


def interior_x(space) -> np.ndarray:
    return space.node_coords[space.interior]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs that take more than a few seconds")


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
