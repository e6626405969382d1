from __future__ import annotations

import numpy as np
import pytest

from qgfem.assembly import build_discretization
from qgfem.mesh import build_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture(scope="session")
def unit_disc():
    """8x8 discretization of the unit square."""
    return build_discretization(build_mesh(0.0, 1.0, 0.0, 1.0, 8, 8))


@pytest.fixture(scope="session")
def basin_disc():
    """Coarse anisotropic discretization of (0,1)x(-1,1)."""
    return build_discretization(build_mesh(0.0, 1.0, -1.0, 1.0, 6, 10))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
