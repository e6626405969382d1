from __future__ import annotations

import numpy as np
import pytest

from qgfem.assembly import jacobian
from qgfem.errors import ConfigurationError, LinearSolveError
from qgfem.linsolve import SOLVERS, DirectSolver, nested_dissection_nodes
from qgfem.mesh import build_mesh
from qgfem.output import fmt, read_keyvalue, read_structured_points, write_snapshot


def _solver(disc, method):
    m = disc.mesh
    return DirectSolver(disc.pattern, (m.nx - 1, m.ny - 1), method)


def test_nested_dissection_is_a_permutation():
    for ni, nj in ((1, 1), (5, 3), (31, 63), (40, 17)):
        order = nested_dissection_nodes(ni, nj)
        assert np.array_equal(np.sort(order), np.arange(ni * nj))


@pytest.mark.parametrize("method", SOLVERS)
def test_solvers_on_newton_matrix(method, basin_disc, rng):
    d = basin_disc
    J = jacobian(d, rng.standard_normal(d.n_free), 1e-3, 0.01, 100.0)
    b = rng.standard_normal(d.n_free)
    s = _solver(d, method)
    x = s.solve(J, b)
    assert np.linalg.norm(J @ x - b) <= 1e-10 * np.linalg.norm(b)
    assert s.fallbacks == 0


def test_zero_diagonal_falls_back_to_pivoting(basin_disc, rng):
    d = basin_disc
    B = d.B0  # skew: zero diagonal defeats static pivoting
    b = rng.standard_normal(d.n_free)
    s = _solver(d, "nested-dissection")
    x = s.solve(B, b)
    assert s.fallbacks == 1
    assert np.linalg.norm(B @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_singular_matrix_raises(basin_disc):
    d = basin_disc
    Z = d.pattern.matrix(np.zeros(d.pattern.nnz))
    with pytest.raises(LinearSolveError):
        _solver(d, "nested-dissection").solve(Z, np.ones(d.n_free))


def test_unknown_solver(basin_disc):
    with pytest.raises(ConfigurationError):
        DirectSolver(basin_disc.pattern, (1, 1), "cg")


def test_fmt_round_trips_floats(rng):
    for v in rng.standard_normal(200) * 10.0 ** rng.integers(-20, 20, 200):
        assert float(fmt(v)) == v
    assert fmt(True) == "true" and fmt(3) == "3" and fmt(None) == ""


def test_read_keyvalue(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# header\n t-end = 0.5  # trailing\n\nnu=1e-2\n")
    assert read_keyvalue(p) == {"t_end": "0.5", "nu": "1e-2"}


def test_snapshot_files(tmp_path):
    mesh = build_mesh(0, 1, -1, 1, 2, 3)
    nodal = np.arange(mesh.n_nodes * 4, dtype=float).reshape(-1, 4) / 7
    vtk, csv_path = write_snapshot(tmp_path / "snap_t=0.25", mesh, nodal, 0.25)
    assert vtk.name == "snap_t=0.25.vtk" and csv_path.name == "snap_t=0.25.csv"
    header, values = read_structured_points(vtk)
    assert header["DIMENSIONS"] == ["3", "4", "1"] and header["SPACING"][:2] == ["0.5", fmt(2 / 3)]
    np.testing.assert_array_equal(values, nodal[:, 0])
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "x,y,psi,psi_x,psi_y" and len(lines) == mesh.n_nodes + 1
