from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgfem.assembly import build_discretization
from qgfem.c1_element import (
    N_LOCAL,
    build_reference_basis,
    gauss_legendre_rule,
    interpolate_cell,
    physical_dof_scaling,
    physical_tables,
    reference_tables,
)
from qgfem.diagnostics import eoc, error_norms
from qgfem.mesh import CORNER_OFFSETS, build_mesh
from qgfem.problems import SIN2_BUMP

FUNCTIONALS = ("val", "dxi", "deta", "dxieta")
CORNERS = np.array(CORNER_OFFSETS, dtype=float)


def dof_functional_matrix(tabs_at_corners):
    """M[m, k] = functional m applied to basis function k (m = 4*corner + d)."""
    M = np.empty((16, 16))
    for c in range(4):
        for d, name in enumerate(FUNCTIONALS):
            M[4 * c + d] = tabs_at_corners[name][c]
    return M


def test_kronecker_delta():
    tabs = reference_tables(CORNERS[:, 0], CORNERS[:, 1])
    np.testing.assert_allclose(dof_functional_matrix(tabs), np.eye(16), atol=1e-13)


def test_kronecker_delta_physical_cell():
    hx, hy = 0.5, 0.25
    t = physical_tables(reference_tables(CORNERS[:, 0], CORNERS[:, 1]), hx, hy)
    M = np.empty((16, 16))
    for c in range(4):
        M[4 * c: 4 * c + 4] = (t.val[c], t.dx[c], t.dy[c], t.dxy[c])
    np.testing.assert_allclose(M, np.eye(16), atol=1e-13)


def test_partition_of_unity_at_centre():
    tabs = reference_tables(np.array([0.5]), np.array([0.5]))
    assert tabs["val"][0, [0, 4, 8, 12]].sum() == pytest.approx(1.0, abs=1e-15)


def test_xi3_eta2_example():
    coef = interpolate_cell(lambda x, y: x**3 * y**2, lambda x, y: 3 * x**2 * y**2,
                            lambda x, y: 2 * x**3 * y, lambda x, y: 6 * x**2 * y,
                            0.0, 0.0, 1.0, 1.0)
    val = reference_tables(np.array([0.3]), np.array([0.7]))["val"][0] @ coef
    assert abs(val - 0.013230) <= 1e-13


def test_unit_scaling_is_identity():
    np.testing.assert_array_equal(physical_dof_scaling(1.0, 1.0), np.ones(N_LOCAL))


def test_scaling_reproduces_x2y2_on_physical_cell():
    hx, hy = 0.5, 0.25
    coef = interpolate_cell(lambda x, y: x**2 * y**2, lambda x, y: 2 * x * y**2,
                            lambda x, y: 2 * x**2 * y, lambda x, y: 4 * x * y, 0.0, 0.0, hx, hy)
    t = physical_tables(reference_tables(np.array([0.5]), np.array([0.5])), hx, hy)
    assert abs(t.val[0] @ coef - (0.25 * 0.125) ** 2) <= 1e-13


def _bicubic(c):
    """Callables (f, fx, fy, fxy, fxx, fyy) of sum c[a,b] x^a y^b."""
    P = np.polynomial.polynomial

    def ev(dx_, dy_):
        cc = c
        if dx_:
            cc = P.polyder(cc, dx_, axis=0)
        if dy_:
            cc = P.polyder(cc, dy_, axis=1)
        return lambda x, y: P.polyval2d(x, y, cc)

    return ev(0, 0), ev(1, 0), ev(0, 1), ev(1, 1), ev(2, 0), ev(0, 2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=16, max_size=16),
       st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(-1, 1), st.floats(-1, 1))
def test_bicubic_reproduction(cs, hx, hy, x0, y0):
    c = np.array(cs).reshape(4, 4)
    f, fx, fy, fxy, fxx, fyy = _bicubic(c)
    coef = interpolate_cell(f, fx, fy, fxy, x0, y0, hx, hy)
    rng = np.random.default_rng(0)
    xi, eta = rng.random(20), rng.random(20)
    t = physical_tables(reference_tables(xi, eta), hx, hy)
    X, Y = x0 + hx * xi, y0 + hy * eta
    for tab, g in ((t.val, f), (t.dx, fx), (t.dy, fy), (t.dxy, fxy), (t.dxx, fxx), (t.dyy, fyy)):
        exact = g(X, Y)
        scale = max(1.0, np.abs(exact).max())
        np.testing.assert_allclose(tab @ coef, exact, rtol=0, atol=1e-13 * scale * 100)


def test_bicubic_reproduction_reference_tight():
    """Reference-cell reproduction at the 1e-13 relative level."""
    rng = np.random.default_rng(3)
    c = rng.standard_normal((4, 4))
    f, fx, fy, fxy, *_ = _bicubic(c)
    coef = interpolate_cell(f, fx, fy, fxy, 0.0, 0.0, 1.0, 1.0)
    xi, eta = rng.random(50), rng.random(50)
    got = reference_tables(xi, eta)["val"] @ coef
    exact = f(xi, eta)
    assert np.max(np.abs(got - exact)) <= 1e-13 * np.max(np.abs(exact))


def test_quadrature_weights_and_exactness():
    rule = gauss_legendre_rule(5)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    xi, eta = rule.points.T
    for a in range(10):
        for b in range(10):
            got = np.dot(rule.weights, xi**a * eta**b)
            exact = 1.0 / ((a + 1) * (b + 1))
            assert abs(got - exact) <= 1e-13 * exact
    # degree 10 is not integrated exactly
    assert abs(np.dot(rule.weights, xi**10) - 1 / 11) > 1e-10


def test_reference_basis_tables_match_direct_evaluation():
    basis = build_reference_basis()
    direct = reference_tables(basis.rule.points[:, 0], basis.rule.points[:, 1])
    for k, v in direct.items():
        np.testing.assert_array_equal(getattr(basis, k), v)
    with pytest.raises(ValueError):
        basis.val[0, 0] = 1.0


def test_hessian_tables_consistent_with_gradients():
    rng = np.random.default_rng(7)
    xi, eta = 0.1 + 0.8 * rng.random(25), 0.1 + 0.8 * rng.random(25)
    eps = 1e-6
    t = reference_tables(xi, eta)
    px, mx = reference_tables(xi + eps, eta), reference_tables(xi - eps, eta)
    py, my = reference_tables(xi, eta + eps), reference_tables(xi, eta - eps)
    pairs = (
        ((px["dxi"] - mx["dxi"]) / (2 * eps), t["dxixi"]),
        ((py["dxi"] - my["dxi"]) / (2 * eps), t["dxieta"]),
        ((px["deta"] - mx["deta"]) / (2 * eps), t["dxieta"]),
        ((py["deta"] - my["deta"]) / (2 * eps), t["detaeta"]),
    )
    for fd, table in pairs:
        scale = np.abs(table).max()
        assert np.max(np.abs(fd - table)) <= 1e-6 * scale


def test_global_bicubic_broken_h2_error_on_3x3_mesh():
    """Per-cell interpolation of a global bicubic is exact: broken Laplacian error ~ 0."""
    rng = np.random.default_rng(11)
    f, fx, fy, fxy, fxx, fyy = _bicubic(rng.standard_normal((4, 4)))
    mesh = build_mesh(0.0, 1.5, -0.5, 0.7, 3, 3)
    s, w = np.polynomial.legendre.leggauss(6)
    s, w = 0.5 * (s + 1), 0.5 * w
    XI, ETA = np.meshgrid(s, s, indexing="ij")
    W = np.outer(w, w).ravel() * mesh.cell_area
    t = physical_tables(reference_tables(XI.ravel(), ETA.ravel()), mesh.hx, mesh.hy)
    err2 = 0.0
    for x0, y0 in mesh.cell_origins:
        coef = interpolate_cell(f, fx, fy, fxy, x0, y0, mesh.hx, mesh.hy)
        X, Y = x0 + mesh.hx * XI.ravel(), y0 + mesh.hy * ETA.ravel()
        e = t.lap @ coef - (fxx(X, Y) + fyy(X, Y))
        err2 += float(np.dot(W, e**2))
    assert np.sqrt(err2) <= 1e-12


@pytest.fixture(scope="module")
def interpolation_errors():
    rows = []
    for n in (4, 8, 16, 32):
        disc = build_discretization(build_mesh(0, 1, 0, 1, n, n))
        c = disc.interpolate(SIN2_BUMP.value, SIN2_BUMP.dx, SIN2_BUMP.dy, SIN2_BUMP.dxy)
        rows.append(error_norms(c, SIN2_BUMP, disc).as_tuple())
    return rows


def test_interpolation_orders(interpolation_errors):
    for (e0, e1, e2) in eoc(interpolation_errors):
        assert abs(e0 - 4) <= 0.25 and abs(e1 - 3) <= 0.25 and abs(e2 - 2) <= 0.25
