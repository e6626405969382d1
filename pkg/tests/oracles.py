"""Independent reference computations used as test oracles.

Nothing here uses the package's Hermite tables: the bicubic basis is built
by solving the 16x16 interpolation system in the monomial basis x^a y^b
(a, b <= 3) on a physical cell, and integrals use separate Gauss rules.
"""

from __future__ import annotations

import numpy as np

CORNERS = ((0, 0), (1, 0), (0, 1), (1, 1))
DERIVS = ((0, 0), (1, 0), (0, 1), (1, 1))
MONOMIALS = [(a, b) for a in range(4) for b in range(4)]


def _dmono(a, k, x):
    """k-th derivative of x**a."""
    if k > a:
        return np.zeros_like(np.asarray(x, dtype=float))
    c = 1.0
    for j in range(k):
        c *= a - j
    return c * np.asarray(x, dtype=float) ** (a - k)


def hermite_basis_coeffs(hx: float, hy: float) -> np.ndarray:
    """Monomial coefficients (16 monomials, 16 functions) dual to the nodal DOFs."""
    rows = []
    for cx, cy in CORNERS:
        x, y = cx * hx, cy * hy
        for p, q in DERIVS:
            rows.append([_dmono(a, p, x) * _dmono(b, q, y) for a, b in MONOMIALS])
    V = np.array(rows, dtype=float)  # functional x monomial
    return np.linalg.solve(V, np.eye(16))  # V @ C = I


def eval_basis(C: np.ndarray, x, y, p: int = 0, q: int = 0) -> np.ndarray:
    """d^(p+q)/dx^p dy^q of all 16 functions at points, shape (n_points, 16)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    M = np.column_stack([_dmono(a, p, x) * _dmono(b, q, y) for a, b in MONOMIALS])
    return M @ C


def gauss(n: int, a: float, b: float):
    s, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * s + 0.5 * (a + b), 0.5 * (b - a) * w


def cell_rule(n: int, hx: float, hy: float):
    xs, wx = gauss(n, 0.0, hx)
    ys, wy = gauss(n, 0.0, hy)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X.ravel(), Y.ravel(), np.outer(wx, wy).ravel()


def local_matrices(hx: float, hy: float, n: int = 10) -> dict[str, np.ndarray]:
    """Brute-force local gradgrad, biharmonic and -(d/dx trial, test) matrices."""
    C = hermite_basis_coeffs(hx, hy)
    X, Y, W = cell_rule(n, hx, hy)
    v = eval_basis(C, X, Y)
    dx = eval_basis(C, X, Y, 1, 0)
    dy = eval_basis(C, X, Y, 0, 1)
    lap = eval_basis(C, X, Y, 2, 0) + eval_basis(C, X, Y, 0, 2)
    wcol = W[:, None]
    return {
        "gradgrad": (dx * wcol).T @ dx + (dy * wcol).T @ dy,
        "biharmonic": (lap * wcol).T @ lap,
        "b0": -(v * wcol).T @ dx,
        "mass": (v * wcol).T @ v,
    }


def cell_fields(local_coeffs: np.ndarray, hx: float, hy: float, n: int = 10):
    """Value, x/y derivatives and Laplacian of per-cell fields at an n x n rule.

    ``local_coeffs`` is (n_cells, 16); returns arrays (n_cells, n*n) and weights.
    """
    C = hermite_basis_coeffs(hx, hy)
    X, Y, W = cell_rule(n, hx, hy)
    out = {
        "val": local_coeffs @ eval_basis(C, X, Y).T,
        "dx": local_coeffs @ eval_basis(C, X, Y, 1, 0).T,
        "dy": local_coeffs @ eval_basis(C, X, Y, 0, 1).T,
        "lap": local_coeffs @ (eval_basis(C, X, Y, 2, 0) + eval_basis(C, X, Y, 0, 2)).T,
    }
    return out, W, X, Y


def trilinear(disc, psi, v, w, n: int = 10) -> float:
    """b(psi; v, w) = (lap psi, v_y w_x - v_x w_y) by per-cell brute-force quadrature."""
    hx, hy = disc.mesh.hx, disc.mesh.hy
    fp, W, _, _ = cell_fields(disc.dofmap.gather(psi), hx, hy, n)
    fv, _, _, _ = cell_fields(disc.dofmap.gather(v), hx, hy, n)
    fw, _, _, _ = cell_fields(disc.dofmap.gather(w), hx, hy, n)
    integrand = fp["lap"] * (fv["dy"] * fw["dx"] - fv["dx"] * fw["dy"])
    return float(np.sum(integrand * W[None, :]))


def composite_1d(f, a: float, b: float, panels: int = 400, n: int = 8) -> float:
    """High-resolution composite Gauss integral of a 1D function."""
    edges = np.linspace(a, b, panels + 1)
    s, w = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        x = 0.5 * (hi - lo) * s + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.dot(w, f(x))
    return total


def fd_derivative(f, x, direction, eps):
    """Central difference of a vector function along ``direction``."""
    return (f(x + eps * direction) - f(x - eps * direction)) / (2 * eps)
