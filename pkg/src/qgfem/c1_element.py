"""Bogner-Fox-Schmit bicubic Hermite element on the reference square [0, 1]^2.

The 16 local functions are tensor products of the cubic Hermite pairs

    H0(s) = 1 - 3s^2 + 2s^3    (value at s=0)
    H1(s) = s - 2s^2 + s^3     (slope at s=0)
    H2(s) = 3s^2 - 2s^3        (value at s=1)
    H3(s) = -s^2 + s^3         (slope at s=1)

Local function ``k = 4 * corner + d`` is dual to DOF ``d`` (value, d/dxi,
d/deta, d2/dxi deta) at ``corner`` (see ``mesh.CORNER_OFFSETS``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import CORNER_OFFSETS, DOF_ORDERS

N_LOCAL = 16
_EXPONENTS = np.array([(a, b) for a, b in CORNER_OFFSETS for _ in DOF_ORDERS])
_DERIVS = np.array([pq for _ in CORNER_OFFSETS for pq in DOF_ORDERS])
# 1D Hermite index per local function in each direction: 2 * endpoint + derivative
_IX = 2 * _EXPONENTS[:, 0] + _DERIVS[:, 0]
_IY = 2 * _EXPONENTS[:, 1] + _DERIVS[:, 1]

# monomial coefficients (1, s, s^2, s^3) of H0..H3
_HERMITE_COEFFS = np.array(
    [
        [1.0, 0.0, -3.0, 2.0],
        [0.0, 1.0, -2.0, 1.0],
        [0.0, 0.0, 3.0, -2.0],
        [0.0, 0.0, -1.0, 1.0],
    ]
)


def hermite_1d(s, order: int = 0) -> np.ndarray:
    """Derivative ``order`` of H0..H3 at points ``s``; shape (4, len(s))."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    coeffs = _HERMITE_COEFFS
    for _ in range(order):
        coeffs = coeffs[:, 1:] * np.arange(1, coeffs.shape[1])
    if coeffs.shape[1] == 0:
        return np.zeros((4, s.size))
    return coeffs @ np.vstack([s**p for p in range(coeffs.shape[1])])


def reference_tables(xi, eta) -> dict[str, np.ndarray]:
    """Values and derivatives of the 16 reference functions at points (xi, eta).

    Returns a dict of (n_points, 16) arrays keyed by ``val``, ``dxi``,
    ``deta``, ``dxixi``, ``dxieta``, ``detaeta``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    hx = [hermite_1d(xi, k)[_IX].T for k in range(3)]
    hy = [hermite_1d(eta, k)[_IY].T for k in range(3)]
    return {
        "val": hx[0] * hy[0],
        "dxi": hx[1] * hy[0],
        "deta": hx[0] * hy[1],
        "dxixi": hx[2] * hy[0],
        "dxieta": hx[1] * hy[1],
        "detaeta": hx[0] * hy[2],
    }


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule on [0, 1]^2; weights sum to 1."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.weights)


def gauss_legendre_rule(n: int = 5) -> QuadratureRule:
    """``n``-point-per-direction rule, exact for degree ``2n - 1`` per direction."""
    s, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    X, Y = np.meshgrid(s, s, indexing="ij")
    W = np.outer(w, w)
    points = np.column_stack([X.ravel(), Y.ravel()])
    weights = W.ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights)


@dataclass(frozen=True)
class ReferenceBasis:
    rule: QuadratureRule
    val: np.ndarray
    dxi: np.ndarray
    deta: np.ndarray
    dxixi: np.ndarray
    dxieta: np.ndarray
    detaeta: np.ndarray


def build_reference_basis(rule: QuadratureRule | None = None) -> ReferenceBasis:
    rule = rule or gauss_legendre_rule(5)
    tabs = reference_tables(rule.points[:, 0], rule.points[:, 1])
    for arr in tabs.values():
        arr.setflags(write=False)
    return ReferenceBasis(rule=rule, **tabs)


def physical_dof_scaling(hx: float, hy: float) -> np.ndarray:
    """Factors mapping physical nodal DOFs to reference-element coefficients.

    A physical derivative DOF d^(p+q)/dx^p dy^q equals the reference
    derivative divided by hx^p hy^q, so the reference coefficient is the
    physical DOF times hx^p hy^q.
    """
    return hx ** _DERIVS[:, 0] * hy ** _DERIVS[:, 1]


@dataclass(frozen=True)
class CellTables:
    """Physical basis tables on one (uniform) cell size.

    Arrays are (n_quad, 16); ``wdet`` holds quadrature weights times the cell
    area, so ``sum(wdet * f)`` integrates ``f`` over a cell.
    """

    val: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray
    dxy: np.ndarray
    dyy: np.ndarray
    wdet: np.ndarray
    points: np.ndarray

    @property
    def lap(self) -> np.ndarray:
        return self.dxx + self.dyy


def physical_tables(basis_or_tables, hx: float, hy: float, weights=None, points=None) -> CellTables:
    """Scale reference tables to a cell of size ``hx`` by ``hy``."""
    if isinstance(basis_or_tables, ReferenceBasis):
        b = basis_or_tables
        tabs = dict(val=b.val, dxi=b.dxi, deta=b.deta, dxixi=b.dxixi,
                    dxieta=b.dxieta, detaeta=b.detaeta)
        weights = b.rule.weights
        points = b.rule.points
    else:
        tabs = basis_or_tables
    s = physical_dof_scaling(hx, hy)
    return CellTables(
        val=tabs["val"] * s,
        dx=tabs["dxi"] * s / hx,
        dy=tabs["deta"] * s / hy,
        dxx=tabs["dxixi"] * s / hx**2,
        dxy=tabs["dxieta"] * s / (hx * hy),
        dyy=tabs["detaeta"] * s / hy**2,
        wdet=None if weights is None else np.asarray(weights) * hx * hy,
        points=points,
    )


def interpolate_cell(f, fx, fy, fxy, x0: float, y0: float, hx: float, hy: float) -> np.ndarray:
    """Local physical DOF vector (16,) of the Hermite interpolant on one cell."""
    out = np.empty(N_LOCAL)
    for c, (a, b) in enumerate(CORNER_OFFSETS):
        x, y = x0 + a * hx, y0 + b * hy
        out[4 * c : 4 * c + 4] = (f(x, y), fx(x, y), fy(x, y), fxy(x, y))
    return out
