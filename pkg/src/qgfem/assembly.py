"""Global operators of the clamped stream-function weak form.

With coefficient vectors over the free DOFs and test functions chi_i:

    D[i, j]  = (grad phi_j, grad chi_i)
    A[i, j]  = (lap phi_j, lap chi_i)
    B0[i, j] = -(d/dx phi_j, chi_i)
    N(psi)_i = (lap psi, psi_y d/dx chi_i - psi_x d/dy chi_i)

and one backward Euler step solves

    R(Psi) = D (Psi - Psi_prev) / dt + nu A Psi + N(Psi) + mu B0 Psi - load = 0

where ``load[i] = mu (F, chi_i)``.  All matrices share one CSR pattern, the
full element connectivity of the free DOFs, so linear combinations are plain
sums of ``.data`` arrays.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .c1_element import (
    N_LOCAL,
    CellTables,
    ReferenceBasis,
    build_reference_basis,
    physical_tables,
    reference_tables,
)
from .errors import AssemblyError, DivergedStateError
from .mesh import DofMap, RectMesh, build_dofmap


def _coeffs(x) -> np.ndarray:
    return np.asarray(getattr(x, "coefficients", x), dtype=float)


class SparsityPattern:
    """CSR pattern of the free-DOF element connectivity.

    Local entry ``(cell, i, j)`` of a per-cell 16x16 matrix lands in
    ``data[slot]``; the map is computed once and reused for every assembly.
    Summation uses ``np.bincount`` over cells in index order, so results do
    not depend on how local matrices were computed.
    """

    def __init__(self, dofmap: DofMap):
        n = dofmap.n_free
        cd = dofmap.cell_dofs
        rows = np.broadcast_to(cd[:, :, None], (len(cd), N_LOCAL, N_LOCAL)).ravel()
        cols = np.broadcast_to(cd[:, None, :], (len(cd), N_LOCAL, N_LOCAL)).ravel()
        keep = (rows >= 0) & (cols >= 0)
        self.entry_index = np.flatnonzero(keep)
        self.local_index = self.entry_index % (N_LOCAL * N_LOCAL)
        keys = rows[keep] * n + cols[keep]
        uniq, self.slot = np.unique(keys, return_inverse=True)
        self.indices = (uniq % n).astype(np.int32)
        self.indptr = np.searchsorted(uniq // n, np.arange(n + 1)).astype(np.int32)
        self.shape = (n, n)
        self.nnz = len(uniq)

        flat = cd.ravel()
        self.vec_entry = np.flatnonzero(flat >= 0)
        self.vec_dof = flat[self.vec_entry]
        self.n_free = n

    def matrix_data(self, local: np.ndarray) -> np.ndarray:
        """Sum local matrices, one shared (16, 16) or per-cell (n_cells, 16, 16)."""
        if local.ndim == 2:
            vals = local.ravel()[self.local_index]
        else:
            vals = local.reshape(-1)[self.entry_index]
        return np.bincount(self.slot, weights=vals, minlength=self.nnz)

    def matrix(self, data: np.ndarray) -> sp.csr_matrix:
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)

    def vector(self, local: np.ndarray) -> np.ndarray:
        """Sum per-cell local vectors (n_cells, 16) into a free-DOF vector."""
        vals = local.reshape(-1)[self.vec_entry]
        return np.bincount(self.vec_dof, weights=vals, minlength=self.n_free)


@dataclass
class Discretization:
    """Mesh, DOF map, basis tables, and the constant operators D, A, B0."""

    mesh: RectMesh
    dofmap: DofMap
    basis: ReferenceBasis
    threads: int = 1
    tables: CellTables = field(init=False, repr=False)
    pattern: SparsityPattern = field(init=False, repr=False)

    def __post_init__(self):
        self.tables = physical_tables(self.basis, self.mesh.hx, self.mesh.hy)
        self.pattern = SparsityPattern(self.dofmap)

    @property
    def n_free(self) -> int:
        return self.dofmap.n_free

    @cached_property
    def D(self) -> sp.csr_matrix:
        return assemble_gradgrad(self.mesh, self.dofmap, self.basis, self.pattern)

    @cached_property
    def A(self) -> sp.csr_matrix:
        return assemble_biharmonic(self.mesh, self.dofmap, self.basis, self.pattern)

    @cached_property
    def B0(self) -> sp.csr_matrix:
        return assemble_b0(self.mesh, self.dofmap, self.basis, self.pattern)

    @cached_property
    def quad_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical quadrature point coordinates, each (n_cells, n_quad)."""
        org = self.mesh.cell_origins
        pts = self.basis.rule.points
        X = org[:, :1] + self.mesh.hx * pts[None, :, 0]
        Y = org[:, 1:] + self.mesh.hy * pts[None, :, 1]
        return X, Y

    def linear_data(self, dt: float, nu: float, mu: float) -> np.ndarray:
        return self.D.data / dt + nu * self.A.data + mu * self.B0.data

    def at_quadrature(self, coeffs, *which: str) -> list[np.ndarray]:
        """Fields of a coefficient vector at quadrature points, (n_cells, n_quad) each."""
        loc = self.dofmap.gather(_coeffs(coeffs))
        return [loc @ getattr(self.tables, w).T for w in which]

    def interpolate(self, f, fx, fy, fxy) -> np.ndarray:
        """Free-DOF coefficients of the Hermite interpolant of a smooth field."""
        xy = self.mesh.node_coords
        nodal = np.column_stack([g(xy[:, 0], xy[:, 1]) * np.ones(len(xy)) for g in (f, fx, fy, fxy)])
        out = np.zeros(self.n_free)
        free = self.dofmap.node_dofs >= 0
        out[self.dofmap.node_dofs[free]] = nodal[free]
        return out

    def evaluate(self, coeffs, x, y) -> dict[str, np.ndarray]:
        """Reconstruct value, gradient and second derivatives at physical points."""
        x = np.asarray(x, dtype=float)
        cell, xi, eta = self.mesh.locate(x, y)
        tabs = physical_tables(reference_tables(xi.ravel(), eta.ravel()), self.mesh.hx, self.mesh.hy)
        loc = self.dofmap.gather(_coeffs(coeffs))[cell.ravel()]
        out = {}
        for name in ("val", "dx", "dy", "dxx", "dxy", "dyy"):
            out[name] = np.einsum("pk,pk->p", loc, getattr(tabs, name)).reshape(x.shape)
        return out

    def map_cells(self, fn, *arrays):
        """Apply ``fn`` to contiguous cell blocks, concatenating in cell order."""
        if self.threads <= 1:
            return fn(*arrays)
        bounds = np.linspace(0, self.mesh.n_cells, self.threads + 1).astype(int)
        blocks = [[a[lo:hi] for a in arrays] for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(self.threads) as pool:
            parts = list(pool.map(lambda blk: fn(*blk), blocks))
        return np.concatenate(parts, axis=0)


def build_discretization(mesh: RectMesh, quad_points: int = 5, threads: int = 1) -> Discretization:
    from .c1_element import gauss_legendre_rule

    basis = build_reference_basis(gauss_legendre_rule(quad_points))
    return Discretization(mesh, build_dofmap(mesh), basis, threads=threads)


def _tables(mesh, basis):
    return physical_tables(basis, mesh.hx, mesh.hy)


def local_gradgrad(tables: CellTables) -> np.ndarray:
    w = tables.wdet[:, None]
    return (tables.dx * w).T @ tables.dx + (tables.dy * w).T @ tables.dy


def local_biharmonic(tables: CellTables) -> np.ndarray:
    lap = tables.lap
    return (lap * tables.wdet[:, None]).T @ lap


def local_b0(tables: CellTables) -> np.ndarray:
    """Row = test function, column = trial function of -(d/dx trial, test)."""
    return -(tables.val * tables.wdet[:, None]).T @ tables.dx


def _assemble_constant(local, mesh, dofmap, pattern):
    pattern = pattern or SparsityPattern(dofmap)
    return pattern.matrix(pattern.matrix_data(local))


def assemble_gradgrad(mesh, dofmap, basis, pattern=None) -> sp.csr_matrix:
    return _assemble_constant(local_gradgrad(_tables(mesh, basis)), mesh, dofmap, pattern)


def assemble_biharmonic(mesh, dofmap, basis, pattern=None) -> sp.csr_matrix:
    return _assemble_constant(local_biharmonic(_tables(mesh, basis)), mesh, dofmap, pattern)


def assemble_b0(mesh, dofmap, basis, pattern=None) -> sp.csr_matrix:
    # reduced form -(v_x, w); equals the skew half-difference on the clamped space
    return _assemble_constant(local_b0(_tables(mesh, basis)), mesh, dofmap, pattern)


def assemble_load(disc: Discretization, f, t: float = 0.0, mu: float = 1.0) -> np.ndarray:
    """``mu * (F(., t), chi_i)`` for a pointwise field ``f(x, y, t)``."""
    if f is None:
        return np.zeros(disc.n_free)
    X, Y = disc.quad_points
    fq = np.broadcast_to(np.asarray(f(X, Y, t), dtype=float), X.shape)
    bad = ~np.isfinite(fq)
    if bad.any():
        c, q = np.argwhere(bad)[0]
        raise AssemblyError(
            f"forcing is not finite at quadrature point ({X[c, q]:.6g}, {Y[c, q]:.6g}), t={t}"
        )
    T = disc.tables
    local = (fq * T.wdet) @ T.val
    return mu * disc.pattern.vector(local)


def apply_trilinear(psi, v, disc: Discretization) -> np.ndarray:
    """Vector ``r`` with ``r[i] = b(psi; v, chi_i) = (lap psi, v_y d/dx chi_i - v_x d/dy chi_i)``."""
    T = disc.tables
    (lap,) = disc.at_quadrature(psi, "lap")
    vx, vy = disc.at_quadrature(v, "dx", "dy")
    wl = lap * T.wdet
    local = (wl * vy) @ T.dx - (wl * vx) @ T.dy
    return disc.pattern.vector(local)


def residual(disc: Discretization, prev, cur, dt: float, nu: float, mu: float, load) -> np.ndarray:
    """Backward Euler residual of one step; ``load`` already carries the factor mu."""
    p, c = _coeffs(prev), _coeffs(cur)
    with np.errstate(invalid="ignore", over="ignore"):
        r = (
            disc.D @ (c - p) / dt
            + nu * (disc.A @ c)
            + apply_trilinear(c, c, disc)
            + mu * (disc.B0 @ c)
            - load
        )
    if not np.all(np.isfinite(r)):
        raise DivergedStateError("non-finite entries in the step residual")
    return r


@dataclass(frozen=True)
class _TrilinearTables:
    """Products of basis tables contracted in the Newton linearization, (n_quad, 256)."""

    dx_lap: np.ndarray
    dy_lap: np.ndarray
    skew: np.ndarray


def _trilinear_tables(disc: Discretization) -> _TrilinearTables:
    cache = disc.__dict__.get("_tri_tables")
    if cache is None:
        T = disc.tables
        w = T.wdet[:, None, None]
        dx, dy, lap = T.dx, T.dy, T.lap
        dx_lap = w * dx[:, :, None] * lap[:, None, :]
        dy_lap = w * dy[:, :, None] * lap[:, None, :]
        # (row i test, column j trial): d/dx chi_i d/dy phi_j - d/dy chi_i d/dx phi_j
        skew = w * (dx[:, :, None] * dy[:, None, :] - dy[:, :, None] * dx[:, None, :])
        n = N_LOCAL * N_LOCAL
        cache = _TrilinearTables(
            dx_lap.reshape(-1, n), dy_lap.reshape(-1, n), skew.reshape(-1, n)
        )
        disc.__dict__["_tri_tables"] = cache
    return cache


def trilinear_jacobian_local(disc: Discretization, cur) -> np.ndarray:
    """Per-cell matrices of delta -> b(delta; Psi, chi) + b(Psi; delta, chi)."""
    tt = _trilinear_tables(disc)
    px, py, lap = disc.at_quadrature(cur, "dx", "dy", "lap")

    def block(px, py, lap):
        return py @ tt.dx_lap - px @ tt.dy_lap + lap @ tt.skew

    local = disc.map_cells(block, px, py, lap)
    return local.reshape(-1, N_LOCAL, N_LOCAL)


def jacobian(disc: Discretization, cur, dt: float, nu: float, mu: float) -> sp.csr_matrix:
    """Newton matrix ``D/dt + nu A + mu B0 + d/dPsi b(Psi; Psi, .)``."""
    data = disc.linear_data(dt, nu, mu)
    c = _coeffs(cur)
    if np.any(c):
        data = data + disc.pattern.matrix_data(trilinear_jacobian_local(disc, c))
    return disc.pattern.matrix(data)
