"""Sparse direct solvers for the Newton systems.

The default orders the structured node grid by geometric nested dissection
and factorizes with SuperLU using static diagonal pivots.  The Jacobian is
nonsymmetric, but its symmetric part ``D/dt + nu A`` is positive definite
and dominates, so diagonal pivots are stable in practice; every solve is
checked against its residual and redone with partial pivoting (COLAMD) if
the check fails.  ``"banded"`` uses LAPACK's banded LU with partial pivoting.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lapack

from .errors import ConfigurationError, LinearSolveError

log = logging.getLogger(__name__)

SOLVERS = ("nested-dissection", "colamd", "banded")
_CHECK_RTOL = 1e-6


def nested_dissection_nodes(ni: int, nj: int, leaf: int = 16) -> np.ndarray:
    """Nested-dissection order of an ``ni`` by ``nj`` node grid (row-major ids)."""
    order: list[np.ndarray] = []

    def split(i0, i1, j0, j1):
        if (i1 - i0) * (j1 - j0) <= leaf:
            jj, ii = np.mgrid[j0:j1, i0:i1]
            order.append((jj * ni + ii).ravel())
            return
        if i1 - i0 >= j1 - j0:
            m = (i0 + i1) // 2
            split(i0, m, j0, j1)
            split(m + 1, i1, j0, j1)
            order.append(np.arange(j0, j1) * ni + m)
        else:
            m = (j0 + j1) // 2
            split(i0, i1, j0, m)
            split(i0, i1, m + 1, j1)
            order.append(m * ni + np.arange(i0, i1))

    split(0, ni, 0, nj)
    return np.concatenate(order) if order else np.zeros(0, dtype=int)


class DirectSolver:
    """Factorize-and-solve on a fixed CSR pattern.

    ``solve(matrix, rhs)`` takes a CSR matrix whose pattern equals the one
    given at construction.
    """

    def __init__(self, pattern, grid_shape: tuple[int, int] | None = None,
                 method: str = "nested-dissection", dofs_per_node: int = 4):
        if method not in SOLVERS:
            raise ConfigurationError(f"unknown linear solver {method!r}; choose from {SOLVERS}")
        self.method = method
        self.n = pattern.shape[0]
        self.fallbacks = 0
        if method == "nested-dissection":
            if grid_shape is None:
                raise ConfigurationError("nested dissection needs the interior node grid shape")
            nodes = nested_dissection_nodes(*grid_shape)
            perm = (dofs_per_node * nodes[:, None] + np.arange(dofs_per_node)).ravel()
            probe = pattern.matrix(np.arange(1, pattern.nnz + 1, dtype=float))
            permuted = probe[perm][:, perm].tocsc()
            permuted.sort_indices()
            self._perm = perm
            self._data_map = permuted.data.astype(np.int64) - 1
            self._csc_indices = permuted.indices
            self._csc_indptr = permuted.indptr
        elif method == "banded":
            coo = pattern.matrix(np.ones(pattern.nnz)).tocoo()
            self._band = int(np.abs(coo.row - coo.col).max()) if coo.nnz else 0
            self._rows = coo.row
            self._cols = coo.col

    def solve(self, matrix: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
        try:
            x = getattr(self, "_solve_" + self.method.replace("-", "_"))(matrix, rhs)
        except RuntimeError as exc:  # SuperLU: exactly singular pivot
            log.debug("primary factorization failed (%s); retrying with COLAMD", exc)
            x = None
        if x is None or not self._accurate(matrix, x, rhs):
            self.fallbacks += 1
            x = self._solve_colamd(matrix, rhs)
            if not np.all(np.isfinite(x)):
                raise LinearSolveError("sparse LU produced non-finite values (singular Jacobian)")
        return x

    def _accurate(self, matrix, x, rhs) -> bool:
        if not np.all(np.isfinite(x)):
            return False
        scale = np.linalg.norm(rhs)
        return np.linalg.norm(matrix @ x - rhs) <= _CHECK_RTOL * max(scale, 1e-300)

    def _solve_nested_dissection(self, matrix, rhs):
        csc = sp.csc_matrix(
            (matrix.data[self._data_map], self._csc_indices, self._csc_indptr),
            shape=matrix.shape,
        )
        lu = spla.splu(csc, permc_spec="NATURAL", diag_pivot_thresh=0.0,
                       options=dict(SymmetricMode=True))
        x = np.empty_like(rhs)
        x[self._perm] = lu.solve(rhs[self._perm])
        return x

    def _solve_colamd(self, matrix, rhs):
        try:
            lu = spla.splu(matrix.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise LinearSolveError(f"sparse LU failed: {exc}") from exc
        return lu.solve(rhs)

    def _solve_banded(self, matrix, rhs):
        bw = self._band
        coo = matrix.tocoo()
        ab = np.zeros((3 * bw + 1, self.n), order="F")
        ab[2 * bw + coo.row - coo.col, coo.col] = coo.data
        _, _, x, info = lapack.dgbsv(bw, bw, ab, rhs)
        if info != 0:
            raise LinearSolveError(f"banded LU failed (info={info})")
        return x
