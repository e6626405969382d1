"""Uniform rectangular partitions and the Hermite degree-of-freedom map.

Nodes are numbered row by row, ``node = j * (nx + 1) + i``.  Each node carries
four Hermite DOFs in the order (value, d/dx, d/dy, d2/dxdy).  Clamped boundary
conditions eliminate all four DOFs on boundary nodes, so the free DOFs are
exactly those of interior nodes, numbered node-major.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

BOUNDARY = -1
DOFS_PER_NODE = 4
# (x-derivative order, y-derivative order) of each nodal DOF
DOF_ORDERS = ((0, 0), (1, 0), (0, 1), (1, 1))
# cell corner c sits at offset (c % 2, c // 2) from the lower-left node
CORNER_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class RectMesh:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / self.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def node_index(self, i, j):
        return np.asarray(j) * (self.nx + 1) + np.asarray(i)

    @cached_property
    def node_coords(self) -> np.ndarray:
        """(n_nodes, 2) array of node coordinates."""
        xs = self.x0 + self.hx * np.arange(self.nx + 1)
        ys = self.y0 + self.hy * np.arange(self.ny + 1)
        X, Y = np.meshgrid(xs, ys)  # row j, column i
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        """Boolean mask over nodes lying on the basin boundary."""
        i = np.tile(np.arange(self.nx + 1), self.ny + 1)
        j = np.repeat(np.arange(self.ny + 1), self.nx + 1)
        return (i == 0) | (i == self.nx) | (j == 0) | (j == self.ny)

    @cached_property
    def cell_origins(self) -> np.ndarray:
        """(n_cells, 2) lower-left corner of each cell, cell = cj * nx + ci."""
        ci = np.tile(np.arange(self.nx), self.ny)
        cj = np.repeat(np.arange(self.ny), self.nx)
        return np.column_stack([self.x0 + ci * self.hx, self.y0 + cj * self.hy])

    @cached_property
    def cell_nodes(self) -> np.ndarray:
        """(n_cells, 4) node indices of each cell in corner order."""
        ci = np.tile(np.arange(self.nx), self.ny)
        cj = np.repeat(np.arange(self.ny), self.nx)
        return np.column_stack(
            [self.node_index(ci + a, cj + b) for a, b in CORNER_OFFSETS]
        )

    def locate(self, x, y):
        """Cell index and reference coordinates in [0, 1]^2 for physical points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sx = (x - self.x0) / self.hx
        sy = (y - self.y0) / self.hy
        ci = np.clip(np.floor(sx).astype(int), 0, self.nx - 1)
        cj = np.clip(np.floor(sy).astype(int), 0, self.ny - 1)
        return cj * self.nx + ci, sx - ci, sy - cj


def build_mesh(x0: float, x1: float, y0: float, y1: float, nx: int, ny: int) -> RectMesh:
    """Uniform ``nx`` by ``ny`` partition of ``[x0, x1] x [y0, y1]``."""
    if not (np.isfinite([x0, x1, y0, y1]).all() and x1 > x0 and y1 > y0):
        raise ConfigurationError(
            f"degenerate basin extents ({x0}, {x1}) x ({y0}, {y1})"
        )
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise ConfigurationError(
            f"need at least 2 cells per direction for interior DOFs, got nx={nx}, ny={ny}"
        )
    return RectMesh(float(x0), float(x1), float(y0), float(y1), int(nx), int(ny))


@dataclass(frozen=True)
class DofMap:
    """Global numbering of free Hermite DOFs.

    ``node_dofs[node, d]`` is the free index of DOF ``d`` at ``node``, or
    ``BOUNDARY`` when the DOF is eliminated by the clamped condition.
    """

    mesh: RectMesh
    node_dofs: np.ndarray
    n_free: int
    cell_dofs: np.ndarray = field(repr=False)

    @property
    def n_total(self) -> int:
        return DOFS_PER_NODE * self.mesh.n_nodes

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.node_dofs == BOUNDARY))

    def gather(self, coeffs: np.ndarray) -> np.ndarray:
        """Per-cell local coefficient arrays (n_cells, 16); eliminated DOFs are 0."""
        ext = np.append(np.asarray(coeffs, dtype=float), 0.0)
        idx = np.where(self.cell_dofs == BOUNDARY, self.n_free, self.cell_dofs)
        return ext[idx]

    def nodal(self, coeffs: np.ndarray) -> np.ndarray:
        """(n_nodes, 4) nodal Hermite data with zeros on the boundary."""
        ext = np.append(np.asarray(coeffs, dtype=float), 0.0)
        idx = np.where(self.node_dofs == BOUNDARY, self.n_free, self.node_dofs)
        return ext[idx]


def build_dofmap(mesh: RectMesh) -> DofMap:
    interior = ~mesh.boundary_nodes
    rank = np.cumsum(interior) - 1
    node_dofs = np.full((mesh.n_nodes, DOFS_PER_NODE), BOUNDARY, dtype=np.int64)
    node_dofs[interior] = (
        DOFS_PER_NODE * rank[interior, None] + np.arange(DOFS_PER_NODE)[None, :]
    )
    n_free = DOFS_PER_NODE * int(np.count_nonzero(interior))
    # local DOF k = 4 * corner + d
    cell_dofs = node_dofs[mesh.cell_nodes].reshape(mesh.n_cells, 16)
    node_dofs.setflags(write=False)
    cell_dofs.setflags(write=False)
    return DofMap(mesh=mesh, node_dofs=node_dofs, n_free=n_free, cell_dofs=cell_dofs)
