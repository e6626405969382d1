"""Norms, errors against closed-form solutions, EOCs and long-time indicators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assembly import Discretization, _coeffs
from .c1_element import physical_tables, reference_tables
from .errors import EocUndefinedError, FitDomainError


@dataclass(frozen=True)
class NormReport:
    """L2 norm, H1 seminorm ||grad v|| and broken Laplacian norm ||lap v||."""

    l2: float
    h1_semi: float
    h2_broken: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.l2, self.h1_semi, self.h2_broken)


def _cell_rule(n: int, subdivide: int):
    """Composite Gauss rule on [0,1]^2: ``subdivide``^2 sub-squares, ``n``^2 points each."""
    s, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    k = np.arange(subdivide)
    pts = ((k[:, None] + s[None, :]) / subdivide).ravel()
    wts = np.tile(w, subdivide) / subdivide
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    return X.ravel(), Y.ravel(), np.outer(wts, wts).ravel()


def _fields(disc: Discretization, coeffs, n: int, subdivide: int):
    xi, eta, w = _cell_rule(n, subdivide)
    mesh = disc.mesh
    tabs = physical_tables(reference_tables(xi, eta), mesh.hx, mesh.hy)
    loc = disc.dofmap.gather(_coeffs(coeffs))
    org = mesh.cell_origins
    X = org[:, :1] + mesh.hx * xi[None, :]
    Y = org[:, 1:] + mesh.hy * eta[None, :]
    val, dx, dy, lap = (loc @ getattr(tabs, k).T for k in ("val", "dx", "dy", "lap"))
    return X, Y, w * mesh.cell_area, val, dx, dy, lap


def norms(state, disc: Discretization, n: int = 5, subdivide: int = 1) -> NormReport:
    _, _, w, val, dx, dy, lap = _fields(disc, state, n, subdivide)
    return NormReport(
        math.sqrt(float(np.sum(w * val**2))),
        math.sqrt(float(np.sum(w * (dx**2 + dy**2)))),
        math.sqrt(float(np.sum(w * lap**2))),
    )


def error_norms(state, exact, disc: Discretization, t: float | None = None,
                n: int = 8, subdivide: int = 1) -> NormReport:
    """Norms of ``psi_h - psi(., t)`` by per-cell Gauss quadrature.

    ``exact`` is an ``AnalyticField`` or any object with ``at(t)`` returning one.
    """
    if t is None:
        t = getattr(state, "t", 0.0)
    field = exact.at(t) if hasattr(exact, "at") else exact
    X, Y, w, val, dx, dy, lap = _fields(disc, state, n, subdivide)
    e0 = val - field.value(X, Y)
    ex = dx - field.dx(X, Y)
    ey = dy - field.dy(X, Y)
    el = lap - field.laplacian(X, Y)
    return NormReport(
        math.sqrt(float(np.sum(w * e0**2))),
        math.sqrt(float(np.sum(w * (ex**2 + ey**2)))),
        math.sqrt(float(np.sum(w * el**2))),
    )


@dataclass
class EocTable:
    h: list[float]
    errors: list[tuple[float, ...]]

    def __post_init__(self):
        if len(self.h) != len(self.errors):
            raise ValueError("one error row per mesh size required")
        for a, b in zip(self.h, self.h[1:]):
            if not math.isclose(a / b, 2.0, rel_tol=1e-9):
                raise ValueError(f"mesh sizes must halve between rows, got {a} -> {b}")

    def eoc(self) -> list[tuple[float, ...]]:
        return eoc(self)


def _log2_ratio(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise EocUndefinedError(f"EOC undefined for errors {a}, {b}")
    return math.log2(a / b)


def eoc(table) -> list:
    """Pairwise ``log2(e_h / e_{h/2})``; accepts an EocTable or a plain error sequence."""
    rows = table.errors if isinstance(table, EocTable) else list(table)
    if len(rows) < 2:
        raise EocUndefinedError("EOC needs at least two rows")
    out = []
    for a, b in zip(rows, rows[1:]):
        if np.ndim(a) == 0:
            out.append(_log2_ratio(a, b))
        else:
            out.append(tuple(_log2_ratio(x, y) for x, y in zip(a, b)))
    return out


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r2: float


def decay_rate(history: Sequence[tuple[float, float]], window: float = 0.5) -> DecayFit:
    """Least-squares slope of log(energy) against t over the trailing ``window`` fraction."""
    h = np.asarray(history, dtype=float)
    k = max(2, int(math.ceil(window * len(h))))
    t, e = h[-k:, 0], h[-k:, 1]
    if np.any(e <= 0):
        raise FitDomainError("energies must be positive over the fitted window")
    y = np.log(e)
    slope, intercept = np.polyfit(t, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * t + intercept)) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return DecayFit(float(slope), r2)


def steady_state(history: Sequence[tuple[float, float]], window: int, tol: float) -> tuple[bool, float]:
    """Whether the energy varies by at most ``tol`` (relative) over the last ``window`` samples."""
    e = np.asarray(history, dtype=float)[:, 1]
    if not 1 <= window <= len(e):
        raise ValueError(f"window {window} outside 1..{len(e)}")
    tail = e[-window:]
    plateau = float(np.mean(tail))
    spread = float(tail.max() - tail.min())
    if plateau == 0.0:
        return spread == 0.0, plateau
    return spread / abs(plateau) <= tol, plateau
