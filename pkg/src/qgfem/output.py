"""Manifest, CSV and legacy-VTK writers."""

from __future__ import annotations

import csv
import dataclasses
import enum
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .mesh import RectMesh

MANIFEST_NAME = "manifest.txt"


def fmt(x) -> str:
    """Round-trippable 17-significant-digit decimal for floats."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    if x is None:
        return ""
    if isinstance(x, enum.Enum):
        return str(x.value)
    return str(x)


def manifest_items(*objs, **extra) -> list[tuple[str, str]]:
    items = []
    for obj in objs:
        for f in dataclasses.fields(obj):
            if f.name == "user_forcing":
                continue
            items.append((f.name, fmt(getattr(obj, f.name))))
    items.extend((k, fmt(v) if not isinstance(v, (list, tuple)) else ",".join(fmt(a) for a in v))
                 for k, v in extra.items())
    return items


def write_manifest(out_dir: Path, items: Iterable[tuple[str, str]]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / MANIFEST_NAME
    with open(path, "w") as fh:
        for k, v in items:
            fh.write(f"{k} = {v}\n")
    return path


def read_keyvalue(path: os.PathLike) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


class CsvTable:
    """CSV writer that flushes after every row, so partial tables survive failures."""

    def __init__(self, path: Path, header: Sequence[str]):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(header)
        self._fh.flush()

    def row(self, values: Sequence) -> None:
        self._writer.writerow([fmt(v) for v in values])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with CsvTable(path, header) as tab:
        for r in rows:
            tab.row(r)
    return Path(path)


def write_snapshot(stem: Path, mesh: RectMesh, nodal: np.ndarray, t: float) -> tuple[Path, Path]:
    """Write nodal Hermite data as ``stem.vtk`` (STRUCTURED_POINTS) and ``stem.csv``.

    ``nodal`` is (n_nodes, 4) with columns (psi, psi_x, psi_y, psi_xy).
    """
    stem = Path(stem)
    # append rather than with_suffix: stems such as "t=0.02" contain dots
    vtk = stem.parent / (stem.name + ".vtk")
    with open(vtk, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"stream function psi at t={fmt(t)}\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {mesh.nx + 1} {mesh.ny + 1} 1\n")
        fh.write(f"ORIGIN {fmt(mesh.x0)} {fmt(mesh.y0)} 0\n")
        fh.write(f"SPACING {fmt(mesh.hx)} {fmt(mesh.hy)} 1\n")
        fh.write(f"POINT_DATA {mesh.n_nodes}\n")
        fh.write("SCALARS psi double 1\nLOOKUP_TABLE default\n")
        for v in nodal[:, 0]:
            fh.write(fmt(v) + "\n")
    xy = mesh.node_coords
    rows = (
        (x, y, p, px, py)
        for (x, y), (p, px, py) in zip(xy, nodal[:, :3])
    )
    csv_path = write_csv(stem.parent / (stem.name + ".csv"), ("x", "y", "psi", "psi_x", "psi_y"), rows)
    return vtk, csv_path


def read_structured_points(path: os.PathLike) -> tuple[dict, np.ndarray]:
    """Minimal reader for the files written by ``write_snapshot``."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    if not lines[0].startswith("# vtk DataFile") or lines[3] != "DATASET STRUCTURED_POINTS":
        raise ValueError(f"{path} is not a legacy STRUCTURED_POINTS file")
    header = {}
    i = 4
    while not lines[i].startswith("LOOKUP_TABLE"):
        key, *vals = lines[i].split()
        header[key] = vals
        i += 1
    values = np.array([float(v) for v in lines[i + 1:] if v])
    return header, values
