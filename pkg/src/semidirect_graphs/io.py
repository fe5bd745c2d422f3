"""File formats: grid functions as CSV/JSON, reports as JSON, meshes as OBJ.

Floats are written with 17 significant digits (CSV, OBJ) or Python's
shortest round-trip repr (JSON), so every file re-parses to the same bits.
NaN (outside grid nodes) becomes an empty CSV field and JSON null.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import GridFunction

FLOAT_FMT = "%.17g"
GRID_HEADER = ["nx", "ny", "hx", "hy", "x0", "y0"]
ROW_HEADER = ["i", "j", "x", "y", "mask", "value"]


def fmt(v: float) -> str:
    return "" if math.isnan(v) else FLOAT_FMT % v


def _parse(s: str) -> float:
    return math.nan if s == "" else float(s)


# --- grid functions ----------------------------------------------------------

def write_grid_csv(u: GridFunction, path) -> None:
    X, Y = u.coords()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GRID_HEADER)
        w.writerow([u.nx, u.ny, fmt(u.hx), fmt(u.hy), fmt(u.origin[0]), fmt(u.origin[1])])
        w.writerow(ROW_HEADER)
        for i in range(u.nx):
            for j in range(u.ny):
                w.writerow([i, j, fmt(X[i, j]), fmt(Y[i, j]), int(u.mask[i, j]), fmt(u.values[i, j])])


def read_grid_csv(path) -> GridFunction:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        if next(r) != GRID_HEADER:
            raise ConfigError(f"{path}: not a grid CSV file")
        nx, ny, hx, hy, x0, y0 = next(r)
        nx, ny = int(nx), int(ny)
        if next(r) != ROW_HEADER:
            raise ConfigError(f"{path}: missing node header")
        values = np.full((nx, ny), np.nan)
        mask = np.zeros((nx, ny), dtype=np.int8)
        for row in r:
            i, j = int(row[0]), int(row[1])
            mask[i, j] = int(row[4])
            values[i, j] = _parse(row[5])
    return GridFunction(nx, ny, float(hx), float(hy), (float(x0), float(y0)), values, mask)


def grid_to_dict(u: GridFunction) -> dict:
    return {
        "nx": u.nx, "ny": u.ny, "hx": u.hx, "hy": u.hy, "x0": u.origin[0], "y0": u.origin[1],
        "mask": u.mask.tolist(),
        "values": [[None if math.isnan(v) else v for v in row] for row in u.values.tolist()],
        "meta": u.meta,
    }


def grid_from_dict(d: dict) -> GridFunction:
    vals = np.array([[math.nan if v is None else v for v in row] for row in d["values"]], dtype=float)
    return GridFunction(d["nx"], d["ny"], d["hx"], d["hy"], (d["x0"], d["y0"]), vals,
                        np.array(d["mask"], dtype=np.int8), dict(d.get("meta", {})))


def write_grid_json(u: GridFunction, path) -> None:
    write_json(grid_to_dict(u), path)


def read_grid_json(path) -> GridFunction:
    return grid_from_dict(read_json(path))


# --- JSON reports ------------------------------------------------------------

def to_jsonable(obj):
    """Plain JSON types; non-finite floats become null, infinities the strings 'inf'/'-inf'."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return to_jsonable(dataclasses.asdict(obj))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


# --- tables ------------------------------------------------------------------

def write_table(path, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, (int, str)) else fmt(float(v)) for v in row])


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        cols = next(r)
        data = [[_parse(v) for v in row] for row in r]
    return cols, np.array(data, dtype=float).reshape(-1, len(cols))


# --- OBJ meshes --------------------------------------------------------------

def write_obj(mesh, path) -> None:
    """``v x y z`` vertices, 1-based ``f`` triangles, ``l`` polylines grouped by tag."""
    with open(path, "w") as fh:
        for k, v in mesh.header.items():
            fh.write(f"# {k} = {json.dumps(to_jsonable(v))}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {fmt(x)} {fmt(y)} {fmt(z)}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
        for tag, polys in mesh.lines.items():
            fh.write(f"g {tag}\n")
            for poly in polys:
                fh.write("l " + " ".join(str(i + 1) for i in poly) + "\n")


def read_obj(path) -> tuple[np.ndarray, np.ndarray, dict, dict]:
    """(vertices, faces, lines, header) with 0-based indices."""
    verts, faces, lines, header = [], [], {}, {}
    tag = None
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("# ") and " = " in raw:
            k, v = raw[2:].split(" = ", 1)
            header[k] = json.loads(v)
            continue
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p) - 1 for p in parts[1:4]])
        elif parts[0] == "g":
            tag = parts[1]
            lines.setdefault(tag, [])
        elif parts[0] == "l":
            lines.setdefault(tag, []).append([int(p) - 1 for p in parts[1:]])
    return (np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3),
            lines, header)
