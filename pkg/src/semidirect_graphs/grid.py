"""Masked uniform grids and the planar domains they discretize."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DomainError, StencilError

OUTSIDE, INTERIOR, BOUNDARY = 0, 1, 2


@dataclass
class GridFunction:
    """Function sampled on the nodes (x0 + i hx, y0 + j hy) of a masked grid.

    ``values[i, j]`` is the sample at node (i, j). Outside nodes carry NaN.
    Boundary nodes carry Dirichlet data; interior nodes carry unknowns.
    """

    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple[float, float]
    values: np.ndarray
    mask: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=np.int8)
        if self.values.shape != (self.nx, self.ny) or self.mask.shape != (self.nx, self.ny):
            raise DomainError("values and mask must have shape (nx, ny)")
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.hy * np.arange(self.ny)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def interior(self) -> np.ndarray:
        return self.mask == INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.mask == BOUNDARY

    @property
    def active(self) -> np.ndarray:
        return self.mask != OUTSIDE

    @property
    def boundary_values(self) -> np.ndarray:
        return self.values[self.boundary]

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    def copy(self) -> "GridFunction":
        return replace(self, values=self.values.copy(), mask=self.mask.copy(), meta=dict(self.meta))

    def with_values(self, values) -> "GridFunction":
        return replace(self, values=np.array(values, dtype=float), mask=self.mask.copy(), meta=dict(self.meta))

    def check(self) -> None:
        """Raise StencilError unless every interior node has a full 9-point stencil."""
        m = self.mask
        edges = (m[0, :], m[-1, :], m[:, 0], m[:, -1])
        if any((e == INTERIOR).any() for e in edges):
            raise StencilError("interior node on the grid edge")
        inner = m[1:-1, 1:-1] == INTERIOR
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                nb = m[1 + di : m.shape[0] - 1 + di, 1 + dj : m.shape[1] - 1 + dj]
                if np.any(inner & (nb == OUTSIDE)):
                    raise StencilError("interior node with an outside neighbour")
        if not np.all(np.isfinite(self.values[self.boundary])):
            raise StencilError("non-finite boundary data")

    def sup(self, where=None) -> float:
        sel = self.active if where is None else where
        return float(np.max(self.values[sel]))

    def inf(self, where=None) -> float:
        sel = self.active if where is None else where
        return float(np.min(self.values[sel]))

    def osc(self) -> float:
        return self.sup() - self.inf()

    def difference_slack(self) -> float:
        """h times the largest difference quotient between adjacent active nodes."""
        v, act = self.values, self.active
        q = 0.0
        for axis, step in ((0, self.hx), (1, self.hy)):
            a = np.take(v, range(v.shape[axis] - 1), axis=axis)
            b = np.take(v, range(1, v.shape[axis]), axis=axis)
            ma = np.take(act, range(v.shape[axis] - 1), axis=axis)
            mb = np.take(act, range(1, v.shape[axis]), axis=axis)
            both = ma & mb
            if both.any():
                q = max(q, float(np.max(np.abs(b - a)[both])) / step)
        return self.h * q


class DomainSpec:
    """Bounded open planar domain. Subclasses implement the geometry."""

    kind = "abstract"

    def contains(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def project(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Nearest boundary point of each query point."""
        raise NotImplementedError

    def bbox(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def diameter(self) -> float:
        x0, x1, y0, y1 = self.bbox()
        return math.hypot(x1 - x0, y1 - y0)

    def is_convex(self) -> bool:
        return True

    def translated(self, dx: float, dy: float) -> "DomainSpec":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Rectangle(DomainSpec):
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    kind = "rectangle"

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise DomainError("empty rectangle")

    def contains(self, x, y):
        return (x > self.xmin) & (x < self.xmax) & (y > self.ymin) & (y < self.ymax)

    def project(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        cx = np.clip(x, self.xmin, self.xmax)
        cy = np.clip(y, self.ymin, self.ymax)
        inside = self.contains(x, y)
        # inside points go to the nearest side
        d = np.stack([x - self.xmin, self.xmax - x, y - self.ymin, self.ymax - y])
        k = np.argmin(d, axis=0)
        px = np.where(k == 0, self.xmin, np.where(k == 1, self.xmax, x))
        py = np.where(k == 2, self.ymin, np.where(k == 3, self.ymax, y))
        return np.where(inside, px, cx), np.where(inside, py, cy)

    def bbox(self):
        return self.xmin, self.xmax, self.ymin, self.ymax

    def translated(self, dx, dy):
        return Rectangle(self.xmin + dx, self.xmax + dx, self.ymin + dy, self.ymax + dy)

    def to_dict(self):
        return {"kind": self.kind, "xmin": self.xmin, "xmax": self.xmax, "ymin": self.ymin, "ymax": self.ymax}


@dataclass(frozen=True)
class Disk(DomainSpec):
    radius: float
    cx: float = 0.0
    cy: float = 0.0
    kind = "disk"

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("radius must be positive")

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 < self.radius**2

    def project(self, x, y):
        dx, dy = np.asarray(x, float) - self.cx, np.asarray(y, float) - self.cy
        r = np.hypot(dx, dy)
        safe = np.where(r > 0, r, 1.0)
        ux = np.where(r > 0, dx / safe, 1.0)
        uy = np.where(r > 0, dy / safe, 0.0)
        return self.cx + self.radius * ux, self.cy + self.radius * uy

    def bbox(self):
        r = self.radius
        return self.cx - r, self.cx + r, self.cy - r, self.cy + r

    def diameter(self):
        return 2.0 * self.radius

    def translated(self, dx, dy):
        return Disk(self.radius, self.cx + dx, self.cy + dy)

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius, "center": [self.cx, self.cy]}


def _segment_projection(px, py, ax, ay, bx, by):
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    t = np.clip(((px - ax) * ex + (py - ay) * ey) / ll, 0.0, 1.0)
    qx, qy = ax + t * ex, ay + t * ey
    return qx, qy, (px - qx) ** 2 + (py - qy) ** 2


def _project_polyline(x, y, vx, vy, closed):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    best = np.full(x.shape, np.inf)
    bx, by = np.zeros(x.shape), np.zeros(x.shape)
    n = len(vx)
    m = n if closed else n - 1
    for k in range(m):
        k2 = (k + 1) % n
        qx, qy, d = _segment_projection(x, y, vx[k], vy[k], vx[k2], vy[k2])
        better = d < best
        best = np.where(better, d, best)
        bx = np.where(better, qx, bx)
        by = np.where(better, qy, by)
    return bx, by


@dataclass(frozen=True)
class Polygon(DomainSpec):
    vertices: tuple
    kind = "polygon"

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("polygon needs at least three (x, y) vertices")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))
        if not self._is_simple():
            raise DomainError("polygon is not simple")

    @property
    def _v(self):
        return np.asarray(self.vertices)

    def _is_simple(self) -> bool:
        v = self._v
        n = len(v)

        def cross(o, a, b):
            return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

        for i in range(n):
            p1, p2 = v[i], v[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or j == (i + 1) % n:
                    continue
                q1, q2 = v[j], v[(j + 1) % n]
                d1, d2 = cross(q1, q2, p1), cross(q1, q2, p2)
                d3, d4 = cross(p1, p2, q1), cross(p1, p2, q2)
                if d1 * d2 < 0 and d3 * d4 < 0:
                    return False
        return abs(self.area()) > 0

    def area(self) -> float:
        v = self._v
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def contains(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        v = self._v
        inside = np.zeros(x.shape, dtype=bool)
        n = len(v)
        for k in range(n):
            (ax, ay), (bx, by) = v[k], v[(k + 1) % n]
            crosses = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = ax + (y - ay) * (bx - ax) / (by - ay)
            inside ^= crosses & (x < xi)
        # points on edges are not interior
        px, py = _project_polyline(x, y, v[:, 0], v[:, 1], True)
        on_edge = np.hypot(px - x, py - y) < 1e-12
        return inside & ~on_edge

    def project(self, x, y):
        v = self._v
        return _project_polyline(x, y, v[:, 0], v[:, 1], True)

    def bbox(self):
        v = self._v
        return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())

    def diameter(self):
        v = self._v
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def is_convex(self):
        v = self._v
        e = np.roll(v, -1, axis=0) - v
        cr = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cr >= -1e-14) or np.all(cr <= 1e-14))

    def translated(self, dx, dy):
        return Polygon(tuple((x + dx, y + dy) for x, y in self.vertices))

    def to_dict(self):
        return {"kind": self.kind, "vertices": [list(p) for p in self.vertices]}


@dataclass(frozen=True)
class TriangleDelta(DomainSpec):
    """Region {0 < x < L, 0 < y < g(x)} under a concave profile g >= 0."""

    L: float
    g: Callable
    samples: int = 2001
    kind = "triangle_delta"

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("L must be positive")

    def _polyline(self):
        xs = np.linspace(0.0, self.L, self.samples)
        return xs, np.asarray(self.g(xs), dtype=float)

    def contains(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        inx = (x > 0) & (x < self.L)
        gx = np.asarray(self.g(np.clip(x, 0.0, self.L)), dtype=float)
        return inx & (y > 0) & (y < gx)

    def project(self, x, y):
        xs, gs = self._polyline()
        vx = np.concatenate([xs, [0.0]])
        vy = np.concatenate([gs, [0.0]])
        return _project_polyline(x, y, vx, vy, True)

    def bbox(self):
        _, gs = self._polyline()
        return 0.0, self.L, 0.0, float(gs.max())

    def translated(self, dx, dy):
        raise DomainError("the Scherk domain is kept in its normalized frame")

    def to_dict(self):
        return {"kind": self.kind, "L": self.L}


def aligned_origin(lo: float, h: float, pad: int = 1) -> float:
    """Grid coordinate at a multiple of h, at least ``pad`` nodes below ``lo``."""
    return (math.floor(lo / h + 1e-9) - pad) * h


def build_grid(
    domain: DomainSpec,
    hx: float,
    hy: float | None = None,
    origin: tuple[float, float] | None = None,
    shape: tuple[int, int] | None = None,
) -> GridFunction:
    """Mask a uniform grid: interior = strictly inside, boundary = their 8-neighbours outside."""
    hy = hx if hy is None else hy
    x0b, x1b, y0b, y1b = domain.bbox()
    if origin is None:
        origin = (aligned_origin(x0b, hx), aligned_origin(y0b, hy))
    if shape is None:
        nx = int(math.ceil((x1b - origin[0]) / hx + 1e-9)) + 2
        ny = int(math.ceil((y1b - origin[1]) / hy + 1e-9)) + 2
    else:
        nx, ny = shape
    X, Y = np.meshgrid(origin[0] + hx * np.arange(nx), origin[1] + hy * np.arange(ny), indexing="ij")
    inside = domain.contains(X, Y)
    inside[0, :] = inside[-1, :] = False
    inside[:, 0] = inside[:, -1] = False
    near = np.zeros_like(inside)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            near |= np.roll(np.roll(inside, di, axis=0), dj, axis=1)
    mask = np.where(inside, INTERIOR, np.where(near, BOUNDARY, OUTSIDE)).astype(np.int8)
    values = np.where(mask == OUTSIDE, np.nan, 0.0)
    grid = GridFunction(nx, ny, hx, hy, origin, values, mask, meta={"domain": domain.to_dict()})
    if not inside.any():
        raise DomainError("grid too coarse: no interior nodes")
    return grid


def set_boundary(grid: GridFunction, data: Callable, domain: DomainSpec | None = None, project: bool = True) -> GridFunction:
    """Fill boundary nodes with data(x, y), evaluated at the projection onto the domain boundary."""
    X, Y = grid.coords()
    b = grid.boundary
    bx, by = X[b], Y[b]
    if project and domain is not None:
        bx, by = domain.project(bx, by)
    vals = np.broadcast_to(np.asarray(data(bx, by), dtype=float), bx.shape)
    out = grid.copy()
    out.values[b] = vals
    if not np.all(np.isfinite(vals)):
        raise DomainError("boundary data is not finite at every boundary node")
    return out


def sample(grid: GridFunction, fn: Callable, where=None) -> GridFunction:
    """Values fn(x, y) on the chosen nodes (default: all active nodes)."""
    X, Y = grid.coords()
    sel = grid.active if where is None else where
    out = grid.copy()
    out.values[sel] = np.asarray(fn(X[sel], Y[sel]), dtype=float)
    return out
