"""Closed-form algebra and geometry of the semidirect product R^2 x_A R.

Points are (x, y, z) with group law
    (x1, y1, z1) * (x2, y2, z2) = ((x1, y1) + e^{A z1}(x2, y2), z1 + z2)
and the left invariant metric making E1, E2, E3 orthonormal.

Every function accepts numpy arrays for the height ``z`` and broadcasts, so
the PDE solver can evaluate metric coefficients on whole grids at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExponentOverflow

EXP_CAP = 700.0
SERIES_THRESHOLD = 1e-4
PARABOLIC_TOL = 1e-12


@dataclass(frozen=True)
class GroupMatrix:
    """The 2x2 matrix A = (a b; c d) defining the group."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"matrix entry {name} is not finite: {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_array(cls, m) -> "GroupMatrix":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise DomainError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def a0(self) -> float:
        """Diagonal entry of the traceless part (a0, b; c, -a0)."""
        return 0.5 * (self.a - self.d)

    @property
    def milnor_disc(self) -> float:
        """a0^2 + b c for the traceless part A0 = A - (trace/2) I."""
        return self.a0 * self.a0 + self.b * self.c

    def regime(self, tol: float = PARABOLIC_TOL) -> str:
        """'elliptic', 'parabolic' or 'hyperbolic' by the sign of milnor_disc.

        The tolerance is relative to the squared size of the traceless part.
        """
        scale = max(self.a0 * self.a0, abs(self.b), abs(self.c), 1.0) ** 2
        disc = self.milnor_disc
        if abs(disc) <= tol * scale:
            return "parabolic"
        return "elliptic" if disc < 0 else "hyperbolic"

    @property
    def is_diagonal(self) -> bool:
        return self.b == 0.0 and self.c == 0.0

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def scaled(self, s: float) -> "GroupMatrix":
        return GroupMatrix(s * self.a, s * self.b, s * self.c, s * self.d)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


@dataclass(frozen=True)
class NormalizedMatrix:
    """Result of normalize_trace.

    ``matrix`` equals ``scale * A`` where ``scale`` is negative when the
    orientation flip z -> -z was applied. For scale > 0 the homothety maps
    (x, y, z) to (x, y, z) / scale.
    """

    matrix: GroupMatrix
    scale: float
    flipped: bool
    unimodular: bool

    @property
    def params(self) -> tuple[float, float, float]:
        """(a, b, c) for a trace-2 matrix written as (1+a b; c 1-a)."""
        m = self.matrix
        return m.a0, m.b, m.c


def normalize_trace(A: GroupMatrix) -> NormalizedMatrix:
    """Rescale A to trace 2 (or leave a trace-0 matrix alone).

    A homothety of the metric multiplies A by a positive constant; a negative
    trace is first flipped by z -> -z, i.e. A -> -A.
    """
    tr = A.trace
    if tr == 0.0:
        return NormalizedMatrix(A, 1.0, False, True)
    s = 2.0 / tr
    return NormalizedMatrix(A.scaled(s), s, s < 0, False)


@dataclass(frozen=True)
class GroupPoint:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class ExponentialFrame:
    """Entries of e^{Az}; fields may be arrays when z is an array."""

    z: object
    a11: object
    a12: object
    a21: object
    a22: object

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a21

    def apply(self, x, y):
        return self.a11 * x + self.a12 * y, self.a21 * x + self.a22 * y


def _kernels(disc: float, z):
    """C(z), S(z) with e^{A0 z} = C I + S A0, stable across disc = 0."""
    z = np.asarray(z, dtype=float)
    s = disc * z * z
    small = np.abs(s) < SERIES_THRESHOLD**2
    C = 1.0 + s / 2.0 + s * s / 24.0
    S = z * (1.0 + s / 6.0 + s * s / 120.0)
    if disc > 0:
        delta = math.sqrt(disc)
        t = delta * z
        with np.errstate(over="ignore"):
            C = np.where(small, C, np.cosh(t))
            S = np.where(small, S, np.sinh(t) / delta)
    elif disc < 0:
        delta = math.sqrt(-disc)
        t = delta * z
        C = np.where(small, C, np.cos(t))
        S = np.where(small, S, np.sin(t) / delta)
    return C, S


def _check_cap(A: GroupMatrix, z, cap: float):
    zmax = float(np.max(np.abs(z))) if np.size(z) else 0.0
    if not math.isfinite(zmax):
        raise DomainError("height is not finite")
    growth = zmax * max(abs(A.trace), math.sqrt(abs(A.milnor_disc)))
    if growth > cap:
        raise ExponentOverflow(
            f"|z|*rate = {growth:.6g} exceeds the exponent cap {cap:g}"
        )


def exp_entries(A: GroupMatrix, z, cap: float = EXP_CAP):
    """Entries (a11, a12, a21, a22) of e^{Az}, broadcasting over z."""
    z = np.asarray(z, dtype=float)
    _check_cap(A, z, cap)
    C, S = _kernels(A.milnor_disc, z)
    scale = np.exp(0.5 * A.trace * z)
    a0 = A.a0
    return (
        scale * (C + a0 * S),
        scale * (A.b * S),
        scale * (A.c * S),
        scale * (C - a0 * S),
    )


def exp_Az(A: GroupMatrix, z, cap: float = EXP_CAP) -> ExponentialFrame:
    """Closed-form e^{Az} via e^{(trace/2) z} e^{A0 z}."""
    a11, a12, a21, a22 = exp_entries(A, z, cap)
    if np.ndim(a11) == 0:
        a11, a12, a21, a22 = (float(v) for v in (a11, a12, a21, a22))
        z = float(z)
    return ExponentialFrame(z, a11, a12, a21, a22)


def group_multiply(p: GroupPoint, q: GroupPoint, A: GroupMatrix) -> GroupPoint:
    E = exp_Az(A, p.z)
    dx, dy = E.apply(q.x, q.y)
    return GroupPoint(p.x + dx, p.y + dy, p.z + q.z)


def group_inverse(p: GroupPoint, A: GroupMatrix) -> GroupPoint:
    E = exp_Az(A, -p.z)
    x, y = E.apply(p.x, p.y)
    return GroupPoint(-x, -y, -p.z)


@dataclass(frozen=True)
class MetricJet:
    """Metric coefficients Q_ij, first-order coefficients G_i and their z-derivatives."""

    z: object
    Q11: object
    Q22: object
    Q12: object
    G1: object
    G2: object
    G3: object
    dQ11: object = None
    dQ22: object = None
    dQ12: object = None
    dG1: object = None
    dG2: object = None
    dG3: object = None


def metric_jet(A: GroupMatrix, z, cap: float = EXP_CAP) -> MetricJet:
    """Q_ij(z), G_i(z) and d/dz of each, broadcasting over z."""
    z = np.asarray(z, dtype=float)
    a11, a12, a21, a22 = exp_entries(A, z, cap)
    a, b, c, d = A.a, A.b, A.c, A.d
    tr = A.trace
    # (e^{Az})' = A e^{Az}
    b11 = a * a11 + b * a21
    b12 = a * a12 + b * a22
    b21 = c * a11 + d * a21
    b22 = c * a12 + d * a22
    e = np.exp(-2.0 * tr * z)

    p11 = a21 * a21 + a22 * a22
    p22 = a11 * a11 + a12 * a12
    p12 = -(a11 * a21 + a12 * a22)
    dp11 = 2.0 * (a21 * b21 + a22 * b22)
    dp22 = 2.0 * (a11 * b11 + a12 * b12)
    dp12 = -(b11 * a21 + a11 * b21 + b12 * a22 + a12 * b22)

    k1, k2, k3 = 2 * a + d, a + 2 * d, b + c
    g1 = k1 * a11 * a11 + k2 * a12 * a12 + k3 * a11 * a12
    g2 = k1 * a21 * a21 + k2 * a22 * a22 + k3 * a21 * a22
    g3 = (4 * a + 2 * d) * a11 * a21 + (2 * a + 4 * d) * a12 * a22 + k3 * (
        a11 * a22 + a12 * a21
    )
    dg1 = 2 * k1 * a11 * b11 + 2 * k2 * a12 * b12 + k3 * (b11 * a12 + a11 * b12)
    dg2 = 2 * k1 * a21 * b21 + 2 * k2 * a22 * b22 + k3 * (b21 * a22 + a21 * b22)
    dg3 = (
        (4 * a + 2 * d) * (b11 * a21 + a11 * b21)
        + (2 * a + 4 * d) * (b12 * a22 + a12 * b22)
        + k3 * (b11 * a22 + a11 * b22 + b12 * a21 + a12 * b21)
    )
    m = -2.0 * tr
    out = dict(
        Q11=e * p11, Q22=e * p22, Q12=e * p12, G1=e * g1, G2=e * g2, G3=e * g3,
        dQ11=e * (m * p11 + dp11), dQ22=e * (m * p22 + dp22),
        dQ12=e * (m * p12 + dp12), dG1=e * (m * g1 + dg1),
        dG2=e * (m * g2 + dg2), dG3=e * (m * g3 + dg3),
    )
    if z.ndim == 0:
        out = {k: float(v) for k, v in out.items()}
        return MetricJet(z=float(z), **out)
    return MetricJet(z=z, **out)


def area_factor_W(A: GroupMatrix, z, p1, p2, cap: float = EXP_CAP):
    """W = sqrt(1 + |e^{Az}^T p|^2), the frame form."""
    a11, a12, a21, a22 = exp_entries(A, z, cap)
    w = np.sqrt(1.0 + (a11 * p1 + a21 * p2) ** 2 + (a12 * p1 + a22 * p2) ** 2)
    return float(w) if np.ndim(w) == 0 else w


def area_factor_W_metric(A: GroupMatrix, z, p1, p2, cap: float = EXP_CAP):
    """W from the metric coefficients; agrees with area_factor_W."""
    j = metric_jet(A, z, cap)
    q = j.Q22 * p1 * p1 - 2.0 * j.Q12 * p1 * p2 + j.Q11 * p2 * p2
    w = np.sqrt(1.0 + np.exp(2.0 * A.trace * np.asarray(z)) * q)
    return float(w) if np.ndim(w) == 0 else w


def frame_fields(A: GroupMatrix, p: GroupPoint):
    """Coordinate components of the left invariant (E) and right invariant (F) frames."""
    E = exp_Az(A, p.z)
    Es = (
        np.array([E.a11, E.a21, 0.0]),
        np.array([E.a12, E.a22, 0.0]),
        np.array([0.0, 0.0, 1.0]),
    )
    Fs = (
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([A.a * p.x + A.b * p.y, A.c * p.x + A.d * p.y, 1.0]),
    )
    return Es, Fs


def metric_tensor(A: GroupMatrix, z) -> np.ndarray:
    """3x3 coordinate matrix of the metric at height z."""
    j = metric_jet(A, z)
    return np.array([[j.Q11, j.Q12, 0.0], [j.Q12, j.Q22, 0.0], [0.0, 0.0, 1.0]])


def connection_table(A: GroupMatrix) -> dict[tuple[int, int], np.ndarray]:
    """Coefficients of nabla_{E_i} E_j in the E-frame, keyed by (i, j) in 1..3."""
    a, b, c, d = A.a, A.b, A.c, A.d
    s = 0.5 * (b + c)
    t = 0.5 * (c - b)
    return {
        (1, 1): np.array([0.0, 0.0, a]),
        (1, 2): np.array([0.0, 0.0, s]),
        (1, 3): np.array([-a, -s, 0.0]),
        (2, 1): np.array([0.0, 0.0, s]),
        (2, 2): np.array([0.0, 0.0, d]),
        (2, 3): np.array([-s, -d, 0.0]),
        (3, 1): np.array([0.0, t, 0.0]),
        (3, 2): np.array([-t, 0.0, 0.0]),
        (3, 3): np.array([0.0, 0.0, 0.0]),
    }


def lie_brackets(A: GroupMatrix) -> dict[tuple[int, int], np.ndarray]:
    """[E_i, E_j] in the E-frame for i < j."""
    return {
        (1, 2): np.zeros(3),
        (3, 1): np.array([A.a, A.c, 0.0]),
        (3, 2): np.array([A.b, A.d, 0.0]),
    }


def rotation(theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([[ct, -st], [st, ct]])


def rotate_congruence(A: GroupMatrix, theta: float) -> GroupMatrix:
    """P A P^{-1} for the rotation P by theta."""
    P = rotation(theta)
    return GroupMatrix.from_array(P @ A.as_array() @ P.T)


def cylinder_mean_curvature(A: GroupMatrix, kg, z, tangent=(1.0, 0.0)):
    """Mean curvature of the vertical cylinder over a planar curve.

    ``kg`` is the signed Euclidean curvature of the curve in the slice z = 0
    and ``tangent`` its Euclidean unit tangent at the point; the value is
    taken along the left normal. For A a multiple of the identity the
    tangent is irrelevant.
    """
    t1, t2 = tangent
    n = math.hypot(t1, t2)
    if n == 0.0:
        raise DomainError("tangent must be nonzero")
    t1, t2 = t1 / n, t2 / n
    b11, b12, b21, b22 = exp_entries(A, -np.asarray(z, dtype=float))
    speed = np.hypot(b11 * t1 + b12 * t2, b21 * t1 + b22 * t2)
    h = kg * np.exp(-np.asarray(z) * A.trace) / (2.0 * speed**3)
    return float(h) if np.ndim(h) == 0 else h
