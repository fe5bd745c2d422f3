"""Mean curvature operator for pi-graphs z = u(x, y) and its discretization.

For the upward orientation,
    H = e^{2u tr} / (2 W^3) * Q(u),
    Q(u) = uxx (Q22 + uy^2) + uyy (Q11 + ux^2) - 2 uxy (Q12 + ux uy)
           + G1 ux^2 + G2 uy^2 + G3 ux uy + tr e^{-2u tr}
with the metric coefficients evaluated at height u.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import INTERIOR, GridFunction
from .lie_algebra import GroupMatrix, metric_jet


@dataclass(frozen=True)
class JetSample:
    """Height, gradient and Hessian of u at a point (arrays broadcast)."""

    u: object
    ux: object = 0.0
    uy: object = 0.0
    uxx: object = 0.0
    uxy: object = 0.0
    uyy: object = 0.0


@dataclass(frozen=True)
class EllipticityMatrix:
    m11: float
    m12: float
    m22: float

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12

    def eigenvalues(self) -> tuple[float, float]:
        t = 0.5 * (self.m11 + self.m22)
        r = np.hypot(0.5 * (self.m11 - self.m22), self.m12)
        # product form keeps the small eigenvalue accurate
        big = t + r
        return self.det / big, big

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m12, self.m22]])


def operator_Q(A: GroupMatrix, jet: JetSample):
    m = metric_jet(A, jet.u)
    tr = A.trace
    ux, uy = jet.ux, jet.uy
    q = (
        jet.uxx * (m.Q22 + uy * uy)
        + jet.uyy * (m.Q11 + ux * ux)
        - 2.0 * jet.uxy * (m.Q12 + ux * uy)
        + m.G1 * ux * ux
        + m.G2 * uy * uy
        + m.G3 * ux * uy
        + tr * np.exp(-2.0 * tr * np.asarray(jet.u))
    )
    return float(q) if np.ndim(q) == 0 else q


def _gradient_quadratic(m, p1, p2):
    return m.Q22 * p1 * p1 - 2.0 * m.Q12 * p1 * p2 + m.Q11 * p2 * p2


def W_of_jet(A: GroupMatrix, jet: JetSample):
    m = metric_jet(A, jet.u)
    return np.sqrt(1.0 + np.exp(2.0 * A.trace * np.asarray(jet.u)) * _gradient_quadratic(m, jet.ux, jet.uy))


def mean_curvature_H(A: GroupMatrix, jet: JetSample):
    """Mean curvature (average of principal curvatures) of the upward oriented graph."""
    W = W_of_jet(A, jet)
    h = np.exp(2.0 * A.trace * np.asarray(jet.u)) * operator_Q(A, jet) / (2.0 * W**3)
    return float(h) if np.ndim(h) == 0 else h


def ellipticity_matrix(A: GroupMatrix, z: float, p1: float, p2: float) -> EllipticityMatrix:
    """Principal symbol of Q: coefficients of (uxx, uxy, uyy) as a symmetric matrix."""
    m = metric_jet(A, z)
    return EllipticityMatrix(m.Q22 + p2 * p2, -(m.Q12 + p1 * p2), m.Q11 + p1 * p1)


def prescribed_operator(A: GroupMatrix, jet: JetSample, H):
    """Q(u) - 2 H e^{-2u tr} W^3; zero exactly when the graph has mean curvature H."""
    W = W_of_jet(A, jet)
    return operator_Q(A, jet) - 2.0 * H * np.exp(-2.0 * A.trace * np.asarray(jet.u)) * W**3


def operator_partials(A: GroupMatrix, jet: JetSample, H=None):
    """Value and partial derivatives of the (prescribed) operator in each jet slot.

    Returns (F, dF/du, dF/dux, dF/duy, dF/duxx, dF/duxy, dF/duyy, scale) where
    scale = Q11 + Q22 + ux^2 + uy^2 is the trace of the principal symbol.
    """
    u = np.asarray(jet.u, dtype=float)
    ux, uy, uxx, uxy, uyy = jet.ux, jet.uy, jet.uxx, jet.uxy, jet.uyy
    m = metric_jet(A, u)
    tr = A.trace
    e = np.exp(-2.0 * tr * u)
    F = (
        uxx * (m.Q22 + uy * uy)
        + uyy * (m.Q11 + ux * ux)
        - 2.0 * uxy * (m.Q12 + ux * uy)
        + m.G1 * ux * ux
        + m.G2 * uy * uy
        + m.G3 * ux * uy
        + tr * e
    )
    Fu = (
        uxx * m.dQ22
        + uyy * m.dQ11
        - 2.0 * uxy * m.dQ12
        + m.dG1 * ux * ux
        + m.dG2 * uy * uy
        + m.dG3 * ux * uy
        - 2.0 * tr * tr * e
    )
    Fux = 2.0 * uyy * ux - 2.0 * uxy * uy + 2.0 * m.G1 * ux + m.G3 * uy
    Fuy = 2.0 * uxx * uy - 2.0 * uxy * ux + 2.0 * m.G2 * uy + m.G3 * ux
    Fuxx = m.Q22 + uy * uy
    Fuyy = m.Q11 + ux * ux
    Fuxy = -2.0 * (m.Q12 + ux * uy)
    if H is not None:
        S = _gradient_quadratic(m, ux, uy)
        dS = m.dQ22 * ux * ux - 2.0 * m.dQ12 * ux * uy + m.dQ11 * uy * uy
        W = np.sqrt(1.0 + S / e)
        T = e * W**3
        F = F - 2.0 * H * T
        Fu = Fu - 2.0 * H * (-2.0 * tr * T + 1.5 * W * (2.0 * tr * S + dS))
        Fux = Fux - 2.0 * H * 3.0 * W * (m.Q22 * ux - m.Q12 * uy)
        Fuy = Fuy - 2.0 * H * 3.0 * W * (m.Q11 * uy - m.Q12 * ux)
    scale = m.Q11 + m.Q22 + ux * ux + uy * uy
    return F, Fu, Fux, Fuy, Fuxx, Fuxy, Fuyy, scale


# --- discretization -------------------------------------------------------

_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]


def interior_index(u: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """(i, j) of interior nodes in row-major order (the unknown ordering)."""
    u.check()
    return np.nonzero(u.mask == INTERIOR)


def discrete_jet(u: GridFunction, I=None, J=None) -> JetSample:
    """Central-difference jets at the given nodes (default: all interior nodes)."""
    if I is None:
        I, J = interior_index(u)
    v = u.values
    hx, hy = u.hx, u.hy
    c = v[I, J]
    e, w = v[I + 1, J], v[I - 1, J]
    n, s = v[I, J + 1], v[I, J - 1]
    ne, nw = v[I + 1, J + 1], v[I - 1, J + 1]
    se, sw = v[I + 1, J - 1], v[I - 1, J - 1]
    return JetSample(
        u=c,
        ux=(e - w) / (2 * hx),
        uy=(n - s) / (2 * hy),
        uxx=(e - 2 * c + w) / (hx * hx),
        uyy=(n - 2 * c + s) / (hy * hy),
        uxy=(ne - nw - se + sw) / (4 * hx * hy),
    )


def _chunks(n: int, threads: int):
    threads = max(1, int(threads))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    return [(bounds[k], bounds[k + 1]) for k in range(threads) if bounds[k + 1] > bounds[k]]


def _parallel(fn, n: int, threads: int):
    """Evaluate fn(lo, hi) on contiguous chunks and concatenate in order."""
    parts = _chunks(n, threads)
    if len(parts) <= 1:
        return fn(0, n)
    with ThreadPoolExecutor(max_workers=len(parts)) as ex:
        results = list(ex.map(lambda p: fn(*p), parts))
    return tuple(np.concatenate(r) for r in zip(*results))


def _H_at(H, u: GridFunction, I, J):
    if H is None:
        return None
    if callable(H):
        return np.asarray(H(u.x[I], u.y[J]), dtype=float)
    H = np.asarray(H, dtype=float)
    return H[I, J] if H.ndim == 2 else H


def assemble_residual(u: GridFunction, pointwise, threads: int = 1):
    """(F, scale) of a pointwise operator at the interior nodes.

    ``pointwise(jet, I, J)`` returns (F, Fu, Fux, Fuy, Fuxx, Fuxy, Fuyy, scale).
    """
    I, J = interior_index(u)

    def work(lo, hi):
        out = pointwise(discrete_jet(u, I[lo:hi], J[lo:hi]), I[lo:hi], J[lo:hi])
        return out[0], out[-1]

    return _parallel(work, len(I), threads)


def assemble_jacobian(u: GridFunction, pointwise, threads: int = 1):
    """Sparse derivative of assemble_residual with respect to the interior values."""
    I, J = interior_index(u)
    n = len(I)
    number = -np.ones(u.mask.shape, dtype=np.int64)
    number[I, J] = np.arange(n)
    hx, hy = u.hx, u.hy

    def work(lo, hi):
        jet = discrete_jet(u, I[lo:hi], J[lo:hi])
        _, Fu, Fux, Fuy, Fuxx, Fuxy, Fuyy, _ = pointwise(jet, I[lo:hi], J[lo:hi])
        ones = np.ones(hi - lo)
        coef = {
            (0, 0): Fu - 2 * Fuxx / hx**2 - 2 * Fuyy / hy**2,
            (1, 0): Fux / (2 * hx) + Fuxx / hx**2,
            (-1, 0): -Fux / (2 * hx) + Fuxx / hx**2,
            (0, 1): Fuy / (2 * hy) + Fuyy / hy**2,
            (0, -1): -Fuy / (2 * hy) + Fuyy / hy**2,
            (1, 1): Fuxy / (4 * hx * hy) * ones,
            (-1, -1): Fuxy / (4 * hx * hy) * ones,
            (1, -1): -Fuxy / (4 * hx * hy) * ones,
            (-1, 1): -Fuxy / (4 * hx * hy) * ones,
        }
        rows, cols, vals = [], [], []
        r = np.arange(lo, hi)
        for di, dj in _OFFSETS:
            col = number[I[lo:hi] + di, J[lo:hi] + dj]
            keep = col >= 0
            rows.append(r[keep])
            cols.append(col[keep])
            vals.append(np.broadcast_to(coef[(di, dj)], r.shape)[keep])
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    rows, cols, vals = _parallel(work, n, threads)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass(frozen=True)
class PiGraphSystem:
    """Discrete prescribed mean curvature equation for pi-graphs."""

    A: GroupMatrix
    H: object = None

    def pointwise(self, u: GridFunction):
        def fn(jet, I, J):
            return operator_partials(self.A, jet, _H_at(self.H, u, I, J))
        return fn

    def residual(self, u: GridFunction, threads: int = 1):
        return assemble_residual(u, self.pointwise(u), threads)

    def jacobian(self, u: GridFunction, threads: int = 1):
        return assemble_jacobian(u, self.pointwise(u), threads)


def residual_vector(A: GroupMatrix, u: GridFunction, H=None, threads: int = 1):
    """(F, scale) at the interior nodes in interior_index order."""
    return PiGraphSystem(A, H).residual(u, threads)


def discrete_residual(A: GroupMatrix, u: GridFunction, H=None, threads: int = 1) -> GridFunction:
    """Grid function carrying the operator at interior nodes and 0 on the boundary."""
    F, _ = residual_vector(A, u, H, threads)
    out = np.where(u.active, 0.0, np.nan)
    I, J = interior_index(u)
    out[I, J] = F
    return u.with_values(out)


def discrete_jacobian(A: GroupMatrix, u: GridFunction, H=None, threads: int = 1):
    """Sparse derivative of residual_vector with respect to the interior values."""
    return PiGraphSystem(A, H).jacobian(u, threads)


# --- Killing graphs y = g(x, z) ------------------------------------------------
#
# In coordinates (x, y, z) the metric is p^T S(z) p + dz^2 for horizontal p,
# with S = [[Q11, Q12], [Q12, Q22]]. For F(x, z) = (x, g(x, z), z) and the
# covector n = (g_x, -1, g_z) annihilating the tangent plane,
#     K(g) = h_zz g_xx - 2 h_xz g_xz + h_xx g_zz - (h_zz nG_xx - 2 h_xz nG_xz + h_xx nG_zz),
# where h is the first fundamental form and nG_ab = n(Gamma(F_a, F_b)).
# K = 0 exactly when the surface is minimal; for A = 0 it is the Euclidean
# minimal surface operator in (x, z).


def _killing_value(A: GroupMatrix, z, gx, gz, gxx, gxz, gzz):
    m = metric_jet(A, z)
    det = np.exp(-2.0 * A.trace * np.asarray(z, dtype=float))
    # P = S^{-1} S'
    i11, i12, i22 = m.Q22 / det, -m.Q12 / det, m.Q11 / det
    p11 = i11 * m.dQ11 + i12 * m.dQ12
    p12 = i11 * m.dQ12 + i12 * m.dQ22
    p21 = i12 * m.dQ11 + i22 * m.dQ12
    p22 = i12 * m.dQ12 + i22 * m.dQ22

    def S(a1, a2, b1, b2):
        return a1 * m.Q11 * b1 + (a1 * b2 + a2 * b1) * m.Q12 + a2 * m.Q22 * b2

    def dS(a1, a2, b1, b2):
        return a1 * m.dQ11 * b1 + (a1 * b2 + a2 * b1) * m.dQ12 + a2 * m.dQ22 * b2

    def nP(b1, b2):
        # n_h^T P b with n_h = (gx, -1)
        return gx * (p11 * b1 + p12 * b2) - (p21 * b1 + p22 * b2)

    zero = 0.0 * gx
    hxx = S(1.0, gx, 1.0, gx)
    hxz = S(1.0, gx, zero, gz)
    hzz = S(zero, gz, zero, gz) + 1.0
    nGxx = -0.5 * gz * dS(1.0, gx, 1.0, gx)
    nGxz = -0.5 * gz * dS(1.0, gx, zero, gz) + 0.5 * nP(1.0, gx)
    nGzz = -0.5 * gz * dS(zero, gz, zero, gz) + nP(zero, gz)
    K = hzz * gxx - 2.0 * hxz * gxz + hxx * gzz - (hzz * nGxx - 2.0 * hxz * nGxz + hxx * nGzz)
    return K, hxx, hxz, hzz, (i11, i12, i22)


def killing_operator(A: GroupMatrix, z, jet: JetSample):
    """K(g) at height z; ``jet`` holds (g, g_x, g_z, g_xx, g_xz, g_zz) in the u slots."""
    K, *_ = _killing_value(A, z, jet.ux, jet.uy, jet.uxx, jet.uxy, jet.uyy)
    return float(K) if np.ndim(K) == 0 else K


def killing_mean_curvature(A: GroupMatrix, z, jet: JetSample):
    """Mean curvature of y = g(x, z) for the normal dual to (g_x, -1, g_z)."""
    gx, gz = jet.ux, jet.uy
    K, hxx, hxz, hzz, (i11, i12, i22) = _killing_value(A, z, gx, gz, jet.uxx, jet.uxy, jet.uyy)
    nn = gx * gx * i11 - 2.0 * gx * i12 + i22 + gz * gz
    H = -K / (2.0 * (hxx * hzz - hxz * hxz) * np.sqrt(nn))
    return float(H) if np.ndim(H) == 0 else H


def killing_partials(A: GroupMatrix, z, jet: JetSample):
    """Same layout as operator_partials; first-order slots by complex step."""
    gx = np.asarray(jet.ux, dtype=float)
    gz = np.asarray(jet.uy, dtype=float)
    step = 1e-30
    K, hxx, hxz, hzz, _ = _killing_value(A, z, gx, gz, jet.uxx, jet.uxy, jet.uyy)
    Kx = _killing_value(A, z, gx + 1j * step, gz, jet.uxx, jet.uxy, jet.uyy)[0].imag / step
    Kz = _killing_value(A, z, gx, gz + 1j * step, jet.uxx, jet.uxy, jet.uyy)[0].imag / step
    return K, 0.0 * K, Kx, Kz, hzz, -2.0 * hxz, hxx, hxx + hzz


@dataclass(frozen=True)
class KillingGraphSystem:
    """Discrete minimal surface equation for Killing graphs; the grid's second axis is z."""

    A: GroupMatrix

    def pointwise(self, g: GridFunction):
        def fn(jet, I, J):
            return killing_partials(self.A, g.y[J], jet)
        return fn

    def residual(self, g: GridFunction, threads: int = 1):
        return assemble_residual(g, self.pointwise(g), threads)

    def jacobian(self, g: GridFunction, threads: int = 1):
        return assemble_jacobian(g, self.pointwise(g), threads)
