import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mean_curvature_divergence
from semidirect_graphs.errors import StencilError
from semidirect_graphs.grid import Disk, Rectangle, build_grid, sample
from semidirect_graphs.lie_algebra import GroupMatrix, exp_Az, metric_jet
from semidirect_graphs.mc_operator import (
    JetSample,
    discrete_jacobian,
    discrete_residual,
    ellipticity_matrix,
    interior_index,
    killing_mean_curvature,
    killing_operator,
    killing_partials,
    KillingGraphSystem,
    mean_curvature_H,
    operator_partials,
    operator_Q,
    prescribed_operator,
    residual_vector,
)

entry = st.floats(-2, 2, allow_nan=False)
matrices = st.builds(GroupMatrix, entry, entry, entry, entry)
small = st.floats(-1.5, 1.5, allow_nan=False)

ZERO = GroupMatrix(0, 0, 0, 0)
NIL = GroupMatrix(0, 1, 0, 0)


def scherk_jet(x, y):
    t, s = math.tan(x), math.tan(y)
    return JetSample(
        u=math.log(math.cos(x) / math.cos(y)),
        ux=-t, uy=s, uxx=-(1 + t * t), uxy=0.0, uyy=1 + s * s,
    )


def test_constant_jets():
    assert operator_Q(NIL, JetSample(3.7)) == 0.0
    assert operator_Q(GroupMatrix(1.2, 0.4, -3, 0.8), JetSample(0.0)) == 2.0


def test_scherk_jet_is_minimal():
    assert abs(operator_Q(ZERO, scherk_jet(0.3, 0.1))) < 1e-12
    assert abs(mean_curvature_H(ZERO, scherk_jet(-0.7, 0.4))) < 1e-12


def test_euclidean_examples():
    assert mean_curvature_H(ZERO, JetSample(0.5, 1.3, -2.0)) == 0.0
    assert mean_curvature_H(ZERO, JetSample(0.0, uxx=-1.0, uyy=-1.0)) == -1.0


def test_matches_divergence_oracle():
    rng = np.random.default_rng(12)
    for _ in range(25):
        A = GroupMatrix.from_array(rng.uniform(-1, 1, (2, 2)))
        jet = rng.uniform(-1, 1, 6)
        h = mean_curvature_H(A, JetSample(*jet))
        ref = mean_curvature_divergence(A.as_array(), jet)
        assert abs(h - ref) < 1e-7 * max(1.0, abs(ref))


@settings(max_examples=100, deadline=None)
@given(matrices, small, small, small, small, small, small)
def test_sign_consistency(A, u, ux, uy, uxx, uxy, uyy):
    jet = JetSample(u, ux, uy, uxx, uxy, uyy)
    q, h = operator_Q(A, jet), mean_curvature_H(A, jet)
    assert np.sign(q) == np.sign(h)


@settings(max_examples=200, deadline=None)
@given(matrices, st.floats(-3, 3), st.floats(-5, 5), st.floats(-5, 5))
def test_ellipticity(A, z, p1, p2):
    M = ellipticity_matrix(A, z, p1, p2)
    lo, hi = M.eigenvalues()
    assert lo > 0 and hi > 0
    m = metric_jet(A, z)
    expected = math.exp(-2 * z * A.trace) + m.Q22 * p1**2 - 2 * m.Q12 * p1 * p2 + m.Q11 * p2**2
    assert abs(M.det - expected) <= 1e-9 * (abs(expected) + M.m11 * M.m22)
    assert M.det >= math.exp(-2 * z * A.trace) * (1 - 1e-9) - 1e-12 * M.m11 * M.m22


def test_ellipticity_identity_at_origin():
    M = ellipticity_matrix(GroupMatrix(0.3, 2, 1, -1), 0.0, 0.0, 0.0)
    assert np.array_equal(M.as_array(), np.eye(2))


def test_left_translation_jet():
    rng = np.random.default_rng(8)
    for _ in range(50):
        A = GroupMatrix.from_array(rng.uniform(-1, 1, (2, 2)))
        z0 = rng.uniform(-1, 1)
        u, ux, uy, uxx, uxy, uyy = rng.uniform(-1, 1, 6)
        Binv = np.linalg.inv(exp_Az(A, z0).matrix)
        g = Binv.T @ np.array([ux, uy])
        Hs = Binv.T @ np.array([[uxx, uxy], [uxy, uyy]]) @ Binv
        ju = JetSample(u, ux, uy, uxx, uxy, uyy)
        jv = JetSample(u + z0, g[0], g[1], Hs[0, 0], Hs[0, 1], Hs[1, 1])
        assert abs(mean_curvature_H(A, jv) - mean_curvature_H(A, ju)) < 1e-9
        qu, qv = operator_Q(A, ju), operator_Q(A, jv)
        assert abs(qv - math.exp(-2 * z0 * A.trace) * qu) < 1e-9 * max(1, abs(qv))


def test_prescribed_operator_vanishes_at_own_curvature():
    rng = np.random.default_rng(1)
    for _ in range(20):
        A = GroupMatrix.from_array(rng.uniform(-1, 1, (2, 2)))
        jet = JetSample(*rng.uniform(-1, 1, 6))
        H = mean_curvature_H(A, jet)
        assert abs(prescribed_operator(A, jet, H)) < 1e-12
        F, *_ = operator_partials(A, jet, H)
        assert abs(F) < 1e-12


@pytest.mark.parametrize("with_H", [False, True])
def test_partials_by_finite_difference(with_H):
    rng = np.random.default_rng(21)
    names = ["u", "ux", "uy", "uxx", "uxy", "uyy"]
    for _ in range(20):
        A = GroupMatrix.from_array(rng.uniform(-1, 1, (2, 2)))
        vals = rng.uniform(-1, 1, 6)
        H = 0.37 if with_H else None
        parts = operator_partials(A, JetSample(*vals), H)
        for k in range(6):
            step = 1e-6
            vp, vm = vals.copy(), vals.copy()
            vp[k] += step
            vm[k] -= step
            fd = (operator_partials(A, JetSample(*vp), H)[0] - operator_partials(A, JetSample(*vm), H)[0]) / (2 * step)
            assert abs(fd - parts[1 + k]) < 1e-6 * max(1, abs(fd)), names[k]


def test_quadratic_residual_exact():
    g = build_grid(Rectangle(-0.5, 0.5, -0.4, 0.4), 0.1)
    c = dict(u=0.2, ux=0.3, uy=-0.5, uxx=1.1, uxy=-0.4, uyy=0.7)

    def poly(x, y):
        return c["u"] + c["ux"] * x + c["uy"] * y + 0.5 * c["uxx"] * x * x + c["uxy"] * x * y + 0.5 * c["uyy"] * y * y

    u = sample(g, poly)
    R = discrete_residual(ZERO, u)
    I, J = interior_index(u)
    X, Y = u.coords()
    for i, j in zip(I, J):
        x, y = X[i, j], Y[i, j]
        jet = JetSample(poly(x, y), c["ux"] + c["uxx"] * x + c["uxy"] * y,
                        c["uy"] + c["uxy"] * x + c["uyy"] * y, c["uxx"], c["uxy"], c["uyy"])
        assert abs(R.values[i, j] - operator_Q(ZERO, jet)) < 1e-12
    assert np.all(R.values[u.boundary] == 0.0)


def test_scherk_residual_second_order():
    errs = []
    for h in (1 / 32, 1 / 64, 1 / 128):
        g = build_grid(Disk(0.5), h)
        u = sample(g, lambda x, y: np.log(np.cos(x) / np.cos(y)))
        errs.append(np.nanmax(np.abs(discrete_residual(ZERO, u).values)))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    # ratios approach 4 from below (3.65, 3.82)
    assert 3.5 < r1 < r2 < 4.2


def test_constant_trace_zero_residual():
    g = build_grid(Disk(1.0), 0.1)
    u = sample(g, lambda x, y: 2.5 + 0 * x)
    assert np.nanmax(np.abs(discrete_residual(GroupMatrix(1, 0, 0, -1), u).values)) == 0.0


@pytest.mark.parametrize("H", [None, 0.3])
def test_jacobian_directional_derivative(H):
    rng = np.random.default_rng(3)
    A = GroupMatrix(0.8, 0.4, -0.3, 1.1)
    g = build_grid(Disk(1.0), 0.1)
    u = sample(g, lambda x, y: 0.3 * np.sin(2 * x) + 0.2 * y * y + 0.1 * x * y)
    I, J = interior_index(u)
    d = rng.standard_normal(len(I))
    Jm = discrete_jacobian(A, u, H)
    step = 1e-6
    up, um = u.copy(), u.copy()
    up.values[I, J] += step * d
    um.values[I, J] -= step * d
    fd = (residual_vector(A, up, H)[0] - residual_vector(A, um, H)[0]) / (2 * step)
    an = Jm @ d
    assert np.linalg.norm(fd - an) < 1e-5 * np.linalg.norm(fd)


def test_jacobian_structure():
    g = build_grid(Rectangle(0, 1, 0, 1), 0.1)
    u = sample(g, lambda x, y: 1.0 + 0 * x)
    Jm = discrete_jacobian(NIL, u).tocsr()
    I, J = interior_index(u)
    n = len(I)
    k = int(np.argmin(np.abs(I - 5) + np.abs(J - 5)))
    assert Jm[k].nnz == 9
    assert Jm.getnnz(axis=1).max() <= 9
    # trace zero: no zeroth-order contribution, so rows of the Laplacian-like stencil sum to 0 inside
    row = Jm[k].toarray().ravel()
    assert abs(row.sum()) < 1e-12
    assert n == (g.mask == 1).sum()


def test_threads_bitwise_identical():
    A = GroupMatrix(0.8, 0.4, -0.3, 1.1)
    g = build_grid(Disk(1.0), 0.05)
    u = sample(g, lambda x, y: 0.3 * np.sin(2 * x) + 0.2 * y * y)
    r1 = residual_vector(A, u, threads=1)[0]
    r4 = residual_vector(A, u, threads=4)[0]
    assert np.array_equal(r1, r4)
    j1, j4 = discrete_jacobian(A, u, threads=1), discrete_jacobian(A, u, threads=3)
    assert (j1 != j4).nnz == 0


def test_stencil_error():
    g = build_grid(Disk(1.0), 0.1)
    g.mask[g.mask == 2] = 0
    g.mask[g.mask.shape[0] // 2, 0] = 1
    with pytest.raises(StencilError):
        discrete_residual(ZERO, g)


def pi_jet_of_killing(g, gx, gz, gxx, gxz, gzz, z):
    """Jet of z = u(x, y) describing the same surface as y = g(x, z)."""
    ux, uy = -gx / gz, 1.0 / gz
    uxx = -(gxx + 2 * gxz * ux + gzz * ux * ux) / gz
    uxy = -(gxz + gzz * ux) * uy / gz
    uyy = -gzz * uy * uy / gz
    return JetSample(z, ux, uy, uxx, uxy, uyy)


def test_killing_operator_euclidean():
    rng = np.random.default_rng(3)
    for _ in range(20):
        gx, gz, gxx, gxz, gzz = rng.uniform(-1, 1, 5)
        K = killing_operator(ZERO, 0.3, JetSample(0.0, gx, gz, gxx, gxz, gzz))
        mse = (1 + gz * gz) * gxx - 2 * gx * gz * gxz + (1 + gx * gx) * gzz
        assert abs(K - mse) < 1e-13


@pytest.mark.parametrize("seed", range(5))
def test_killing_mean_curvature_matches_divergence_oracle(seed):
    rng = np.random.default_rng(seed)
    A = GroupMatrix(*rng.uniform(-1.5, 1.5, 4))
    for _ in range(8):
        z = rng.uniform(-1, 1)
        gx, gxx, gxz, gzz = rng.uniform(-1, 1, 4)
        gz = rng.choice([-1, 1]) * rng.uniform(0.4, 1.5)
        hk = killing_mean_curvature(A, z, JetSample(0.0, gx, gz, gxx, gxz, gzz))
        pj = pi_jet_of_killing(0.0, gx, gz, gxx, gxz, gzz, z)
        ref = mean_curvature_divergence(A.as_array(), (pj.u, pj.ux, pj.uy, pj.uxx, pj.uxy, pj.uyy))
        assert abs(hk - math.copysign(1.0, pj.uy) * ref) < 1e-7 * max(1.0, abs(ref))
        assert abs(hk - math.copysign(1.0, pj.uy) * mean_curvature_H(A, pj)) < 1e-12 * max(1.0, abs(ref))


def test_killing_partials_against_differences():
    A = GroupMatrix(0.7, 0.4, -0.3, 1.1)
    jet = [0.0, 0.3, -0.8, 0.5, -0.2, 0.9]
    z = 0.4
    K, Ku, Kx, Kz, Kxx, Kxz, Kzz, scale = killing_partials(A, z, JetSample(*jet))
    assert Ku == 0.0 and scale > 0
    eps = 1e-6
    for slot, val in zip(range(1, 6), (Kx, Kz, Kxx, Kxz, Kzz)):
        jp, jm = list(jet), list(jet)
        jp[slot] += eps
        jm[slot] -= eps
        fd = (killing_operator(A, z, JetSample(*jp)) - killing_operator(A, z, JetSample(*jm))) / (2 * eps)
        assert abs(val - fd) < 1e-7


def test_killing_system_jacobian_matches_differences():
    A = GroupMatrix(1, 0, 0, 1)
    g = build_grid(Rectangle(0, 1, 0, 0.6), 1 / 8)
    X, Z = g.coords()
    g.values[g.active] = (0.3 * np.sin(np.pi * X) * (1 - Z) + 0.05 * X * Z)[g.active]
    sysk = KillingGraphSystem(A)
    J = sysk.jacobian(g).toarray()
    I, Jj = interior_index(g)
    F0, _ = sysk.residual(g)
    eps = 1e-7
    for k in (0, len(I) // 2, len(I) - 1):
        gp = g.copy()
        gp.values[I[k], Jj[k]] += eps
        fd = (sysk.residual(gp)[0] - F0) / eps
        assert np.max(np.abs(J[:, k] - fd)) < 1e-5 * max(1.0, np.max(np.abs(J[:, k])))
