import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import coord_metric, expm_taylor, near_parabolic_matrix
from semidirect_graphs.errors import ExponentOverflow
from semidirect_graphs.lie_algebra import (
    GroupMatrix,
    GroupPoint,
    area_factor_W,
    area_factor_W_metric,
    connection_table,
    cylinder_mean_curvature,
    exp_Az,
    frame_fields,
    group_inverse,
    group_multiply,
    lie_brackets,
    metric_jet,
    metric_tensor,
    normalize_trace,
    rotate_congruence,
)

entry = st.floats(-2, 2, allow_nan=False)
height = st.floats(-5, 5, allow_nan=False)
matrices = st.builds(GroupMatrix, entry, entry, entry, entry)


def test_zero_matrix_gives_identity():
    for z in (-3.0, 0.0, 2.5):
        assert np.array_equal(exp_Az(GroupMatrix(0, 0, 0, 0), z).matrix, np.eye(2))


def test_nilpotent_exponential():
    E = exp_Az(GroupMatrix(0, 1, 0, 0), 1.0).matrix
    assert np.allclose(E, [[1, 1], [0, 1]], atol=0, rtol=0)


def test_exponential_matches_oracle():
    rng = np.random.default_rng(7)
    for i in range(200):
        M = rng.uniform(-2, 2, (2, 2)) if i % 4 else near_parabolic_matrix(rng)
        z = rng.uniform(-5, 5)
        E = exp_Az(GroupMatrix.from_array(M), z).matrix
        O = expm_taylor(M * z)
        assert np.abs(E - O).max() <= 1e-10 * max(1.0, np.abs(O).max())


def test_regimes():
    assert GroupMatrix(0, 1, -1, 0).regime() == "elliptic"
    assert GroupMatrix(1, 1, 0, 1).regime() == "parabolic"
    assert GroupMatrix(2, 0, 0, 0).regime() == "hyperbolic"
    assert GroupMatrix(1, 0, 0, 1).regime() == "parabolic"


def test_branch_continuity_near_parabolic():
    base = GroupMatrix(1.3, 1.0, 0.0, 1.3)
    ref = exp_Az(base, 2.0).matrix
    for eps in (1e-9, -1e-9, 1e-12, -1e-12):
        A = GroupMatrix(1.3, 1.0, eps, 1.3)
        assert A.regime(tol=0) != "parabolic"
        assert np.abs(exp_Az(A, 2.0).matrix - ref).max() < 1e-7


def test_overflow_guard():
    with pytest.raises(ExponentOverflow):
        exp_Az(GroupMatrix(1, 0, 0, 1), 400.0)
    with pytest.raises(ExponentOverflow):
        exp_Az(GroupMatrix(1, 0, 0, -1), 800.0)
    with pytest.raises(ExponentOverflow):
        exp_Az(GroupMatrix(1, 0, 0, -1), 20.0, cap=10.0)
    exp_Az(GroupMatrix(1, 0, 0, -1), 650.0)


def test_vectorized_matches_scalar():
    A = GroupMatrix(0.3, -1.1, 0.7, 0.2)
    zs = np.linspace(-3, 3, 11)
    F = exp_Az(A, zs)
    for k, z in enumerate(zs):
        assert np.allclose(F.matrix[:, :, k], exp_Az(A, z).matrix, rtol=1e-15, atol=0)


@settings(max_examples=100, deadline=None)
@given(matrices, height, height)
def test_one_parameter_group(A, z1, z2):
    lhs = exp_Az(A, z1 + z2).matrix
    rhs = exp_Az(A, z1).matrix @ exp_Az(A, z2).matrix
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(lhs).max())


@settings(max_examples=100, deadline=None)
@given(matrices, height)
def test_determinant(A, z):
    E = exp_Az(A, z)
    rhs = math.exp(z * A.trace)
    scale = abs(E.a11 * E.a22) + abs(E.a12 * E.a21)
    assert abs(E.det - rhs) <= 1e-10 * rhs + 1e-14 * scale


def test_group_identity_inverse_associativity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A = GroupMatrix.from_array(rng.uniform(-2, 2, (2, 2)))
        p, q, r = (GroupPoint(*rng.uniform(-2, 2, 3)) for _ in range(3))
        e = group_multiply(p, GroupPoint(0, 0, 0), A)
        assert np.allclose(e.as_array(), p.as_array(), atol=1e-14)
        o = group_multiply(p, group_inverse(p, A), A)
        assert np.abs(o.as_array()).max() < 1e-10
        lhs = group_multiply(group_multiply(p, q, A), r, A).as_array()
        rhs = group_multiply(p, group_multiply(q, r, A), A).as_array()
        assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(lhs).max())


def test_metric_at_zero():
    A = GroupMatrix(0.4, -0.7, 1.2, 0.9)
    j = metric_jet(A, 0.0)
    assert (j.Q11, j.Q22, j.Q12) == (1.0, 1.0, 0.0)
    assert math.isclose(j.G1, 2 * A.a + A.d)
    assert math.isclose(j.G2, A.a + 2 * A.d)
    assert math.isclose(j.G3, A.b + A.c)


def test_metric_diagonal_normalized():
    for a in (-0.6, 0.0, 0.8):
        A = GroupMatrix(1 + a, 0, 0, 1 - a)
        for z in (-1.5, 0.3, 2.0):
            j = metric_jet(A, z)
            assert math.isclose(j.Q11, math.exp(-2 * (1 + a) * z), rel_tol=1e-13)
            assert math.isclose(j.Q22, math.exp(-2 * (1 - a) * z), rel_tol=1e-13)
            assert math.isclose(j.G1, (3 + a) * math.exp(-2 * (1 - a) * z), rel_tol=1e-13)
            assert math.isclose(j.G2, (3 - a) * math.exp(-2 * (1 + a) * z), rel_tol=1e-13)
            assert j.G3 == 0.0


@settings(max_examples=200, deadline=None)
@given(matrices, height)
def test_metric_identity_and_positivity(A, z):
    j = metric_jet(A, z)
    lhs = j.Q11 * j.Q22 - j.Q12**2
    # the difference cancels; rounding is relative to Q11*Q22, not to the result
    rhs = math.exp(-2 * z * A.trace)
    assert abs(lhs - rhs) <= 1e-10 * rhs + 1e-14 * j.Q11 * j.Q22
    assert j.Q11 > 0 and j.Q22 > 0


def test_metric_matches_oracle_metric():
    rng = np.random.default_rng(11)
    for _ in range(50):
        M = rng.uniform(-2, 2, (2, 2))
        z = rng.uniform(-2, 2)
        G = coord_metric(M, z)
        Gp = metric_tensor(GroupMatrix.from_array(M), z)
        assert np.allclose(G, Gp, rtol=1e-10, atol=1e-12)


def test_metric_derivatives_by_finite_difference():
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(30):
        A = GroupMatrix.from_array(rng.uniform(-2, 2, (2, 2)))
        z = rng.uniform(-1.5, 1.5)
        j, jp, jm = metric_jet(A, z), metric_jet(A, z + h), metric_jet(A, z - h)
        for name in ("Q11", "Q22", "Q12", "G1", "G2", "G3"):
            fd = (getattr(jp, name) - getattr(jm, name)) / (2 * h)
            exact = getattr(j, "d" + name)
            assert abs(fd - exact) < 1e-6 * max(1.0, abs(exact))


def test_W_forms():
    A0 = GroupMatrix(0, 0, 0, 0)
    assert area_factor_W(A0, 1.0, 0.0, 0.0) == 1.0
    assert math.isclose(area_factor_W(A0, 0.0, 3.0, 4.0), math.sqrt(26))
    rng = np.random.default_rng(2)
    for _ in range(100):
        A = GroupMatrix.from_array(rng.uniform(-2, 2, (2, 2)))
        z, p1, p2 = rng.uniform(-2, 2, 3)
        w1 = area_factor_W(A, z, p1, p2)
        w2 = area_factor_W_metric(A, z, p1, p2)
        assert w1 >= 1.0
        assert abs(w1 - w2) < 1e-10 * w1


def test_frame_at_origin_and_killing_field():
    A = GroupMatrix(0.5, 1.5, -0.3, 2.0)
    Es, Fs = frame_fields(A, GroupPoint(0, 0, 0))
    for i in range(3):
        assert np.array_equal(Es[i], np.eye(3)[i])
        assert np.array_equal(Fs[i], np.eye(3)[i])
    _, Fs = frame_fields(A, GroupPoint(2.0, -1.0, 0.7))
    assert np.allclose(Fs[2][:2], [0.5 * 2 - 1.5, -0.3 * 2 - 2.0])


def test_frame_orthonormal():
    rng = np.random.default_rng(4)
    for _ in range(100):
        A = GroupMatrix.from_array(rng.uniform(-2, 2, (2, 2)))
        p = GroupPoint(*rng.uniform(-2, 2, 3))
        Es, _ = frame_fields(A, p)
        G = metric_tensor(A, p.z)
        gram = np.array([[Ei @ G @ Ej for Ej in Es] for Ei in Es])
        assert np.abs(gram - np.eye(3)).max() < 1e-10


def test_connection_table():
    A = GroupMatrix(0.3, -1.2, 0.8, 1.7)
    nab = connection_table(A)
    br = lie_brackets(A)
    assert np.array_equal(nab[(3, 3)], np.zeros(3))
    assert np.allclose(nab[(1, 2)] - nab[(2, 1)], br[(1, 2)])
    assert np.allclose(nab[(3, 1)] - nab[(1, 3)], [A.a, A.c, 0.0])
    assert np.allclose(nab[(3, 2)] - nab[(2, 3)], [A.b, A.d, 0.0])
    # metric compatibility in an orthonormal frame: coefficients antisymmetric
    for i in range(1, 4):
        C = np.array([nab[(i, j)] for j in range(1, 4)])
        assert np.allclose(C, -C.T)


@settings(max_examples=50, deadline=None)
@given(matrices, st.floats(-10, 10, allow_nan=False))
def test_rotation_invariants(A, theta):
    B = rotate_congruence(A, theta)
    assert abs(B.trace - A.trace) < 1e-12 * max(1, abs(A.trace)) + 1e-12
    assert abs(B.det - A.det) < 1e-12 * max(1, abs(A.det)) + 1e-12
    assert abs(B.milnor_disc - A.milnor_disc) < 1e-11
    assert rotate_congruence(A, 0.0) == A


def test_rotation_aligns_direction():
    v = np.array([1.0, 2.0])
    theta = -math.atan2(v[1], v[0])
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    w = R @ v
    assert abs(w[1]) < 1e-15 and w[0] > 0


def test_normalize_trace():
    n = normalize_trace(GroupMatrix(2, 1, 0, 4))
    assert math.isclose(n.matrix.trace, 2.0)
    assert not n.flipped
    n = normalize_trace(GroupMatrix(-1, 0.5, 0, -1))
    assert n.flipped and math.isclose(n.matrix.trace, 2.0)
    assert n.matrix == GroupMatrix(1, -0.5, 0, 1)
    n = normalize_trace(GroupMatrix(1, 2, 3, -1))
    assert n.unimodular and n.scale == 1.0
    # det = 1 - disc after trace-2 normalization
    m = normalize_trace(GroupMatrix(0.7, -2.0, 1.3, 2.9)).matrix
    assert math.isclose(m.det, 1 - m.milnor_disc, abs_tol=1e-14)


def test_cylinder_curvature():
    A = GroupMatrix(1, 0, 0, 1)
    assert cylinder_mean_curvature(A, 0.0, 3.0) == 0.0
    assert math.isclose(cylinder_mean_curvature(A, 1.0, math.log(2)), 1.0)
    # trace 0 and rotation-type A: |e^{-Az} tau| = 1
    R = GroupMatrix(0, 1, -1, 0)
    for z in (-2.0, 0.5, 3.0):
        assert math.isclose(cylinder_mean_curvature(R, 0.8, z), 0.4)
    # frozen from the divergence oracle: unit circle at (1, 0), left normal
    B = GroupMatrix(0.5, 0.3, -0.2, 1.0)
    up = (0.0, 1.0)
    assert math.isclose(cylinder_mean_curvature(B, 1.0, math.log(2), up), 1.3547517496, rel_tol=1e-8)
    assert math.isclose(cylinder_mean_curvature(B, 1.0, -0.7, up), 0.1736457612, rel_tol=1e-8)
