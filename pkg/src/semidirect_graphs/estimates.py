"""Explicit constants and barriers behind the height, oscillation and exhaustion estimates.

Everything is stated for A normalized to trace 2, written as (1+a b; c 1-a).
Public functions accept any matrix with positive trace and normalize it by
a homothety (see lie_algebra.normalize_trace), recording the scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoBranchError, NoCertificateError, ProfileUnavailable
from .lie_algebra import GroupMatrix, exp_Az, metric_jet, normalize_trace
from .mc_operator import JetSample

EPS_INFLATE = 1e-6


def _trace2(A: GroupMatrix):
    """Normalized matrix and its (a, b, c); raises for trace <= 0."""
    if not A.trace > 0:
        raise DomainError("a positive trace is required")
    n = normalize_trace(A)
    a, b, c = n.params
    return n, a, b, c


# --- lambda -----------------------------------------------------------------


@dataclass(frozen=True)
class LambdaBound:
    """Lower bound for Q22 e^{2z} (branch i) and/or Q11 e^{2z} (branch ii)."""

    lam: float
    which_branch: str
    attained_at: float
    lam_i: float | None = None
    lam_ii: float | None = None
    regime: str = ""


def _inf_quadratic_form(a, b, delta):
    """min over the unit circle of (cos + (a/d) sin)^2 + (b/d sin)^2."""
    M = np.array([[1.0, a / delta], [a / delta, (a * a + b * b) / delta**2]])
    w, V = np.linalg.eigh(M)
    v = V[:, 0]
    return float(w[0]), math.atan2(v[1], v[0]) / delta


def _inf_parabolic(a, b):
    s = a * a + b * b
    if s == 0.0:
        return 1.0, 0.0
    return b * b / s, -a / s


def _inf_hyperbolic(a, b, delta):
    r = a / delta
    P = 0.25 * ((1 + r) ** 2 + (b / delta) ** 2)
    R = 0.25 * ((1 - r) ** 2 + (b / delta) ** 2)
    Q0 = 0.5 * (1 - r * r - (b / delta) ** 2)
    if P == 0.0 or R == 0.0:
        return Q0, math.inf if P == 0.0 else -math.inf
    return Q0 + 2.0 * math.sqrt(P * R), math.log(R / P) / (4.0 * delta)


def branch_infima(a: float, b: float, c: float, regime: str):
    """Infima of f = (a11^0)^2 + (a12^0)^2 and g = (a21^0)^2 + (a22^0)^2 over all z.

    Returns ((inf f, argmin f), (inf g, argmin g)); argmin is +-inf when the
    infimum is only approached asymptotically.
    """
    disc = a * a + b * c
    if regime == "elliptic":
        d = math.sqrt(-disc)
        return _inf_quadratic_form(a, b, d), _inf_quadratic_form(-a, c, d)
    if regime == "parabolic":
        return _inf_parabolic(a, b), _inf_parabolic(-a, c)
    d = math.sqrt(disc)
    return _inf_hyperbolic(a, b, d), _inf_hyperbolic(-a, c, d)


def lambda_constant(A: GroupMatrix) -> LambdaBound:
    n, a, b, c = _trace2(A)
    regime = n.matrix.regime()
    (fi, zi), (gi, zg) = branch_infima(a, b, c, regime)
    if regime in ("elliptic", "parabolic"):
        lam = min(fi, gi)
        return LambdaBound(lam, "both", zi if fi <= gi else zg, fi, gi, regime)
    if b != 0.0:
        return LambdaBound(fi, "i", zi, fi, None, regime)
    if c != 0.0:
        return LambdaBound(gi, "ii", zg, None, gi, regime)
    raise NoBranchError("diagonal matrix: use the diagonal operators with lambda = 1")


def Lambda_constant(A: GroupMatrix) -> float:
    _, a, b, c = _trace2(A)
    if b == 0.0 and c == 0.0:
        return 3.0 + abs(a)
    return 3.0 + abs(a) + abs(b + c) / 2.0


def _branch_data(A: GroupMatrix):
    """(lam, Lambda, kappa, axis, variant) driving the barrier construction."""
    n, a, b, c = _trace2(A)
    Lam = Lambda_constant(A)
    if b == 0.0 and c == 0.0:
        kappa = 1.0 + abs(a)
        if a >= 0:
            return 1.0, Lam, kappa, "x", "R3", "diagonal"
        return 1.0, Lam, kappa, "y", "R4", "diagonal"
    lb = lambda_constant(A)
    if lb.which_branch == "ii":
        return lb.lam_ii, Lam, 1.0, "y", "R2", "ii"
    lam = lb.lam_i if lb.which_branch == "i" else lb.lam
    return lam, Lam, 1.0, "x", "R1", lb.which_branch


# --- height certificate ------------------------------------------------------


@dataclass(frozen=True)
class HeightCertificate:
    """Constants of the height estimate sup u <= max(sup_bd u, alpha) + C.

    Lambda, lam, M, alpha, l, L, C refer to the trace-2 normalized group;
    ``C_original`` is C converted back to the heights of the input matrix.
    ``log_l`` is kept because l overflows for very negative alpha.
    """

    Lambda: float
    lam: float
    M: float
    alpha: float
    l: float
    L: float
    C: float
    log_l: float = 0.0
    log_l_star: float = -math.inf
    kappa: float = 1.0
    eps: float = EPS_INFLATE
    branch: str = ""
    axis: str = "x"
    variant: str = "R1"
    scale: float = 1.0
    C_original: float = 0.0
    defC: float = -math.inf
    trivial: bool = False
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "Lambda": self.Lambda, "lambda": self.lam, "M": self.M, "alpha": self.alpha,
            "l": self.l, "L": self.L, "C": self.C, "log_l": self.log_l,
            "log_l_star": self.log_l_star, "kappa": self.kappa, "eps": self.eps,
            "branch": self.branch, "axis": self.axis, "variant": self.variant,
            "scale": self.scale, "C_original": self.C_original, "defC": self.defC,
            "trivial": self.trivial, "meta": self.meta,
        }


def defC_value(Lam, lam, M, alpha, log_l, kappa=1.0) -> float:
    """Left side of the certificate inequality; negative means R(v + alpha) < 0."""
    L = 1.0 + Lam
    log_term = (
        math.log(2.0 * L) + (2.0 - 2.0 * kappa / L) * math.log(M)
        - math.log(lam) - 2.0 * kappa * alpha - (2.0 * kappa / L) * log_l
    )
    return -1.0 / L + math.exp(log_term)


def height_certificate(A: GroupMatrix, M: float, alpha: float, eps: float = EPS_INFLATE) -> HeightCertificate:
    """Certificate for domains inside the strip {1 < x < M} (or y for branch ii)."""
    if not M > 1:
        raise DomainError("strip bound M must exceed 1")
    if A.trace <= 0:
        return HeightCertificate(
            Lambda=0.0, lam=1.0, M=M, alpha=alpha, l=1.0, L=1.0, C=0.0,
            trivial=True, meta={"flipped": A.trace < 0},
        )
    t = normalize_trace(A).scale  # normalized lengths are original lengths / t
    Mn = 1.0 + (M - 1.0) / t
    an = alpha / t
    lam, Lam, kappa, axis, variant, branch = _branch_data(A)
    L = 1.0 + Lam
    log_l_star = (L / (2.0 * kappa)) * (
        math.log(2.0) + 2.0 * math.log(L) + (2.0 - 2.0 * kappa / L) * math.log(Mn)
        - math.log(lam) - 2.0 * kappa * an
    )
    log_l = max(0.0, log_l_star + math.log1p(eps))
    l = math.exp(log_l) if log_l < 700 else math.inf
    C = (log_l + math.log(Mn)) / L
    return HeightCertificate(
        Lambda=Lam, lam=lam, M=Mn, alpha=an, l=l, L=L, C=C, log_l=log_l,
        log_l_star=log_l_star, kappa=kappa, eps=eps, branch=branch, axis=axis,
        variant=variant, scale=t, C_original=C * t,
        defC=defC_value(Lam, lam, Mn, an, log_l, kappa),
        meta={"input_M": M, "input_alpha": alpha},
    )


def barrier_v(cert: HeightCertificate, x):
    """v = ln(l x)/L on the strip 1 < x < M (normalized frame)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 1.0) or np.any(x >= cert.M):
        raise DomainError("barrier is defined for 1 < x < M")
    v = (cert.log_l + np.log(x)) / cert.L
    return float(v) if v.ndim == 0 else v


def barrier_jet(cert: HeightCertificate, s, shift: float = 0.0) -> JetSample:
    """Jet of v + shift at strip coordinate s, along the certificate's axis."""
    s = np.asarray(s, dtype=float)
    v = barrier_v(cert, s) + shift
    d1 = 1.0 / (cert.L * s)
    d2 = -1.0 / (cert.L * s * s)
    if cert.axis == "x":
        return JetSample(v, d1, 0.0 * s, d2, 0.0 * s, 0.0 * s)
    return JetSample(v, 0.0 * s, d1, 0.0 * s, 0.0 * s, d2)


def normalized_residual_R(A: GroupMatrix, variant: str, u_jet: JetSample, w_jet: JetSample):
    """Operator with coefficients frozen at u and derivatives of w, for trace-2 A.

    R1/R2 divide by Q22(u)/Q11(u) and use the zeroth-order term 2 e^{-2u} e^{-2w};
    R3/R4 (diagonal A) use 2 e^{-2(1+a)w} / 2 e^{-2(1-a)w}. Each equals the
    operator Q(u) divided by Q22(u) or Q11(u) when w = u.
    """
    if abs(A.trace - 2.0) > 1e-12:
        raise DomainError("normalized_residual_R needs a trace-2 matrix")
    m = metric_jet(A, u_jet.u)
    u = np.asarray(u_jet.u, dtype=float)
    w = np.asarray(w_jet.u, dtype=float)
    wx, wy = w_jet.ux, w_jet.uy
    core = (
        w_jet.uxx * (m.Q22 + wy * wy)
        + w_jet.uyy * (m.Q11 + wx * wx)
        - 2.0 * w_jet.uxy * (m.Q12 + wx * wy)
        + m.G1 * wx * wx
        + m.G2 * wy * wy
        + m.G3 * wx * wy
    )
    a = A.a0
    if variant == "R1":
        r = (core + 2.0 * np.exp(-2.0 * u) * np.exp(-2.0 * w)) / m.Q22
    elif variant == "R2":
        r = (core + 2.0 * np.exp(-2.0 * u) * np.exp(-2.0 * w)) / m.Q11
    elif variant == "R3":
        r = core / m.Q22 + 2.0 * np.exp(-2.0 * (1.0 + a) * w)
    elif variant == "R4":
        r = core / m.Q11 + 2.0 * np.exp(-2.0 * (1.0 - a) * w)
    else:
        raise DomainError(f"unknown variant {variant!r}")
    return float(r) if np.ndim(r) == 0 else r


# --- oscillation certificate -------------------------------------------------


@dataclass(frozen=True)
class OscCertificate:
    k: float
    j_of_k: int
    C_of_k: float
    Lambda: float = 0.0
    lam: float = 1.0
    M: float = 1.0
    kappa: float = 1.0
    scale: float = 1.0
    C_original: float = 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k, "j_of_k": str(self.j_of_k) if self.j_of_k > 2**53 else self.j_of_k,
            "C_of_k": self.C_of_k, "Lambda": self.Lambda, "lambda": self.lam, "M": self.M,
            "kappa": self.kappa, "scale": self.scale, "C_original": self.C_original,
        }


def osc_lhs(j: int, Lam: float, M: float, kappa: float = 1.0) -> float:
    """log of (Lambda+j)^2 / (j M^{2 kappa/(Lambda+j)})."""
    return math.log(j) + 2.0 * math.log1p(Lam / j) - 2.0 * kappa * math.log(M) / (Lam + j)


def osc_rhs(k: float, lam: float, M: float, kappa: float = 1.0) -> float:
    """log of (lam / (2 M^2)) e^{2 kappa k}."""
    return math.log(lam / (2.0 * M * M)) + 2.0 * kappa * k


def largest_j(Lam: float, lam: float, M: float, k: float, kappa: float = 1.0) -> int | None:
    """Largest positive integer j with osc_lhs(j) < osc_rhs(k), or None."""
    rhs = osc_rhs(k, lam, M, kappa)
    j0 = max(1, math.ceil(Lam))
    if osc_lhs(j0, Lam, M, kappa) < rhs:
        # osc_lhs increases for j >= Lambda: bracket then bisect
        lo, hi = j0, 2 * j0
        while osc_lhs(hi, Lam, M, kappa) < rhs:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if osc_lhs(mid, Lam, M, kappa) < rhs:
                lo = mid
            else:
                hi = mid
        return lo
    for j in range(j0 - 1, 0, -1):
        if osc_lhs(j, Lam, M, kappa) < rhs:
            return j
    return None


def osc_certificate(A: GroupMatrix, M: float, k: float) -> OscCertificate:
    if not M > 1:
        raise DomainError("strip bound M must exceed 1")
    t = normalize_trace(A).scale if A.trace > 0 else 1.0
    if A.trace <= 0:
        raise DomainError("oscillation certificates need a positive trace")
    Mn = 1.0 + (M - 1.0) / t
    kn = k / t
    lam, Lam, kappa, *_ = _branch_data(A)
    j = largest_j(Lam, lam, Mn, kn, kappa)
    if j is None:
        raise NoCertificateError(f"no admissible j for k = {k} (threshold not reached)")
    C = math.log(Mn) / (Lam + j)
    return OscCertificate(k, j, C, Lam, lam, Mn, kappa, t, C * t)


# --- exhaustion profile ------------------------------------------------------


@dataclass(frozen=True)
class ScherkProfile:
    """Exhaustion profile f_c = f + c over the segment [0, L].

    In the trace-2 normalized group f(x) = (1/Lambda) ln(cos(kx)/cos(kL)) with
    k = sqrt(2 Lambda/lambda). For trace t0 > 0 lengths are rescaled by
    scale = 2/t0: f(x) = scale * f_n(x/scale). Trace 0 gives f = 0.
    """

    L: float
    L0: float
    c: float
    lam: float
    Lambda: float
    scale: float = 1.0
    unimodular: bool = False

    @property
    def k(self) -> float:
        return 0.0 if self.unimodular else math.sqrt(2.0 * self.Lambda / self.lam)

    def _xi(self, x):
        return np.asarray(x, dtype=float) / self.scale

    def f(self, x):
        """Profile without the level c."""
        if self.unimodular:
            return np.zeros_like(np.asarray(x, dtype=float))
        k, Ln = self.k, self.L / self.scale
        return self.scale * np.log(np.cos(k * self._xi(x)) / math.cos(k * Ln)) / self.Lambda

    def fc(self, x):
        return self.f(x) + self.c

    def df(self, x):
        if self.unimodular:
            return np.zeros_like(np.asarray(x, dtype=float))
        k = self.k
        return -(k / self.Lambda) * np.tan(k * self._xi(x))

    def d2f(self, x):
        if self.unimodular:
            return np.zeros_like(np.asarray(x, dtype=float))
        k = self.k
        return -(k * k / self.Lambda) / np.cos(k * self._xi(x)) ** 2 / self.scale

    def ode_residual(self, x):
        """f'' + Lambda f'^2 + 2/lambda, evaluated in normalized units."""
        if self.unimodular:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.d2f(x) * self.scale + self.Lambda * self.df(x) ** 2 + 2.0 / self.lam

    def with_level(self, c: float) -> "ScherkProfile":
        return ScherkProfile(self.L, self.L0, c, self.lam, self.Lambda, self.scale, self.unimodular)

    def to_dict(self) -> dict:
        return {"L": self.L, "L0": self.L0, "c": self.c, "lambda": self.lam,
                "Lambda": self.Lambda, "scale": self.scale, "unimodular": self.unimodular}


def profile_constants(A: GroupMatrix) -> tuple[float, float]:
    """(lambda, Lambda) used by the exhaustion profile of a positive-trace matrix."""
    n, a, b, c = _trace2(A)
    Lam = Lambda_constant(A)
    regime = n.matrix.regime()
    if b != 0.0 or regime != "hyperbolic":
        (fi, _), _ = branch_infima(a, b, c, regime)
        return fi, Lam
    if a < -1.0:
        raise ProfileUnavailable("b = 0 with a < -1: the zeroth-order term is not bounded on z >= 0")
    return 1.0, Lam


def L0_of(A: GroupMatrix) -> float:
    if A.trace == 0:
        return math.inf
    lam, Lam = profile_constants(A)
    return math.sqrt(lam / (2.0 * Lam)) * math.pi / 2.0 * normalize_trace(A).scale


def scherk_profile(A: GroupMatrix, L: float, c: float = 0.0) -> ScherkProfile:
    if not L > 0:
        raise DomainError("segment length must be positive")
    if c < 0:
        raise DomainError("level c must be nonnegative")
    if A.trace < 0:
        raise ProfileUnavailable("negative trace is not covered by the exhaustion profile")
    if A.trace == 0:
        return ScherkProfile(L, math.inf, c, 1.0, 0.0, 1.0, True)
    lam, Lam = profile_constants(A)
    t = normalize_trace(A).scale
    L0 = math.sqrt(lam / (2.0 * Lam)) * math.pi / 2.0 * t
    if L >= L0:
        raise ProfileUnavailable(f"L = {L:.6g} is not below L0 = {L0:.6g}")
    return ScherkProfile(L, L0, c, lam, Lam, t, False)


# --- curve sequences approaching a line --------------------------------------


@dataclass(frozen=True)
class Claim2Curve:
    n: int
    z_n: float
    p: np.ndarray
    points: np.ndarray
    curvature: float
    deviation: float
    tangent: np.ndarray
    regime: str


def claim2_height(A: GroupMatrix, n: int) -> float:
    nm = normalize_trace(A).matrix
    if nm.regime() == "elliptic":
        return 2.0 * n * math.pi / math.sqrt(-nm.milnor_disc)
    return float(n)


def claim2_curves(A: GroupMatrix, n: int, samples: int = 2001) -> Claim2Curve:
    """Curve e^{A z_n}(S^1 - p) through the origin and its flatness near it.

    p is the unit vector mapped to the minor-axis endpoint of the image
    ellipse, where the image has the least curvature. Near the origin the
    curve is written as sin(s) B tau - 2 sin(s/2)^2 B p, which keeps the
    normal offset accurate even when the curve is astronomically large.
    """
    nrm = normalize_trace(A)
    if nrm.unimodular:
        raise DomainError("needs a non-unimodular matrix")
    An = nrm.matrix
    z = claim2_height(A, n)
    if An.regime() == "elliptic":
        B = math.exp(z) * np.eye(2)  # e^{A0 z_n} is exactly the identity
    else:
        B = exp_Az(An, z).matrix
    _, S, Vt = np.linalg.svd(B)
    p = Vt[1]
    tau = np.array([-p[1], p[0]])
    curvature = float(S[1] / S[0] ** 2)

    Bt, Bp = B @ tau, B @ p
    speed = float(np.linalg.norm(Bt))
    tangent = Bt / speed
    normal = np.array([-tangent[1], tangent[0]])
    pt, pn = float(Bp @ tangent), float(Bp @ normal)

    def local(s):
        s = np.asarray(s, dtype=float)
        q = 2.0 * np.sin(0.5 * s) ** 2
        return np.sin(s) * speed - q * pt, -q * pn

    def radius(s):
        a, b = local(s)
        return float(np.hypot(a, b)) - 1.0

    dev = 0.0
    grid = np.geomspace(1e-300, math.pi, 4000)
    for sign in (1.0, -1.0):
        r = np.array([radius(sign * g) for g in grid])
        if np.all(r < 0):
            s_end = math.pi
        else:
            k = int(np.argmax(r > 0))
            lo = grid[k - 1] if k > 0 else 0.0
            s_end = brentq(lambda s: radius(sign * s), lo, grid[k], xtol=1e-300, rtol=1e-15)
        _, off = local(sign * np.linspace(0.0, s_end, 257))
        dev = max(dev, float(np.max(np.abs(off))))
    t = np.linspace(-math.pi, math.pi, samples)
    pts = np.outer(np.cos(t), B @ p) + np.outer(np.sin(t), Bt) - Bp
    return Claim2Curve(n, z, p, pts, curvature, dev, tangent, An.regime())
