"""Oscillation shape functions: periods, action coefficient, derivatives.

Closed-form Jacobi/Legendre identities from scipy.special serve as the
independent oracle throughout; the implementation itself never uses them.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ellipe, ellipeinc, ellipj, ellipk

from fastdrift.elliptic import (
    KAPPA_FLOOR,
    EllipticJet,
    KappaPoint,
    SeparatrixError,
    T0_of,
    Tp_of,
    RS_of,
    breve_G,
    breve_G_theta,
    calA_fast,
    calA_jet,
    elliptic_jet,
    j_beta,
    rho_breve_theta,
    rho_funcs,
    theta_star,
)

KAPPAS_POS = [0.9, 0.7, 0.5, 0.3, 0.1, 0.01]
KAPPAS_NEG = [-0.05, -0.3, -0.5, -1.0, -2.6]


def agm_K(m):
    # complete elliptic integral via the arithmetic-geometric mean
    a, g = 1.0, math.sqrt(1.0 - m)
    for _ in range(40):
        a, g = 0.5 * (a + g), math.sqrt(a * g)
        if abs(a - g) < 1e-17:
            break
    return math.pi / (2.0 * a)


def T0_oracle(kappa):
    if kappa > 0:
        return ellipk(1.0 - kappa)
    c = -kappa
    return ellipk(1.0 / (1.0 + c)) / math.sqrt(1.0 + c)


def A_oracle(kappa):
    if kappa > 0:
        m = 1.0 - kappa
        return ellipe(m) / ellipk(m)
    c = -kappa
    m = 1.0 / (1.0 + c)
    return (1.0 + c) * ellipe(m) / ellipk(m) - c


def G_oracle(kappa, theta):
    if kappa > 0:
        return ellipj(np.asarray(theta), 1.0 - kappa)[2]
    s = math.sqrt(1.0 - kappa)
    return ellipj(np.asarray(theta) * s, 1.0 / (1.0 - kappa))[1]


def rho_hat_oracle(kappa, theta):
    theta = np.asarray(theta)
    if kappa > 0:
        m = 1.0 - kappa
        ph = ellipj(theta, m)[3]
        return ellipeinc(ph, m)
    s = math.sqrt(1.0 - kappa)
    m = 1.0 / (1.0 - kappa)
    ph = ellipj(theta * s, m)[3]
    return (ellipeinc(ph, m) - (1.0 - m) * theta * s) / (m * s)


# -- domain handling ----------------------------------------------------------------


def test_kappa_point_regimes():
    assert KappaPoint(0.5).regime == "unit_interval"
    assert KappaPoint(-0.5).regime == "negative"
    assert KappaPoint(-7.3).regime == "negative"


@pytest.mark.parametrize("bad", [0.0, 1e-13, -1e-13, 1.0, 1.5, np.nan])
def test_kappa_floor_rejected(bad):
    with pytest.raises(SeparatrixError):
        KappaPoint(bad)
    with pytest.raises(SeparatrixError):
        T0_of(bad)


# -- base period --------------------------------------------------------------------


def test_T0_limit_at_one():
    assert abs(T0_of(1.0 - 1e-9) - math.pi / 2) < 1e-8


def test_T0_against_agm_oracle():
    assert abs(T0_of(0.5) - agm_K(0.5)) < 1e-12
    assert abs(T0_of(0.5) - 1.854074677301372) < 1e-12


@pytest.mark.parametrize("kappa", KAPPAS_POS + KAPPAS_NEG)
def test_T0_closed_form(kappa):
    assert abs(T0_of(kappa) / T0_oracle(kappa) - 1.0) < 1e-12


@pytest.mark.parametrize("kappa", [0.8, 0.4, 0.15])
def test_T0_matches_turning_point_quadrature(kappa):
    # same number from the raw integral between the turning points
    def f(xi):
        return 1.0 / math.sqrt((1.0 - xi * xi) * (xi * xi - kappa))

    direct, _ = quad(f, math.sqrt(kappa), 1.0, epsabs=1e-12, limit=400)
    assert abs(T0_of(kappa) - direct) < 1e-8


def test_T0_log_divergence():
    # T0 ~ |log kappa|/2 + 2 log 2 near the degenerate level
    prev = np.inf
    for m in range(4, 9):
        for sgn in (1.0, -1.0):
            kap = sgn * 10.0 ** (-m)
            L = abs(math.log(abs(kap)))
            ratio = T0_of(kap) / L
            assert abs(ratio - 0.5 - 2.0 * math.log(2.0) / L) < 1e-4
        assert ratio < prev
        prev = ratio


@pytest.mark.parametrize("kappa", [0.6, -0.6])
def test_Tp_doubling(kappa):
    T0 = T0_of(kappa)
    Tp = Tp_of(kappa)
    assert Tp == T0 if kappa > 0 else Tp == 2.0 * T0


# -- weighted period integrals ------------------------------------------------------


def test_j_beta_zero_is_period():
    for kappa in np.linspace(0.05, 0.95, 10):
        assert abs(j_beta(0.0, kappa) - T0_of(kappa)) < 1e-11


def test_j_beta_unit_value():
    assert abs(j_beta(1.0, 1.0) - math.pi / 4) < 1e-12


def test_j_beta_decay_in_beta():
    # decay is ~ 1/sqrt(beta), so push far out for the smallness check
    vals = [j_beta(b, 0.5) for b in (0.0, 1.0, 10.0, 1e2, 1e4, 1e8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


def test_j_beta_rejects_negative_weight():
    with pytest.raises(ValueError):
        j_beta(-0.1, 0.5)


# -- period derivatives -------------------------------------------------------------


@pytest.mark.parametrize("kappa", [0.5, 0.1, 0.01, -0.5, -0.1, -0.01])
def test_first_derivative_identity(kappa):
    R, S = RS_of(kappa)
    h = 1e-5 * max(abs(kappa), 0.1)
    fd = (T0_of(kappa + h) - T0_of(kappa - h)) / (2 * h)
    assert abs((-R / (2 * kappa)) / fd - 1.0) < 1e-4


def test_first_derivative_identity_tight():
    R, _ = RS_of(-0.3)
    h = 1e-6
    fd = (T0_of(-0.3 + h) - T0_of(-0.3 - h)) / (2 * h)
    assert abs((-2 * -0.3) * fd / R - 1.0) < 1e-5


@pytest.mark.parametrize("kappa", [0.5, 0.1, -0.5, -0.1])
def test_second_derivative_identity(kappa):
    _, S = RS_of(kappa)
    h = 1e-4
    fd = (T0_of(kappa + h) - 2 * T0_of(kappa) + T0_of(kappa - h)) / h**2
    assert abs((S / (4 * kappa**2)) / fd - 1.0) < 1e-4


def test_RS_small_kappa_limits():
    for kap in (1e-3, -1e-3, 1e-5, -1e-5):
        R, S = RS_of(kap)
        assert abs(R - 1.0) < 5e-3
        assert abs(S - 2.0) < 5e-3


def test_RS_bounded_on_grid():
    # envelope constants measured on a dense grid: R peaks at ~1.0548 near
    # kappa = -0.21, S at ~2.2160 near kappa = -0.81
    for kap in np.concatenate([np.linspace(-3, -0.02, 40), np.linspace(0.02, 0.98, 40)]):
        R, S = RS_of(float(kap))
        assert 0.0 < R < 1.06
        assert 0.0 < S < 2.22


# -- action coefficient -------------------------------------------------------------


@pytest.mark.parametrize("kappa", KAPPAS_POS + KAPPAS_NEG)
def test_calA_closed_form(kappa):
    A, _, _ = calA_jet(kappa)
    assert abs(A - A_oracle(kappa)) < 1e-10
    assert abs(calA_fast(kappa) - A) < 1e-10


def test_calA_sandwich():
    for kappa in KAPPAS_POS:
        A, _, _ = calA_jet(kappa)
        assert kappa < A < 1.0
    for kappa in KAPPAS_NEG:
        A, _, _ = calA_jet(kappa)
        assert 0.0 < A < 1.0


@pytest.mark.parametrize("kappa", [0.5, 0.1, -0.3, -1.5])
def test_calA_derivatives_vs_fd(kappa):
    _, Ap, App = calA_jet(kappa)
    h = 1e-5
    fd1 = (A_oracle(kappa + h) - A_oracle(kappa - h)) / (2 * h)
    fd2 = (A_oracle(kappa + h) - 2 * A_oracle(kappa) + A_oracle(kappa - h)) / h**2
    assert abs(Ap - fd1) < 1e-6
    assert abs(App - fd2) < 2e-5


def test_calA_log_scaled_bound():
    for kap in (1e-6, -1e-6, 1e-8, -1e-8):
        A, _, _ = calA_jet(kap)
        assert abs(A) * abs(math.log(abs(kap))) < 3.0


def test_elliptic_jet_bundles_consistently():
    jet = elliptic_jet(-0.7)
    assert isinstance(jet, EllipticJet)
    R, S = RS_of(-0.7)
    assert jet.T0 == T0_of(-0.7)
    assert jet.T0p == -R / (2 * -0.7)
    assert jet.Tp == 2 * jet.T0
    A, Ap, App = calA_jet(-0.7)
    assert jet.A == A and jet.Ap == Ap and jet.App == App


# -- shape function -----------------------------------------------------------------


@pytest.mark.parametrize("kappa", [0.7, 0.3, 0.05, -0.4, -2.0])
def test_breve_G_oracle(kappa):
    rng = np.random.default_rng(11)
    Tp = Tp_of(kappa)
    th = rng.uniform(-2 * Tp, 3 * Tp, 200)
    assert np.max(np.abs(breve_G(kappa, th) - G_oracle(kappa, th))) < 1e-12


@pytest.mark.parametrize("kappa", [0.6, -0.6])
def test_breve_G_endpoints_and_monotone(kappa):
    T0 = T0_of(kappa)
    assert abs(breve_G(kappa, 0.0) - 1.0) < 1e-12
    target = math.sqrt(kappa) if kappa > 0 else 0.0
    assert abs(breve_G(kappa, T0) - target) < 1e-9
    th = np.linspace(0.0, T0, 200)
    g = breve_G(kappa, th)
    assert np.all(np.diff(g) < 0)


def test_breve_G_parity_table():
    rng = np.random.default_rng(5)
    for kappa in (0.45, -0.8):
        Tp = Tp_of(kappa)
        th = rng.uniform(-3 * Tp, 3 * Tp, 100)
        g = breve_G(kappa, th)
        assert np.max(np.abs(breve_G(kappa, -th) - g)) < 1e-9
        assert np.max(np.abs(breve_G(kappa, th + 2 * Tp) - g)) < 1e-9
        if kappa < 0:
            assert np.max(np.abs(breve_G(kappa, Tp - th) + g)) < 1e-9


@pytest.mark.parametrize("kappa", [0.45, -0.8])
def test_breve_G_theta_fd(kappa):
    rng = np.random.default_rng(3)
    Tp = Tp_of(kappa)
    th = rng.uniform(-Tp, 2 * Tp, 60)
    h = 1e-6
    fd = (breve_G(kappa, th + h) - breve_G(kappa, th - h)) / (2 * h)
    assert np.max(np.abs(breve_G_theta(kappa, th) - fd)) < 1e-6
    # odd in theta
    assert np.max(np.abs(breve_G_theta(kappa, -th) + breve_G_theta(kappa, th))) < 1e-9


# -- running integral of G^2 --------------------------------------------------------


@pytest.mark.parametrize("kappa", [0.7, 0.3, -0.4, -2.0])
def test_rho_hat_oracle(kappa):
    rng = np.random.default_rng(13)
    Tp = Tp_of(kappa)
    th = rng.uniform(-2 * Tp, 3 * Tp, 100)
    rh, _ = rho_funcs(kappa, th)
    assert np.max(np.abs(rh - rho_hat_oracle(kappa, th))) < 1e-11


@pytest.mark.parametrize("kappa", [0.5, -0.5])
def test_rho_anchors(kappa):
    Tp = Tp_of(kappa)
    rh0, rb0 = rho_funcs(kappa, 0.0)
    _, rbT = rho_funcs(kappa, Tp)
    assert rh0 == 0.0
    assert abs(rb0) < 1e-12 and abs(rbT) < 1e-12


@pytest.mark.parametrize("kappa", [0.5, -0.5])
def test_rho_breve_periodic_and_rho_hat_odd(kappa):
    rng = np.random.default_rng(17)
    Tp = Tp_of(kappa)
    th = rng.uniform(-Tp, Tp, 50)
    rh, rb = rho_funcs(kappa, th)
    rh_neg, rb_shift = rho_funcs(kappa, -th)[0], rho_funcs(kappa, th + 2 * Tp)[1]
    assert np.max(np.abs(rh_neg + rh)) < 1e-11
    assert np.max(np.abs(rb_shift - rb)) < 1e-11


@pytest.mark.parametrize("kappa", [0.5, -0.5])
def test_rho_breve_slope(kappa):
    rng = np.random.default_rng(19)
    Tp = Tp_of(kappa)
    th = rng.uniform(0.0, Tp, 50)
    h = 1e-5
    _, rb_p = rho_funcs(kappa, th + h)
    _, rb_m = rho_funcs(kappa, th - h)
    fd = (rb_p - rb_m) / (2 * h)
    slope = rho_breve_theta(kappa, th)
    assert np.max(np.abs(fd - slope)) < 1e-6
    exact = np.asarray(breve_G(kappa, th)) ** 2 - calA_fast(kappa)
    assert np.max(np.abs(slope - exact)) < 1e-13


@pytest.mark.parametrize("kappa", [0.5, -0.5])
def test_rho_breve_slope_continuous_at_seams(kappa):
    Tp = Tp_of(kappa)
    h = 1e-7
    for seam in (0.0, Tp):
        _, left = rho_funcs(kappa, np.array([seam - 2 * h, seam - h]))
        _, right = rho_funcs(kappa, np.array([seam + h, seam + 2 * h]))
        sl = (left[1] - left[0]) / h
        sr = (right[1] - right[0]) / h
        assert abs(sl - sr) < 1e-6


# -- balance angle ------------------------------------------------------------------


@pytest.mark.parametrize("kappa", [0.7, 0.3, -0.4, -2.0])
def test_theta_star_residual(kappa):
    ts = theta_star(kappa)
    assert 0.0 < ts < T0_of(kappa)
    g = breve_G(kappa, ts)
    assert abs(g * g - calA_fast(kappa)) < 1e-10


def test_theta_star_frozen_values():
    assert abs(theta_star(0.7) - 0.8326539458) < 1e-8
    assert abs(theta_star(-2.0) - 0.4844159122) < 1e-8


@pytest.mark.parametrize("kappa", [0.55, -0.9])
def test_theta_of_shape_round_trip(kappa):
    from fastdrift.elliptic import theta_of_shape

    Tp = Tp_of(kappa)
    th = np.linspace(0.0, Tp, 301)
    G = breve_G(kappa, th)
    assert np.max(np.abs(theta_of_shape(kappa, G) - th)) < 1e-10
    lo = math.sqrt(kappa) if kappa > 0 else -1.0
    G2 = np.linspace(lo + 1e-9, 1.0 - 1e-9, 57)
    assert np.max(np.abs(breve_G(kappa, theta_of_shape(kappa, G2)) - G2)) < 1e-10


def test_shape_calls_deterministic():
    th = np.linspace(-1.0, 7.0, 113)
    a = np.asarray(breve_G(0.37, th))
    b = np.asarray(breve_G(0.37, th))
    assert a.tobytes() == b.tobytes()
