"""Canonical chart stack above the level geometry.

Three transformations connect the radial Delaunay-type variables to the
coordinates the drift analysis runs in: an energy-time chart straightening
the level flow, an action-angle chart built on the normalized enclosed
area, and a pair of regularizing charts (one per side of the critical
curve r = r_s(A)) that blow up the separatrix approach into a translation.
All maps are generated by type-2 generating functions, hence canonical;
symplectic_defect provides the finite-difference diagnostic used in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import (
    Tp_of,
    breve_G,
    breve_G_theta,
    rho_breve_theta,
    rho_funcs,
    theta_of_shape,
    theta_star,
)
from .euler import E_of_action, euler_E, level_data, r_s, r_s_prime

CHART_COORDS = {
    "delaunay_radial": ("R", "G", "r", "g"),
    "energy_time": ("Rcal", "E", "r", "tau"),
    "action_angle": ("Rcal_star", "A_star", "r_star", "phi_star"),
    "regularizing_k": ("Y", "A", "y", "phi"),
}


@dataclass(frozen=True)
class ChartPoint:
    """A tagged point of one of the four charts; momenta first, then
    coordinates, paired (coords[0], coords[2]) and (coords[1], coords[3])."""

    chart: str
    coords: tuple[float, float, float, float]
    k: int | None = None

    def __post_init__(self):
        if self.chart not in CHART_COORDS:
            raise ValueError(f"unknown chart {self.chart!r}")
        if len(self.coords) != 4:
            raise ValueError("chart points are 4-dimensional")
        if self.chart == "regularizing_k":
            if self.k not in (1, -1):
                raise ValueError("regularizing chart requires k = +1 or -1")
        elif self.k is not None:
            raise ValueError("k only applies to the regularizing chart")
        if self.chart == "delaunay_radial" and abs(self.coords[1]) > 1.0:
            raise ValueError("|G| <= 1 required")
        if self.chart == "action_angle" and not 0.0 < self.coords[1] < 1.0:
            raise ValueError("action must lie in (0, 1)")


def et_forward(E: float, r: float, tau: float) -> tuple[float, float, float]:
    """Level flow at time tau: (G, g, rho).

    G is even and 2 tau_p-periodic in tau; g runs through [-pi, 0] on the
    first half period and mirrors to [0, pi] on the second; rho is odd and
    quasi-periodic, gaining 2 rho(tau_p) per full period.  At tau = 0 the
    curve sits at its G-maximum, g = pi below the polar level and g = 0
    above it.
    """
    ld = level_data(E, r, with_action=False)
    sigma, kappa = ld.sigma, ld.kappa
    theta = sigma * tau
    G = sigma * float(breve_G(kappa, theta))

    Tp = Tp_of(kappa)
    half = math.fmod(theta, 2.0 * Tp)
    if half < 0:
        half += 2.0 * Tp
    if half == 0.0:
        # exact turning-point anchor; acos would amplify rounding in x
        g = math.pi if E < 1.0 else 0.0
    else:
        x = (E - G * G) / (r * math.sqrt(max(1.0 - G * G, 1e-300)))
        g = -math.acos(min(1.0, max(-1.0, x)))
        if half > Tp:
            g = -g
        if g == -math.pi:
            g = math.pi

    rho_hat, _ = rho_funcs(kappa, theta)
    rho = -E * tau / r + sigma * float(rho_hat) / r
    return G, g, rho


def et_inverse(R: float, G: float, r: float, g: float) -> tuple[float, float, float]:
    """Back out (Rcal, E, tau) from a radial Delaunay-type point.

    tau is the fundamental representative in [-tau_p, tau_p], its sign
    opposite to sin g; Rcal = R - rho(E, r, tau).
    """
    E = euler_E(r, G, g)
    ld = level_data(E, r, with_action=False)
    theta = float(theta_of_shape(ld.kappa, G / ld.sigma))
    tau = theta / ld.sigma
    if math.sin(g) > 0:
        tau = -tau
    _, _, rho = et_forward(E, r, tau)
    return R - rho, E, tau


def aa_forward(Rcal: float, E: float, r: float, tau: float
               ) -> tuple[float, float, float, float]:
    """Action-angle chart: (Rcal_star, A_star, r_star, phi_star).

    The action is the normalized enclosed area of the level; the angle is
    pi tau / tau_p; the conjugate momentum to r picks up the secular drift
    coefficient, Rcal_star = Rcal + B tau.
    """
    ld = level_data(E, r)
    return (Rcal + ld.B * tau, ld.action, r, math.pi * tau / ld.tau_p)


def aa_inverse(Rcal_star: float, A_star: float, r_star: float, phi_star: float,
               side: str = "high") -> tuple[float, float, float, float]:
    """Invert the action-angle chart on the named level-topology band."""
    E = E_of_action(A_star, r_star, side)
    ld = level_data(E, r_star, with_action=False)
    tau = phi_star * ld.tau_p / math.pi
    return (Rcal_star - ld.B * tau, E, r_star, tau)


def rg_forward(Y: float, A: float, y: float, phi: float, k: int = 1
               ) -> tuple[float, float, float, float]:
    """Regularizing chart, side k: straightens the logarithmic separatrix
    approach.  r_star = r_s(A) - k e^{-k y}, so k y -> +inf is the
    separatrix limit on either side."""
    if k not in (1, -1):
        raise ValueError("k must be +1 or -1")
    exp_ky = math.exp(k * y)
    return (Y * exp_ky, A, r_s(A) - k / exp_ky, phi + Y * exp_ky * r_s_prime(A))


def rg_inverse(Rcal_star: float, A_star: float, r_star: float, phi_star: float,
               k: int = 1) -> tuple[float, float, float, float]:
    """Invert the regularizing chart; rejects points on the wrong side of
    the critical curve for the chosen k."""
    if k not in (1, -1):
        raise ValueError("k must be +1 or -1")
    gap = k * (r_s(A_star) - r_star)
    if gap <= 0:
        raise ValueError(
            f"point lies on the wrong side of r_s for k = {k:+d} "
            f"(k*(r_s - r_star) = {gap:.3e})")
    y = -k * math.log(gap)
    Y = Rcal_star * math.exp(-k * y)
    return (Y, A_star, y, phi_star - Rcal_star * r_s_prime(A_star))


def delaunay_to_aa(R: float, G: float, r: float, g: float
                   ) -> tuple[float, float, float, float]:
    """Composition of the energy-time and action-angle charts."""
    Rcal, E, tau = et_inverse(R, G, r, g)
    return aa_forward(Rcal, E, r, tau)


def star_fields(A: float, r_star: float, psi: float, side: str = "high"
                ) -> tuple[float, float, float, float, float, float]:
    """Starred oscillation fields on the level of action A at radius r_star.

    Returns (G_star, rho_star, G1, G3, rho1, rho3): the values and their
    A- and psi-derivatives.  The psi-derivatives are the closed chain-rule
    forms; the A-derivatives are centered finite differences with step
    1e-6 max(1, |A|), adequate for the bound reports they feed.
    """
    def values(a, seed=None):
        E = E_of_action(a, r_star, side, seed=seed)
        ld = level_data(E, r_star, with_action=False)
        Tp = Tp_of(ld.kappa)
        theta = Tp * psi / math.pi
        G = ld.sigma * float(breve_G(ld.kappa, theta))
        _, rho_breve = rho_funcs(ld.kappa, theta)
        rho = ld.sigma * float(rho_breve) / r_star
        return ld, Tp, theta, G, rho

    ld, Tp, theta, G_star, rho_star = values(A)
    G3 = ld.sigma * float(breve_G_theta(ld.kappa, theta)) * Tp / math.pi
    rho3 = (ld.sigma / r_star) * float(rho_breve_theta(ld.kappa, theta)) * Tp / math.pi

    h = 1e-6 * max(1.0, abs(A))
    _, _, _, G_hi, rho_hi = values(A + h, seed=ld.E)
    _, _, _, G_lo, rho_lo = values(A - h, seed=ld.E)
    G1 = (G_hi - G_lo) / (2.0 * h)
    rho1 = (rho_hi - rho_lo) / (2.0 * h)
    return G_star, rho_star, G1, G3, rho1, rho3


def psi_star(A: float, r_star: float, side: str = "high") -> float:
    """The angle in (0, pi) where rho3 vanishes: the zero of the detrended
    slope, pi theta_*(kappa) / T_p."""
    E = E_of_action(A, r_star, side)
    ld = level_data(E, r_star, with_action=False)
    return math.pi * theta_star(ld.kappa) / Tp_of(ld.kappa)


def symplectic_defect(map_fn, point, step: float | None = None) -> float:
    """Max-norm of J^T Omega J - Omega for the finite-difference Jacobian
    of a 4D map in (p1, p2, q1, q2) ordering."""
    x = np.asarray(point, dtype=float)
    if x.shape != (4,):
        raise ValueError("point must be 4-dimensional")
    J = np.empty((4, 4))
    for j in range(4):
        h = step if step is not None else 1e-6 * max(1.0, abs(x[j]))
        if h <= 0:
            raise ValueError("FD step underflow")
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(map_fn(*xp)) - np.asarray(map_fn(*xm))) / (xp[j] - xm[j])
    eye = np.eye(2)
    zero = np.zeros((2, 2))
    Omega = np.block([[zero, eye], [-eye, zero]])
    return float(np.abs(J.T @ Omega @ J - Omega).max())
