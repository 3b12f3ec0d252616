"""Periods, the action coefficient, and the oscillation shape functions.

Everything here is parametrized by kappa, the ratio of the two squared
turning points of the oscillation: kappa in (0,1) means the level has two
mirror components (the shape function stays positive), kappa < 0 a single
component crossing zero.  kappa = 0 and kappa = 1 are the separatrices,
where the period diverges or the level degenerates; a floor keeps callers
honestly away from both.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

KAPPA_FLOOR = 1e-12

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)


class SeparatrixError(ValueError):
    """kappa too close to 0 or 1 for direct evaluation."""


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not np.isfinite(kappa) or kappa >= 1.0 - KAPPA_FLOOR:
        raise SeparatrixError(f"kappa = {kappa!r} outside (-inf, 1)")
    if abs(kappa) < KAPPA_FLOOR:
        raise SeparatrixError(f"|kappa| = {abs(kappa):.2e} below floor {KAPPA_FLOOR:.0e}")
    return kappa


@dataclass(frozen=True)
class KappaPoint:
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "kappa", _check_kappa(self.kappa))

    @property
    def regime(self) -> str:
        return "unit_interval" if self.kappa > 0 else "negative"


def j_beta(beta: float, kappa: float) -> float:
    """The weighted quarter-period integral over (0, pi/2).

    Integrand cos^2 / ((cos^2 + beta sin^2) sqrt(cos^2 + kappa sin^2));
    beta = 0 reduces to the quarter period itself.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    kappa = float(kappa)

    def f(th):
        c2 = math.cos(th) ** 2
        s2 = 1.0 - c2
        return c2 / ((c2 + beta * s2) * math.sqrt(c2 + kappa * s2))

    val, _ = quad(f, 0.0, 0.5 * math.pi, **_QUAD_OPTS)
    return val


def T0_of(kappa: float) -> float:
    """Base half/quarter period at this kappa; diverges like |log kappa|/2."""
    kappa = _check_kappa(kappa)
    if kappa > 0:
        return j_beta(0.0, kappa)
    c = -kappa

    def f(th):
        return 1.0 / math.sqrt(math.cos(th) ** 2 + c)

    val, _ = quad(f, 0.0, 0.5 * math.pi, **_QUAD_OPTS)
    return val


def Tp_of(kappa: float) -> float:
    """Shape-function period parameter: T0 for kappa > 0, 2 T0 below."""
    kappa = _check_kappa(kappa)
    T0 = T0_of(kappa)
    return T0 if kappa > 0 else 2.0 * T0


def RS_of(kappa: float) -> tuple[float, float]:
    """The two period-derivative integrals (R, S).

    Contract: T0'(kappa) = -R/(2 kappa) and T0''(kappa) = S/(4 kappa^2).
    Both tend to finite limits at kappa = 0 (R -> 1, S -> 2), which is what
    makes the log-divergence of T0 explicit.
    """
    kappa = _check_kappa(kappa)
    if kappa > 0:

        def fr(th):
            s2 = math.sin(th) ** 2
            return s2 / math.sqrt(s2 + kappa * (1.0 - s2))

        def fs(th):
            s2 = math.sin(th) ** 2
            return 3.0 * s2 * s2 / math.sqrt(s2 + kappa * (1.0 - s2))

    else:
        # differentiate the period integral under the integral sign
        c = -kappa

        def fr(th):
            return c / (math.cos(th) ** 2 + c) ** 1.5

        def fs(th):
            return 3.0 * c * c / (math.cos(th) ** 2 + c) ** 2.5

    R, _ = quad(fr, 0.0, 0.5 * math.pi, **_QUAD_OPTS)
    S, _ = quad(fs, 0.0, 0.5 * math.pi, **_QUAD_OPTS)
    return R, S


def calA_jet(kappa: float) -> tuple[float, float, float]:
    """Mean of the squared shape function over a period, with derivatives.

    A(kappa) = kappa + J/T0 with J the turning-point integral; the
    derivatives come from the closed forms
        A'  = 1/2 + (kappa - A) T0'/T0,
        A'' = (1 - A') T0'/T0 + (kappa - A) (T0''/T0 - (T0'/T0)^2).
    """
    kappa = _check_kappa(kappa)
    T0 = T0_of(kappa)
    if kappa > 0:
        mk = 1.0 - kappa

        def fj(ph):
            c2 = math.cos(ph) ** 2
            return mk * c2 / math.sqrt(1.0 - mk * (1.0 - c2))

    else:
        c = -kappa

        def fj(ph):
            return math.sqrt(math.sin(ph) ** 2 + c)

    J, _ = quad(fj, 0.0, 0.5 * math.pi, **_QUAD_OPTS)
    A = kappa + J / T0
    R, S = RS_of(kappa)
    T0p = -R / (2.0 * kappa)
    T0pp = S / (4.0 * kappa * kappa)
    lp = T0p / T0
    Ap = 0.5 + (kappa - A) * lp
    App = (1.0 - Ap) * lp + (kappa - A) * (T0pp / T0 - lp * lp)
    return A, Ap, App


@dataclass(frozen=True)
class EllipticJet:
    """All kappa-level scalars a chart needs, bundled."""

    kappa: float
    T0: float
    T0p: float
    T0pp: float
    A: float
    Ap: float
    App: float
    Tp: float
    R: float
    S: float


def elliptic_jet(kappa: float) -> EllipticJet:
    kappa = _check_kappa(kappa)
    T0 = T0_of(kappa)
    R, S = RS_of(kappa)
    A, Ap, App = calA_jet(kappa)
    return EllipticJet(kappa=kappa, T0=T0, T0p=-R / (2 * kappa), T0pp=S / (4 * kappa ** 2),
                       A=A, Ap=Ap, App=App, Tp=T0 if kappa > 0 else 2 * T0, R=R, S=S)


# -- shape-function cache ------------------------------------------------------------
#
# On [0, T0] the defining quadrature is regularized by an angle u in
# [0, pi/2]: G(u) and the density w(u) = dtheta/du are explicit and smooth,
#     kappa > 0:  G = sqrt(1 - (1-kappa) sin^2 u),  w = 1/G
#     kappa < 0:  G = cos u,                        w = 1/sqrt(G^2 - kappa)
# so theta(u) is a cumulative integral of a smooth positive density and the
# inverse is a spline guess plus Newton in u, never near a turning point.

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_TABLE_N = 1024


class _KappaCache:
    def __init__(self, kappa: float):
        self.kappa = kappa
        u = np.linspace(0.0, 0.5 * np.pi, _TABLE_N + 1)
        self.u_nodes = u
        # per-cell Gauss-Legendre, accumulated; machine-accurate for these densities
        mid = 0.5 * (u[:-1] + u[1:])
        half = 0.5 * (u[1] - u[0])
        pts = mid[:, None] + half * _GL_X[None, :]
        cell = (self._w(pts) * _GL_W[None, :]).sum(axis=1) * half
        theta = np.empty(_TABLE_N + 1)
        theta[0] = 0.0
        np.cumsum(cell, out=theta[1:])
        self.theta_nodes = theta
        self.T0 = float(theta[-1])
        self.Tp = self.T0 if kappa > 0 else 2.0 * self.T0
        self.u_of_theta = CubicHermiteSpline(theta, u, 1.0 / self._w(u))

        G = self._G(u)
        if kappa > 0:
            th_full = theta
            G_full = G
        else:
            # reflect through T0: the shape function goes odd about it
            th_full = np.concatenate([theta, 2.0 * self.T0 - theta[-2::-1]])
            G_full = np.concatenate([G, -G[-2::-1]])
        self.G2_spline = CubicSpline(th_full, G_full ** 2)
        self.rho_spline = self.G2_spline.antiderivative()
        self.A = float(self.rho_spline(self.Tp) / self.Tp)

    def _w(self, u):
        if self.kappa > 0:
            return 1.0 / np.sqrt(1.0 - (1.0 - self.kappa) * np.sin(u) ** 2)
        return 1.0 / np.sqrt(np.cos(u) ** 2 - self.kappa)

    def _G(self, u):
        if self.kappa > 0:
            return np.sqrt(1.0 - (1.0 - self.kappa) * np.sin(u) ** 2)
        return np.cos(u)

    def theta_of_u(self, u):
        """Exact cumulative integral: table cell plus local Gauss tail."""
        u = np.asarray(u, dtype=float)
        j = np.clip(np.searchsorted(self.u_nodes, u, side="right") - 1, 0, _TABLE_N - 1)
        base = self.theta_nodes[j]
        lo = self.u_nodes[j]
        half = 0.5 * (u - lo)
        pts = (lo + half)[..., None] + half[..., None] * _GL_X
        tail = (self._w(pts) * _GL_W).sum(axis=-1) * half
        return base + tail

    def u_of(self, theta):
        """Invert theta(u) on [0, T0] by spline guess plus two Newton steps."""
        theta = np.asarray(theta, dtype=float)
        u = np.clip(self.u_of_theta(theta), 0.0, 0.5 * np.pi)
        for _ in range(2):
            u = u - (self.theta_of_u(u) - theta) / self._w(u)
            u = np.clip(u, 0.0, 0.5 * np.pi)
        return u

    def G_on_base(self, theta):
        return self._G(self.u_of(theta))


_cache_lock = threading.Lock()
_caches: OrderedDict[float, _KappaCache] = OrderedDict()
_CACHE_MAX = 512


def _cache_for(kappa: float) -> _KappaCache:
    kappa = _check_kappa(kappa)
    with _cache_lock:
        c = _caches.get(kappa)
        if c is not None:
            _caches.move_to_end(kappa)
            return c
    c = _KappaCache(kappa)
    with _cache_lock:
        _caches[kappa] = c
        while len(_caches) > _CACHE_MAX:
            _caches.popitem(last=False)
    return c


def _fold(theta, Tp):
    """Reduce to [0, Tp] using evenness and 2 Tp periodicity."""
    th = np.abs(np.asarray(theta, dtype=float))
    th = np.mod(th, 2.0 * Tp)
    return np.where(th > Tp, 2.0 * Tp - th, th), th > Tp


def breve_G(kappa: float, theta) -> np.ndarray | float:
    """Shape function: even, 2 Tp-periodic, equals 1 at theta = 0.

    On [0, Tp] it decreases from 1 to sqrt(kappa) (kappa > 0) or, for
    kappa < 0, to -1 with the antisymmetry breve_G(Tp - theta) = -breve_G(theta).
    """
    cache = _cache_for(kappa)
    th, _ = _fold(theta, cache.Tp)
    if kappa > 0:
        out = np.asarray(cache.G_on_base(th))
    else:
        th = np.asarray(th)
        mirror = th > cache.T0
        arg = np.clip(np.where(mirror, cache.Tp - th, th), 0.0, cache.T0)
        out = np.where(mirror, -1.0, 1.0) * cache.G_on_base(arg)
        out = np.asarray(out)
    if out.ndim == 0:
        return float(out)
    return out


def breve_G_theta(kappa: float, theta) -> np.ndarray | float:
    """d breve_G / d theta: odd, 2 Tp-periodic.

    Magnitude sqrt((1 - G^2)(G^2 - kappa)); negative on (0, Tp), positive on
    the mirrored half of the full period.
    """
    cache = _cache_for(kappa)
    G = np.asarray(breve_G(kappa, theta))
    mag = np.sqrt(np.maximum((1.0 - G ** 2) * (G ** 2 - kappa), 0.0))
    thm = np.mod(np.asarray(theta, dtype=float), 2.0 * cache.Tp)
    out = np.where(thm <= cache.Tp, -mag, mag)
    if out.ndim == 0:
        return float(out)
    return out


def rho_funcs(kappa: float, theta) -> tuple[np.ndarray | float, np.ndarray | float]:
    """(rho_hat, rho_breve): the running integral of G^2 and its detrended,
    periodic part rho_breve = rho_hat - A theta."""
    cache = _cache_for(kappa)
    raw = np.asarray(theta, dtype=float)
    period = 2.0 * cache.Tp
    n = np.floor(raw / period)
    rem = raw - n * period
    over = rem > cache.Tp
    rem_f = np.where(over, period - rem, rem)
    base = cache.rho_spline(rem_f)
    # odd about 0, shifted by the running mean on each full period
    rho_hat = n * period * cache.A + np.where(over, 2.0 * cache.Tp * cache.A - base, base)
    rho_breve = rho_hat - cache.A * raw
    if rho_hat.ndim == 0:
        return float(rho_hat), float(rho_breve)
    return rho_hat, rho_breve


def rho_breve_theta(kappa: float, theta) -> np.ndarray | float:
    """Exact slope of the periodic part: G^2 - A."""
    cache = _cache_for(kappa)
    G = breve_G(kappa, theta)
    out = np.asarray(G) ** 2 - cache.A
    if out.ndim == 0:
        return float(out)
    return out


def calA_fast(kappa: float) -> float:
    """Table-based mean of G^2; agrees with calA_jet to quadrature accuracy."""
    return _cache_for(kappa).A


def theta_of_shape(kappa: float, G) -> np.ndarray | float:
    """Inverse of breve_G on the fundamental branch [0, Tp].

    Exact up to the cumulative table: the regular angle u is recovered in
    closed form from G, then theta = theta(u) is the cached integral.
    """
    cache = _cache_for(kappa)
    G = np.asarray(G, dtype=float)
    if kappa > 0:
        s2 = np.clip((1.0 - G * G) / (1.0 - kappa), 0.0, 1.0)
        out = cache.theta_of_u(np.arcsin(np.sqrt(s2)))
    else:
        u = np.arccos(np.clip(np.abs(G), 0.0, 1.0))
        base = cache.theta_of_u(u)
        out = np.where(G >= 0, base, cache.Tp - base)
    out = np.asarray(out)
    if out.ndim == 0:
        return float(out)
    return out


def theta_star(kappa: float) -> float:
    """Unique root of G(kappa, theta)^2 = A(kappa) in (0, T0)."""
    cache = _cache_for(kappa)
    A = cache.A
    lo_val = 1.0 - A
    hi_val = (cache.kappa if cache.kappa > 0 else 0.0) - A
    if not (lo_val > 0 > hi_val):
        raise RuntimeError(f"mean level A = {A!r} not bracketed at kappa = {kappa!r}")

    def f(th):
        g = breve_G(kappa, th)
        return g * g - A

    return brentq(f, 0.0, cache.T0, xtol=1e-14, rtol=8.9e-16)
