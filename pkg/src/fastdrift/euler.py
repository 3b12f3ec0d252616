"""Level geometry of the secular invariant for the averaged pair coupling.

At fixed outer distance r, the invariant E(r, G, g) = G^2 + r sqrt(1-G^2) cos g
foliates the (G, g) cylinder into level curves.  Each level carries the two
turning values alpha_+-, their ratio kappa (handed to the elliptic layer), a
half period tau_p, a secular drift coefficient B, and a normalized enclosed
area, the action.  The averaged coupling strength is computed along two
independent routes: a direct eccentric-anomaly average at any (G, g), and a
weighted-period representation that only sees the level value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .elliptic import (
    SeparatrixError,
    Tp_of,
    breve_G,
    calA_fast,
    j_beta,
)

SEPARATRIX_FLOOR = 1e-10
COLLISION_FLOOR = 1e-6

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-11, limit=400)


class CollisionError(ValueError):
    """The requested configuration is too close to an inner-outer collision."""


def euler_E(r: float, G, g):
    """The level invariant G^2 + r sqrt(1-G^2) cos g.

    Its maximum over the cylinder is 1 + r^2/4 for r < 2 (attained at
    cos g = 1, G^2 = 1 - r^2/4) and r for r >= 2 (attained at G = 0, g = 0);
    the minimum is -r at (G, g) = (0, pi).
    """
    if r <= 0:
        raise ValueError("outer distance r must be positive")
    G = np.asarray(G, dtype=float)
    if np.any(np.abs(G) > 1.0 + 1e-12):
        raise ValueError("|G| <= 1 required")
    val = G * G + r * np.sqrt(np.clip(1.0 - G * G, 0.0, None)) * np.cos(g)
    if val.ndim == 0:
        return float(val)
    return val


def alpha_pm(E: float, r: float) -> tuple[float, float]:
    """Turning values of G^2 on the level: roots of the associated quadratic."""
    disc = 1.0 + 0.25 * r * r - E
    if disc < 0:
        raise ValueError(f"E = {E!r} above the top level 1 + r^2/4 at r = {r!r}")
    root = r * math.sqrt(disc)
    return E - 0.5 * r * r + root, E - 0.5 * r * r - root


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of the application: mass factor, secondary mass
    weight, total angular momentum, and the energy level."""

    alpha: float
    C_total: float
    c: float
    beta: float = 0.0

    def __post_init__(self):
        # alpha = 0 switches the pair coupling off entirely; the drift
        # machinery accepts that degenerate case, so only negatives are out.
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


@dataclass(frozen=True)
class LevelData:
    """Per-level scalars.

    regime combines the radius panel with a value-ordered position tag:
    "inside_S0" for E below both critical values r and 1, "between" for E
    between them, "outside_S1" above both; for r > 2 (no saddle, hence no
    self-intersecting critical level) the tags are "below_S1"/"above_S1".
    """

    E: float
    r: float
    alpha_plus: float
    alpha_minus: float
    sigma: float
    kappa: float
    tau_p: float
    action: float | None
    B: float
    regime: str


def _validate_level(E: float, r: float) -> None:
    if r <= 0:
        raise ValueError("outer distance r must be positive")
    if E < -r:
        raise ValueError(f"E = {E!r} below the bottom level -r")
    if abs(E - r) < SEPARATRIX_FLOOR:
        raise SeparatrixError(f"|E - r| = {abs(E - r):.2e} below floor")
    if abs(E - 1.0) < SEPARATRIX_FLOOR:
        raise SeparatrixError(f"|E - 1| = {abs(E - 1.0):.2e} below floor")


def level_data(E: float, r: float, with_action: bool = True) -> LevelData:
    """All per-level scalars; raises if the level is degenerate or empty."""
    E, r = float(E), float(r)
    _validate_level(E, r)
    ap, am = alpha_pm(E, r)
    if ap <= 0:
        raise ValueError(f"level E = {E!r} is empty at r = {r!r}")
    sigma = math.sqrt(ap)
    kappa = am / ap
    tau_p = Tp_of(kappa) / sigma
    B = (-E + ap * calA_fast(kappa)) / r
    if r < 1:
        panel = "panel_a"
    elif r < 2:
        panel = "panel_b"
    else:
        panel = "panel_c"
    if r > 2:
        region = "below_S1" if E < 1 else "above_S1"
    else:
        lo, hi = min(r, 1.0), max(r, 1.0)
        region = "inside_S0" if E < lo else ("between" if E < hi else "outside_S1")
    action = _action_quadrature(E, r, ap, am) if with_action else None
    return LevelData(E=E, r=r, alpha_plus=ap, alpha_minus=am, sigma=sigma,
                     kappa=kappa, tau_p=tau_p, action=action, B=B,
                     regime=f"{panel}:{region}")


def _action_quadrature(E: float, r: float, ap: float, am: float) -> float:
    # Normalized enclosed area.  Head term per sub-case: levels around the
    # minimum (both turning points at -+sigma, E below the polar value 1)
    # enclose area 2*sigma - integral; bands/petals start from sigma or,
    # above the polar level, from 1.  Each piece has d(action)/dE = tau_p/pi.
    sigma = math.sqrt(ap)
    lower = -sigma if am < 0 else math.sqrt(am)

    def f(Gam):
        x = (E - Gam * Gam) / (r * math.sqrt(1.0 - Gam * Gam))
        return math.acos(min(1.0, max(-1.0, x)))

    with warnings.catch_warnings():
        # endpoint square-root behavior is integrable by design
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(f, lower, sigma, **_QUAD_OPTS)
    if E <= 1.0:
        head = 2.0 * sigma if am < 0 else sigma
    else:
        head = 1.0
    return head - val / math.pi


def action_jet(E: float, r: float) -> tuple[float, float, float]:
    """(A, dA/dE, dA/dr) on the level.

    The derivatives are the closed forms dA/dE = tau_p/pi and
    dA/dr = tau_p B / pi, not finite differences.
    """
    ld = level_data(E, r)
    return ld.action, ld.tau_p / math.pi, ld.tau_p * ld.B / math.pi


def sep_action(r: float) -> float:
    """Action of the critical level E = r, continuous on [0, 2].

    Closed form of the turning-point quadrature; equals the one-sided limit
    of the action from the two-component side E > r.
    """
    if not 0.0 <= r <= 2.0:
        raise ValueError("critical-level action defined for 0 <= r <= 2")
    return (2.0 * math.asin(math.sqrt(0.5 * r)) + math.sqrt(r * (2.0 - r))) / math.pi


def r_s(A: float) -> float:
    """Inverse of sep_action on [0, 1]."""
    if not 0.0 <= A <= 1.0:
        raise ValueError("critical-level action ranges over [0, 1]")
    if A == 0.0:
        return 0.0
    if A == 1.0:
        return 2.0
    return brentq(lambda r: sep_action(r) - A, 0.0, 2.0, xtol=1e-14, rtol=8.9e-16)


def r_s_prime(A: float) -> float:
    """d r_s / d A = pi sqrt(r_s / (2 - r_s))."""
    rs = r_s(A)
    return math.pi * math.sqrt(rs / (2.0 - rs))


def E_of_action(A: float, r: float, side: str = "high",
                seed: float | None = None) -> float:
    """Level value with the given action at fixed r.

    The action is monotone increasing in E within each level-topology band
    but not across the critical values, so the band must be named:
    "high" is E > r (the two-component side, valid for r < 2, action range
    (sep_action(r), 1)), "low" is E below min(1, r), "mid" is 1 < E < r
    (r > 1 only).  Out-of-band actions raise ValueError.

    Safeguarded Newton on the monotone action, using the closed-form slope
    dA/dE = tau_p/pi; a nearby seed (e.g. the solution at a neighbouring
    action) cuts the solve to a couple of quadratures.
    """
    r = float(r)
    margin = 1e-9
    if side == "high":
        if r >= 2.0:
            raise ValueError("no levels above E = r for r >= 2")
        top = 1.0 + 0.25 * r * r
        lo, hi = r + margin, top - margin * max(1.0, top)
    elif side == "low":
        lo, hi = -r + margin, min(1.0, r) - margin
    elif side == "mid":
        if r <= 1.0:
            raise ValueError("no band between the critical values for r <= 1")
        lo, hi = 1.0 + margin, r - margin
    else:
        raise ValueError(f"unknown side {side!r}")
    lo0, hi0 = lo, hi
    x = seed if seed is not None and lo < seed < hi else 0.5 * (lo + hi)
    for _ in range(90):
        val, slope, _ = action_jet(x, r)
        f = val - A
        if f == 0.0:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        x_new = x - f / slope
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if (abs(x_new - x) < 1e-14 * max(1.0, abs(x))
                or hi - lo < 4e-16 * max(1.0, abs(hi))):
            if abs(f) < 1e-9:
                return x
            break
        x = x_new
    a_lo = level_data(lo0, r).action
    a_hi = level_data(hi0, r).action
    if not a_lo < A < a_hi:
        raise ValueError(
            f"action {A!r} out of band [{a_lo:.6f}, {a_hi:.6f}] "
            f"for side {side!r} at r = {r!r}")
    f = lambda E: level_data(E, r).action - A
    return brentq(f, lo0, hi0, xtol=1e-13, rtol=8.9e-16)


def _doubling_average(f, tol: float = 1e-12, n0: int = 256, n_max: int = 1 << 16):
    """Average of a smooth 2 pi-periodic integrand by doubled trapezoid sums."""
    n = n0
    prev = None
    while n <= n_max:
        xi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        val = float(np.mean(f(xi)))
        if prev is not None and abs(val - prev) < tol * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    return prev


def U_direct(r: float, G: float, g: float) -> float:
    """Averaged inverse separation between the inner orbit and the outer
    point, parametrized by eccentric anomaly.

    Constant along each level of euler_E at fixed r; diverges
    logarithmically on approach to the critical level E = r (reachable
    for r <= 2), where the orbit meets the outer point.
    """
    if r <= 0:
        raise ValueError("outer distance r must be positive")
    if abs(G) > 1.0:
        raise ValueError("|G| <= 1 required")
    e = math.sqrt(max(0.0, 1.0 - G * G))
    cg, sg = math.cos(g), math.sin(g)

    def dist2(xi):
        w = 1.0 - e * np.cos(xi)
        return w * w + 2.0 * r * ((np.cos(xi) - e) * cg - G * np.sin(xi) * sg) + r * r

    xi_probe = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    probe = dist2(xi_probe)
    i_min = int(np.argmin(probe))
    if probe[i_min] < (100.0 * COLLISION_FLOOR) ** 2:
        # narrow dips can slip between probe points; refine before deciding
        step = xi_probe[1]
        local = dist2(np.linspace(xi_probe[i_min] - step, xi_probe[i_min] + step, 2048))
        if float(np.min(local)) < COLLISION_FLOOR**2:
            raise CollisionError(
                f"orbit approaches the outer point within {COLLISION_FLOOR:g}")

    def f(xi):
        return (1.0 - e * np.cos(xi)) / np.sqrt(dist2(xi))

    return _doubling_average(f)


def e_signed(E: float, r: float) -> float:
    """Signed eccentricity of the level's apex point: r/2 - sqrt(1 + r^2/4 - E).

    Negative exactly on -r <= E < 1; equals r/2 at the top level and
    min(r - 1, 1) at the critical level E = r.
    """
    disc = 1.0 + 0.25 * r * r - E
    if disc < 0:
        raise ValueError(f"E = {E!r} above the top level at r = {r!r}")
    return 0.5 * r - math.sqrt(disc)


def _F_direct(E: float, r: float) -> float:
    """Apex-point anomaly average, robust arbitrarily close to E = r.

    The squared separation is a quadratic in cos(xi) with both roots outside
    [-1, 1]; evaluating it as ae^2 (c - c_near)(c - c_far) with the near
    root's offset from the singular endpoint computed by rationalized
    differences avoids the catastrophic cancellation the expanded form
    suffers when the level approaches the critical one.
    """
    disc = 1.0 + 0.25 * r * r - E
    sq = math.sqrt(max(disc, 0.0))
    e = 0.5 * r - sq
    ae = abs(e)
    s = 1.0 if e >= 0 else -1.0

    if ae < 1e-9:
        def f0(xi):
            return 1.0 / math.sqrt(1.0 + 2.0 * s * r * math.cos(xi) + r * r)
        val, _ = quad(f0, 0.0, math.pi, **_QUAD_OPTS)
        return val / math.pi

    # t = r - 1 - e, stable against the cancellation at E -> r for r < 2
    if r <= 2.0:
        t = (r - E) / ((1.0 - 0.5 * r) + sq)
    else:
        t = (0.5 * r - 1.0) + sq
    rad = r * (1.0 - ae * ae) * (r - 2.0 * s * ae)
    sqrad = math.sqrt(max(rad, 0.0))
    dd = sqrad + (r - s * ae - ae * ae)
    off = t * t / dd                      # near root sits at -s*(1 + off)
    c_far = (ae - s * r - s * sqrad) / (ae * ae)

    def f(xi):
        c = math.cos(xi)
        q_near = (1.0 + s * c) + off      # |c - c_near|
        q_far = abs(c - c_far)
        w = 1.0 - ae * c
        return w / (ae * math.sqrt(q_near * q_far))

    sing = math.pi if s > 0 else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(f, 0.0, math.pi, points=[sing], **_QUAD_OPTS)
    return val / math.pi


def F_of(E: float, r: float) -> float:
    """The averaged coupling as a function of the level value alone.

    Uses the weighted-period representation through j_beta; falls back to
    the direct anomaly average of the apex-point integrand where the
    representation is ill-conditioned (apex eccentricity near 0 or +-1,
    top levels, the immediate vicinity of the critical level E = r).
    """
    E, r = float(E), float(r)
    _validate_level(E, r)
    e = e_signed(E, r)
    if abs(e) < 1e-3 or 1.0 - e * e < 1e-9 or abs(E - r) < 1e-4:
        return _F_direct(E, r)
    rad = r * (r - 2.0 * e) * (1.0 - e * e)
    if rad < 1e-12:
        return _F_direct(E, r)
    root = math.sqrt(rad)
    zp = (e - r + root) / (e * e)
    zm = (e - r - root) / (e * e)
    denom = (zm + 1.0) * (zp - 1.0)
    if denom <= 1e-12:
        return _F_direct(E, r)
    kf = (1.0 + zp) * (zm - 1.0) / ((1.0 + zm) * (zp - 1.0))
    bf = (zm - 1.0) / (1.0 + zm)
    if not (1e-11 < kf < 1.0 - 1e-11) or bf < 0:
        return _F_direct(E, r)
    pref = 2.0 * (1.0 - e) / (math.pi * abs(e) * math.sqrt(denom))
    bracket = (1.0 + e) / (1.0 - e) * j_beta(0.0, kf) - 2.0 * e / (1.0 - e) * j_beta(bf, kf)
    return pref * bracket


def level_curve(E: float, r: float, n: int = 256) -> list[np.ndarray]:
    """Sample the level as arrays of (g, G) rows parametrized by the level's
    own time; two mirror components when the level does not cross G = 0
    (kappa > 0), one closed curve otherwise."""
    if n < 8:
        raise ValueError("need at least 8 points per component")
    ld = level_data(E, r, with_action=False)
    theta = np.linspace(0.0, 2.0 * Tp_of(ld.kappa), n)
    G = ld.sigma * np.asarray(breve_G(ld.kappa, theta))
    x = (E - G * G) / (r * np.sqrt(np.clip(1.0 - G * G, 1e-300, None)))
    half = theta <= Tp_of(ld.kappa)
    g = np.where(half, -1.0, 1.0) * np.arccos(np.clip(x, -1.0, 1.0))
    comp = np.column_stack([g, G])
    if ld.kappa > 0:
        return [comp, np.column_stack([g, -G])]
    return [comp]
