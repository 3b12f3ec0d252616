"""Gridded scalar/vector fields, spectral in the angle, with weighted norms.

A field f(I, y, psi) is stored as Fourier coefficients in psi on a tensor
grid in (I, y): coeffs[k + K_max] is the complex mode-k surface.  Norms:

* analytic weighted norm: sum_k sup_grid |f_k| * exp(|k| s)
* vector-field norm: sum_i w_i^{-1} * weighted_norm(X_i)
* smooth norm: max_{0<=j<=ell} sup |d^j f / d psi^j|

Sups are taken over the stored real grid; the complex widenings enter only
through the exp(|k| s) factor and the domain-diameter bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    """Real grid box [I_a, I_b] x [y_a, y_b] x T with analyticity widenings."""

    I_interval: tuple[float, float]
    Y_interval: tuple[float, float]
    widen_r: float = 0.0
    widen_sigma: float = 0.0
    widen_s: float = 0.0
    grid_I: int = 64
    grid_y: int = 64
    K_max: int = 32

    def __post_init__(self):
        if self.I_interval[1] <= self.I_interval[0]:
            raise FieldError("I_interval must be increasing")
        if self.Y_interval[1] <= self.Y_interval[0]:
            raise FieldError("Y_interval must be increasing")
        if min(self.widen_r, self.widen_sigma, self.widen_s) < 0:
            raise FieldError("widenings must be nonnegative")
        if self.grid_I < 5 or self.grid_y < 5:
            raise FieldError("grids must have at least 5 nodes")
        if self.K_max < 0:
            raise FieldError("K_max must be nonnegative")

    @property
    def I_nodes(self) -> np.ndarray:
        return np.linspace(self.I_interval[0], self.I_interval[1], self.grid_I)

    @property
    def y_nodes(self) -> np.ndarray:
        return np.linspace(self.Y_interval[0], self.Y_interval[1], self.grid_y)

    @property
    def psi_nodes(self) -> np.ndarray:
        m = 2 * self.K_max + 1
        return np.arange(m) * (2.0 * np.pi / m)

    @property
    def diam_y(self) -> float:
        # widened strip diameter: real length plus both imaginary flanks
        return (self.Y_interval[1] - self.Y_interval[0]) + 2.0 * self.widen_sigma


@dataclass(frozen=True)
class NormParams:
    """Widths u = (r, sigma, s) and weights w = (rho, tau, t) for norms."""

    u: tuple[float, float, float]
    w: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ell: int = 0

    def __post_init__(self):
        if min(self.w) <= 0:
            raise FieldError("weights must be positive")
        if min(self.u) < 0:
            raise FieldError("widths must be nonnegative")

    def shrink(self, dw: tuple[float, float, float]) -> "NormParams":
        u = tuple(a - b for a, b in zip(self.u, dw))
        if min(u) <= 0:
            raise FieldError("width shrink leaves no domain")
        return NormParams(u=u, w=self.w, ell=self.ell)


@dataclass(frozen=True)
class SmoothingParams:
    """Cutoff constants: ||T_K f||_{ell} <= c0 K^{ell-j+delta} ||f||_j etc."""

    c0: float = 1.0
    delta_exp: float = 2.0


class ScalarField:
    """Fourier-in-angle field on a DomainSpec grid."""

    def __init__(self, domain: DomainSpec, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        expect = (2 * domain.K_max + 1, domain.grid_I, domain.grid_y)
        if coeffs.shape != expect:
            raise FieldError(f"coeffs shape {coeffs.shape} != {expect}")
        if not np.all(np.isfinite(coeffs.view(float))):
            raise FieldError("non-finite coefficient")
        self.domain = domain
        self.coeffs = coeffs
        self._splines: dict[int, tuple] = {}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "ScalarField":
        return cls(domain, np.zeros((2 * domain.K_max + 1, domain.grid_I, domain.grid_y), dtype=complex))

    def copy(self) -> "ScalarField":
        return ScalarField(self.domain, self.coeffs.copy())

    def mode(self, k: int) -> np.ndarray:
        K = self.domain.K_max
        if abs(k) > K:
            return np.zeros((self.domain.grid_I, self.domain.grid_y), dtype=complex)
        return self.coeffs[k + K]

    @property
    def is_hermitian(self) -> bool:
        K = self.domain.K_max
        scale = max(np.max(np.abs(self.coeffs)), 1e-300)
        for k in range(1, K + 1):
            if np.max(np.abs(self.coeffs[K + k] - np.conj(self.coeffs[K - k]))) > 1e-10 * scale:
                return False
        return np.max(np.abs(self.coeffs[K].imag)) <= 1e-10 * scale

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check_same(other)
        return ScalarField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check_same(other)
        return ScalarField(self.domain, self.coeffs - other.coeffs)

    def scaled(self, a: complex) -> "ScalarField":
        return ScalarField(self.domain, a * self.coeffs)

    def _check_same(self, other: "ScalarField"):
        if other.domain is not self.domain and other.domain != self.domain:
            raise FieldError("fields live on different domains")

    # -- evaluation -----------------------------------------------------------

    def _mode_spline(self, k: int):
        key = k
        if key not in self._splines:
            d = self.domain
            m = self.mode(k)
            kx = min(3, d.grid_I - 1)
            ky = min(3, d.grid_y - 1)
            sr = RectBivariateSpline(d.I_nodes, d.y_nodes, m.real, kx=kx, ky=ky)
            si = RectBivariateSpline(d.I_nodes, d.y_nodes, m.imag, kx=kx, ky=ky)
            self._splines[key] = (sr, si)
        return self._splines[key]

    def eval(self, I, y, psi):
        """Pointwise values by cubic interpolation in (I, y), exact in psi."""
        I = np.asarray(I, dtype=float)
        y = np.asarray(y, dtype=float)
        psi = np.asarray(psi, dtype=float)
        I, y, psi = np.broadcast_arrays(I, y, psi)
        out = np.zeros(I.shape, dtype=complex)
        K = self.domain.K_max
        flatI, flaty = I.ravel(), y.ravel()
        flatpsi = psi.ravel()
        acc = np.zeros(flatI.shape, dtype=complex)
        for k in range(-K, K + 1):
            if not np.any(self.coeffs[k + K]):
                continue
            sr, si = self._mode_spline(k)
            ck = sr.ev(flatI, flaty) + 1j * si.ev(flatI, flaty)
            acc += ck * np.exp(1j * k * flatpsi)
        out = acc.reshape(I.shape)
        if self.is_hermitian:
            return out.real
        return out

    def values_on_grid(self, psi: np.ndarray) -> np.ndarray:
        """Values on the stored (I, y) grid for each psi: shape (nI, ny, npsi)."""
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        K = self.domain.K_max
        ks = np.arange(-K, K + 1)
        phase = np.exp(1j * np.outer(ks, psi))  # (2K+1, npsi)
        vals = np.einsum("kij,kp->ijp", self.coeffs, phase)
        return vals

    def deriv_psi(self, order: int = 1) -> "ScalarField":
        K = self.domain.K_max
        ks = np.arange(-K, K + 1)
        fac = (1j * ks) ** order
        return ScalarField(self.domain, self.coeffs * fac[:, None, None])


def make_field(domain: DomainSpec, sampler: Callable) -> ScalarField:
    """Sample f(I, y, psi) on the grid and take the DFT over 2*K_max+1 angles.

    The sampler is called with broadcastable arrays (I, y, psi).  Real
    samples produce exactly Hermitian coefficients (rfft + mirroring).
    """
    d = domain
    m = 2 * d.K_max + 1
    I = d.I_nodes[:, None, None]
    y = d.y_nodes[None, :, None]
    psi = d.psi_nodes[None, None, :]
    try:
        vals = np.asarray(sampler(I, y, psi), dtype=float)
        vals = np.broadcast_to(vals, (d.grid_I, d.grid_y, m)).astype(float)
    except (TypeError, ValueError):
        vals = np.empty((d.grid_I, d.grid_y, m), dtype=float)
        for i, Iv in enumerate(d.I_nodes):
            for j, yv in enumerate(d.y_nodes):
                for p, pv in enumerate(d.psi_nodes):
                    vals[i, j, p] = sampler(Iv, yv, pv)
    if not np.all(np.isfinite(vals)):
        raise FieldError("sampler returned non-finite values")
    # rfft over the angle axis; c_k = (1/m) sum f e^{-ik psi}
    half = np.fft.rfft(vals, axis=2) / m
    K = d.K_max
    coeffs = np.zeros((m, d.grid_I, d.grid_y), dtype=complex)
    for k in range(0, K + 1):
        ck = half[:, :, k]
        coeffs[K + k] = ck
        if k > 0:
            coeffs[K - k] = np.conj(ck)
    coeffs[K] = coeffs[K].real  # zero mode of a real field
    return ScalarField(d, coeffs)


@dataclass
class VectorField3:
    """Triple (X1, X2, X3) of scalar fields on a shared domain."""

    X1: ScalarField
    X2: ScalarField
    X3: ScalarField

    def __post_init__(self):
        if not (self.X1.domain == self.X2.domain == self.X3.domain):
            raise FieldError("components live on different domains")

    @property
    def domain(self) -> DomainSpec:
        return self.X1.domain

    def __add__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3(self.X1 + other.X1, self.X2 + other.X2, self.X3 + other.X3)

    def __sub__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3(self.X1 - other.X1, self.X2 - other.X2, self.X3 - other.X3)

    def scaled(self, a: complex) -> "VectorField3":
        return VectorField3(self.X1.scaled(a), self.X2.scaled(a), self.X3.scaled(a))

    def copy(self) -> "VectorField3":
        return VectorField3(self.X1.copy(), self.X2.copy(), self.X3.copy())

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return (self.X1, self.X2, self.X3)

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "VectorField3":
        return cls(ScalarField.zeros(domain), ScalarField.zeros(domain), ScalarField.zeros(domain))


# -- norms ---------------------------------------------------------------------


def _norm_u(u) -> tuple[float, float, float]:
    if isinstance(u, NormParams):
        return u.u
    u = tuple(float(x) for x in u)
    if len(u) != 3:
        raise FieldError("u must have three components (r, sigma, s)")
    return u


def weighted_norm(f: ScalarField, u) -> float:
    """Analytic norm: sum_k sup_grid |f_k| exp(|k| s)."""
    _, _, s = _norm_u(u)
    K = f.domain.K_max
    ks = np.abs(np.arange(-K, K + 1))
    sups = np.max(np.abs(f.coeffs), axis=(1, 2))
    return float(np.sum(sups * np.exp(ks * s)))


def vf_norm(X: VectorField3, u, w) -> float:
    """Weighted vector-field norm: sum_i w_i^{-1} ||X_i||_u."""
    if isinstance(u, NormParams) and w is None:
        w = u.w
    w = tuple(float(x) for x in w)
    if len(w) != 3 or min(w) <= 0:
        raise FieldError("w must be three positive weights")
    return sum(weighted_norm(Xi, u) / wi for Xi, wi in zip(X.components, w))


def _oversampled_psi(domain: DomainSpec) -> np.ndarray:
    n = max(256, 8 * (domain.K_max + 1))
    return np.arange(n) * (2.0 * np.pi / n)


def smooth_norm(f: ScalarField, u, ell: int) -> float:
    """Sup-norm lane: max_{0<=j<=ell} sup |d_psi^j f| on an oversampled angle grid."""
    if ell < 0:
        raise FieldError("ell must be nonnegative")
    psi = _oversampled_psi(f.domain)
    best = 0.0
    g = f
    for j in range(ell + 1):
        vals = g.values_on_grid(psi)
        best = max(best, float(np.max(np.abs(vals))))
        if j < ell:
            g = g.deriv_psi(1)
    return best


def vf_smooth_norm(X: VectorField3, w, ell: int) -> float:
    w = tuple(float(x) for x in w)
    return sum(smooth_norm(Xi, None, ell) / wi for Xi, wi in zip(X.components, w))


def truncate(f: ScalarField, K: int) -> ScalarField:
    """Kill all modes with |k| > K (sharp Fourier cutoff T_K)."""
    if K < 0:
        raise FieldError("K must be nonnegative")
    Km = f.domain.K_max
    out = f.coeffs.copy()
    for k in range(-Km, Km + 1):
        if abs(k) > K:
            out[k + Km] = 0.0
    return ScalarField(f.domain, out)


def remainder(f: ScalarField, K: int) -> ScalarField:
    """High-mode remainder R_K f = f - T_K f."""
    return f - truncate(f, K)


# -- grid derivatives ------------------------------------------------------------

_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _fd4(vals: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order first derivative along an axis (5-point stencils)."""
    v = np.moveaxis(vals, axis, 0)
    n = v.shape[0]
    if n < 5:
        raise FieldError("need at least 5 nodes for fourth-order differences")
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    for i, c in enumerate((_EDGE0, _EDGE1)):
        out[i] = sum(cj * v[j] for j, cj in enumerate(c)) / h
        out[n - 1 - i] = -sum(cj * v[n - 1 - j] for j, cj in enumerate(c)) / h
    return np.moveaxis(out, 0, axis)


def d_dI(f: ScalarField) -> ScalarField:
    d = f.domain
    h = (d.I_interval[1] - d.I_interval[0]) / (d.grid_I - 1)
    return ScalarField(d, _fd4(f.coeffs, h, axis=1))


def d_dy(f: ScalarField) -> ScalarField:
    d = f.domain
    h = (d.Y_interval[1] - d.Y_interval[0]) / (d.grid_y - 1)
    return ScalarField(d, _fd4(f.coeffs, h, axis=2))


def d_dpsi(f: ScalarField, order: int = 1) -> ScalarField:
    return f.deriv_psi(order)


# -- serialization ----------------------------------------------------------------


def write_field_csv(f: ScalarField, path: str) -> None:
    """Rows (k, I_index, y_index, re, im); floats as shortest round-trip."""
    K = f.domain.K_max
    with open(path, "w") as fh:
        fh.write("k,I_index,y_index,re,im\n")
        for k in range(-K, K + 1):
            m = f.coeffs[k + K]
            for i in range(f.domain.grid_I):
                for j in range(f.domain.grid_y):
                    c = m[i, j]
                    fh.write(f"{k},{i},{j},{float(c.real)!r},{float(c.imag)!r}\n")


def read_field_csv(path: str, domain: DomainSpec) -> ScalarField:
    coeffs = np.zeros((2 * domain.K_max + 1, domain.grid_I, domain.grid_y), dtype=complex)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "k,I_index,y_index,re,im":
            raise FieldError(f"unexpected header {header!r}")
        for line in fh:
            k_s, i_s, j_s, re_s, im_s = line.strip().split(",")
            coeffs[int(k_s) + domain.K_max, int(i_s), int(j_s)] = float(re_s) + 1j * float(im_s)
    return ScalarField(domain, coeffs)
