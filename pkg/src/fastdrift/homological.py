"""Transport integrals along the drive, the homological solver, and Lie machinery.

The linearized conjugation problem reduces, mode by mode in the angle, to
first-order ODEs in the drive coordinate y.  Both solution operators are
cumulative integrals from a base point y0 with an oscillatory phase factor;
they are evaluated here with composite Gauss-Legendre quadrature on top of
the cubic-spline representation of the grid data.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .fields import (
    DomainSpec,
    FieldError,
    NormParams,
    ScalarField,
    VectorField3,
    _fd4,
    make_field,
    vf_norm,
)


class SingularDriverError(FieldError):
    """Drive speed too close to zero for the transport integrals."""


class LieDivergenceError(ValueError):
    """Lie series refused: contraction parameter q >= 1."""


V_FLOOR_DEFAULT = 1e-6


def _profile(f: ScalarField) -> np.ndarray:
    """Real (nI, ny) values of a psi-independent field."""
    K = f.domain.K_max
    others = np.delete(f.coeffs, K, axis=0)
    scale = max(float(np.max(np.abs(f.coeffs))), 1e-300)
    if others.size and np.max(np.abs(others)) > 1e-9 * scale:
        raise FieldError("field is not psi-independent")
    return f.coeffs[K].real.copy()


@dataclass(frozen=True)
class DriverField:
    """Unperturbed motion: actions frozen, y driven at speed v, angle at rate omega."""

    v: ScalarField
    omega: ScalarField
    y0: float
    v_floor: float = V_FLOOR_DEFAULT

    def __post_init__(self):
        if self.v.domain != self.omega.domain:
            raise FieldError("v and omega live on different domains")
        vg = _profile(self.v)
        _profile(self.omega)
        if np.min(np.abs(vg)) <= self.v_floor:
            raise SingularDriverError(
                f"min |v| = {np.min(np.abs(vg)):.3e} <= floor {self.v_floor:.1e}")
        lo, hi = self.v.domain.Y_interval
        if not (lo <= self.y0 <= hi):
            raise FieldError("base point outside Y interval")

    @classmethod
    def from_callables(cls, domain: DomainSpec, v: Callable, omega: Callable,
                       y0: float | None = None, v_floor: float = V_FLOOR_DEFAULT) -> "DriverField":
        vf = make_field(domain, lambda I, y, psi: v(I, y) + 0.0 * psi)
        of = make_field(domain, lambda I, y, psi: omega(I, y) + 0.0 * psi)
        if y0 is None:
            y0 = 0.5 * (domain.Y_interval[0] + domain.Y_interval[1])
        # snap to the nearest grid node so cumulative quadrature anchors exactly
        yn = domain.y_nodes
        y0 = float(yn[np.argmin(np.abs(yn - y0))])
        return cls(vf, of, y0, v_floor)

    @property
    def domain(self) -> DomainSpec:
        return self.v.domain

    @property
    def y0_index(self) -> int:
        return int(np.argmin(np.abs(self.domain.y_nodes - self.y0)))

    # grid profiles and their fourth-order grid derivatives

    @property
    def v_grid(self) -> np.ndarray:
        return _profile(self.v)

    @property
    def omega_grid(self) -> np.ndarray:
        return _profile(self.omega)

    def _h_I(self) -> float:
        d = self.domain
        return (d.I_interval[1] - d.I_interval[0]) / (d.grid_I - 1)

    def _h_y(self) -> float:
        d = self.domain
        return (d.Y_interval[1] - d.Y_interval[0]) / (d.grid_y - 1)

    @property
    def dv_dI(self) -> np.ndarray:
        return _fd4(self.v_grid, self._h_I(), axis=0)

    @property
    def dv_dy(self) -> np.ndarray:
        return _fd4(self.v_grid, self._h_y(), axis=1)

    @property
    def domega_dI(self) -> np.ndarray:
        return _fd4(self.omega_grid, self._h_I(), axis=0)

    @property
    def domega_dy(self) -> np.ndarray:
        return _fd4(self.omega_grid, self._h_y(), axis=1)

    def as_vector3(self) -> VectorField3:
        return VectorField3(ScalarField.zeros(self.domain), self.v.copy(), self.omega.copy())


def mul_profile(f: ScalarField, prof: np.ndarray) -> ScalarField:
    """Multiply every angle mode by a psi-independent (nI, ny) profile."""
    return ScalarField(f.domain, f.coeffs * prof[None, :, :])


# -- cumulative transport quadrature -----------------------------------------------


_GL_ORDER = 10
_GL_X, _GL_W = leggauss(_GL_ORDER)


def _cell_points(y_nodes: np.ndarray, subdiv: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Gauss-Legendre points/weights for each y cell split into subdiv pieces.

    Returns (pts, wts) flattened in increasing order plus points-per-cell,
    so per-original-cell integrals are contiguous slices.
    """
    lo = np.repeat(y_nodes[:-1], subdiv)
    hi = np.repeat(y_nodes[1:], subdiv)
    frac = np.tile(np.arange(subdiv, dtype=float), y_nodes.size - 1)
    a = lo + (hi - lo) * frac / subdiv
    b = lo + (hi - lo) * (frac + 1) / subdiv
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    wts = (half[:, None] * _GL_W[None, :]).ravel()
    return pts, wts, subdiv * _GL_ORDER


class _Transport:
    """Shared quadrature state for one driver on one subdivision level."""

    def __init__(self, drv: DriverField, subdiv: int):
        d = drv.domain
        self.drv = drv
        self.pts, self.wts, self.per_cell = _cell_points(d.y_nodes, subdiv)
        vr, vi = drv.v._mode_spline(0)
        self.v_pts = vr(d.I_nodes, self.pts)  # (nI, npts)
        ratio = drv.omega_grid / drv.v_grid
        phi_sp = CubicSpline(d.y_nodes, ratio, axis=1).antiderivative()
        self.phi_pts = phi_sp(self.pts)  # (npts,) per row -> (nI, npts)
        if self.phi_pts.ndim == 1:
            self.phi_pts = np.broadcast_to(self.phi_pts, (d.grid_I, self.pts.size))
        else:
            self.phi_pts = self.phi_pts.T if self.phi_pts.shape[0] != d.grid_I else self.phi_pts
        self.phi_nodes = phi_sp(d.y_nodes)
        if self.phi_nodes.ndim == 1:
            self.phi_nodes = np.broadcast_to(self.phi_nodes, (d.grid_I, d.grid_y))
        elif self.phi_nodes.shape[0] != d.grid_I:
            self.phi_nodes = self.phi_nodes.T

    def mode_integral(self, g: ScalarField, k: int, extra_inv_v: bool) -> np.ndarray:
        """Node values of the cumulative integral of g_k/v^(1 or 2) * e^{ik*phi}."""
        d = self.drv.domain
        gr, gi = g._mode_spline(k)
        gk = gr(d.I_nodes, self.pts) + 1j * gi(d.I_nodes, self.pts)
        integrand = gk / self.v_pts
        if extra_inv_v:
            integrand = integrand / self.v_pts
        if k != 0:
            integrand = integrand * np.exp(1j * k * self.phi_pts)
        cell = (integrand * self.wts[None, :]).reshape(d.grid_I, -1, self.per_cell).sum(axis=2)
        cum = np.zeros((d.grid_I, d.grid_y), dtype=complex)
        np.cumsum(cell, axis=1, out=cum[:, 1:])
        i0 = self.drv.y0_index
        cum -= cum[:, i0][:, None]
        return cum


def _transport_apply(drv: DriverField, g: ScalarField, kernel: str,
                     tol: float = 1e-10) -> ScalarField:
    if g.domain != drv.domain:
        raise FieldError("field domain differs from driver domain")
    d = drv.domain
    K = d.K_max
    extra = kernel == "G"
    # subdivision chosen from the worst-mode phase increment per cell
    ratio = np.max(np.abs(drv.omega_grid / drv.v_grid))
    h_y = drv._h_y()
    subdiv = max(1, int(np.ceil(K * ratio * h_y / 0.5)))
    base = _Transport(drv, subdiv)
    fine = _Transport(drv, 2 * subdiv)
    out = np.zeros_like(g.coeffs)
    worst = 0.0
    for k in range(-K, K + 1):
        if not np.any(g.coeffs[k + K]):
            continue
        c_fine = fine.mode_integral(g, k, extra)
        c_base = base.mode_integral(g, k, extra)
        worst = max(worst, float(np.max(np.abs(c_fine - c_base))))
        yk = c_fine * np.exp(-1j * k * fine.phi_nodes) if k != 0 else c_fine
        if extra:
            yk = yk * drv.v_grid
        out[k + K] = yk
    if worst > tol:
        # one more refinement pass on everything
        finer = _Transport(drv, 4 * subdiv)
        for k in range(-K, K + 1):
            if not np.any(g.coeffs[k + K]):
                continue
            c = finer.mode_integral(g, k, extra)
            yk = c * np.exp(-1j * k * finer.phi_nodes) if k != 0 else c
            if extra:
                yk = yk * drv.v_grid
            out[k + K] = yk
    return ScalarField(d, out)


def op_F(drv: DriverField, g: ScalarField, tol: float = 1e-10) -> ScalarField:
    """Cumulative transport integral with the plain 1/v kernel."""
    return _transport_apply(drv, g, "F", tol)


def op_G(drv: DriverField, g: ScalarField, tol: float = 1e-10) -> ScalarField:
    """Transport integral with the extra v(y)/v(eta) damping factor."""
    return _transport_apply(drv, g, "G", tol)


# -- homological solver -------------------------------------------------------------


def solve_homological(drv: DriverField, Z: VectorField3,
                      tol: float = 1e-10) -> tuple[VectorField3, float]:
    """Solve the linearized conjugation equation; returns (Y, relative residual).

    Component one feeds the other two through the action-derivatives of the
    driver, so the triangular structure is solved top down.
    """
    Y1 = op_F(drv, Z.X1, tol)
    Y2 = op_G(drv, Z.X2 + mul_profile(Y1, drv.dv_dI), tol)
    rhs3 = Z.X3 + mul_profile(Y1, drv.domega_dI) + mul_profile(Y2, drv.domega_dy)
    Y3 = op_F(drv, rhs3, tol)
    Y = VectorField3(Y1, Y2, Y3)
    residual = homological_residual(drv, Y, Z)
    return Y, residual


def homological_residual(drv: DriverField, Y: VectorField3, Z: VectorField3) -> float:
    """sup |[N, Y] - Z| / sup |Z| on an oversampled angle grid."""
    R = lie_bracket(drv.as_vector3(), Y) - Z
    d = drv.domain
    psi = np.linspace(0.0, 2 * np.pi, max(64, 4 * d.K_max + 5), endpoint=False)
    num = max(float(np.max(np.abs(c.values_on_grid(psi)))) for c in R.components)
    den = max(float(np.max(np.abs(c.values_on_grid(psi)))) for c in Z.components)
    return num / max(den, 1e-300)


# -- Lie bracket and Lie series -----------------------------------------------------


def _bracket_psi_grid(domain: DomainSpec) -> np.ndarray:
    # enough collocation angles that products of band-limited fields alias-free
    M = 4 * (domain.K_max + 1)
    return 2 * np.pi * np.arange(M) / M


def _values_and_jacobian(X: VectorField3, psi: np.ndarray):
    d = X.domain
    h_I = (d.I_interval[1] - d.I_interval[0]) / (d.grid_I - 1)
    h_y = (d.Y_interval[1] - d.Y_interval[0]) / (d.grid_y - 1)
    vals, jac = [], []
    for comp in X.components:
        v = comp.values_on_grid(psi)
        vals.append(v)
        jac.append((
            _fd4(v, h_I, axis=0),
            _fd4(v, h_y, axis=1),
            comp.deriv_psi(1).values_on_grid(psi),
        ))
    return vals, jac


def _coeffs_from_values(domain: DomainSpec, vals: np.ndarray, hermitize: bool) -> np.ndarray:
    M = vals.shape[-1]
    K = domain.K_max
    c = np.fft.fft(vals, axis=-1) / M
    idx = [k % M for k in range(-K, K + 1)]
    coeffs = np.moveaxis(c[:, :, idx], -1, 0)
    if hermitize:
        flipped = np.conj(coeffs[::-1])
        coeffs = 0.5 * (coeffs + flipped)
    return coeffs


def lie_bracket(A: VectorField3, B: VectorField3) -> VectorField3:
    """[A, B] = J_B A - J_A B on the collocation grid, mapped back to modes."""
    if A.domain != B.domain:
        raise FieldError("bracket arguments on different domains")
    d = A.domain
    psi = _bracket_psi_grid(d)
    a_vals, a_jac = _values_and_jacobian(A, psi)
    b_vals, b_jac = _values_and_jacobian(B, psi)
    herm = all(c.is_hermitian for c in A.components) and all(c.is_hermitian for c in B.components)
    out = []
    for i in range(3):
        acc = np.zeros_like(a_vals[0])
        for j in range(3):
            acc += b_jac[i][j] * a_vals[j] - a_jac[i][j] * b_vals[j]
        out.append(ScalarField(d, _coeffs_from_values(d, acc, herm)))
    return VectorField3(*out)


def lie_transform(Y: VectorField3, X: VectorField3, tol: float = 1e-12,
                  norms: NormParams | None = None, max_terms: int = 60) -> VectorField3:
    """Exponential of the bracket operator applied to X, truncated by tail bound."""
    if norms is None:
        norms = NormParams(u=(1.0, 1.0, 0.0), w=(1.0, 1.0, 1.0))
    q = 3.0 * vf_norm(Y, norms.u, norms.w)
    if q >= 1.0:
        raise LieDivergenceError(f"series contraction parameter q = {q:.3g} >= 1")
    nX = vf_norm(X, norms.u, norms.w)
    total = X.copy()
    term = X
    for m in range(1, max_terms + 1):
        term = lie_bracket(Y, term).scaled(1.0 / m)
        total = total + term
        if q == 0.0:
            break
        tail = q ** (m + 1) / (1.0 - q) * nX
        if tail <= tol:
            break
    return total


def lie_series_mixed(Y: VectorField3, B: VectorField3, P: VectorField3,
                     q: float, tol: float, max_terms: int = 80) -> VectorField3:
    """Sum of L_Y^m applied to B/(m+1)! + P/m! for m >= 1.

    This is the perturbation part of the conjugated field beyond (B + P),
    grouped so every series term carries perturbation-sized norms.
    """
    if q >= 1.0:
        raise LieDivergenceError(f"series contraction parameter q = {q:.3g} >= 1")
    tb = B
    tp = P
    total = VectorField3.zeros(Y.domain)
    for m in range(1, max_terms + 1):
        tb = lie_bracket(Y, tb).scaled(1.0 / (m + 1))
        tp = lie_bracket(Y, tp).scaled(1.0 / m)
        term = tb + tp
        total = total + term
        size = max(float(np.max(np.abs(c.coeffs))) for c in term.components)
        est = q ** m / max(1.0 - q, 1e-12)
        if size <= tol and est <= np.sqrt(tol):
            break
    return total
