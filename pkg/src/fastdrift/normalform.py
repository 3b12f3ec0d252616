"""Normalization drivers: one step, the analytic iteration, and the cutoff lane.

A step solves the homological equation for a generator Y, then pushes the
field through the Lie series.  The analytic iteration repeats the step on a
width-shrink schedule and contracts the perturbation quadratically; the
smooth lane works behind a sharp ultraviolet cutoff and stalls at the
cutoff-remainder floor instead of contracting forever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fields import (
    FieldError,
    SmoothingParams,
    VectorField3,
    remainder,
    truncate,
    vf_norm,
    vf_smooth_norm,
)
from .homological import (
    DriverField,
    lie_bracket,
    lie_series_mixed,
    lie_transform,
    solve_homological,
)


class HypothesisError(ValueError):
    """A normalization step was requested outside its validity region."""


@dataclass(frozen=True)
class StepParams:
    """Widths, weights and schedule constants for the normalization drivers.

    u = (r, sigma, s) are the domain widths (s is ignored on the smooth
    lane), w = (rho, tau, t) the weight vector, which doubles as the amount
    of width consumed by a step.  The constructor only checks positivity;
    the geometric margins (quarters for a bare step, eighths/tenths for the
    full iteration) differ between the step lemma and the iteration
    theorems, so they are evaluated and flagged in check_step_hypotheses
    and enforced by each driver against its own gate.
    """

    u: tuple[float, float, float]
    w: tuple[float, float, float]
    s1: float = 0.01
    s2: float = 0.01
    p: int = 8
    K: int | None = None
    ell: int | None = None
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    lie_tol: float = 1e-13
    quad_tol: float = 1e-10

    def __post_init__(self):
        u = tuple(float(x) for x in self.u)
        w = tuple(float(x) for x in self.w)
        if len(u) != 3 or len(w) != 3:
            raise FieldError("u and w must have three components")
        if min(u) < 0:
            raise FieldError("widths must be nonnegative")
        if min(w) <= 0:
            raise FieldError("weights must be positive")
        if self.s1 <= 0 or self.s2 <= 0:
            raise FieldError("s1, s2 must be positive")
        if self.p < 0:
            raise FieldError("p must be nonnegative")
        if self.K is not None and self.K < 1:
            raise FieldError("cutoff K must be positive")
        if self.ell is not None and self.ell < 1:
            raise FieldError("smooth order ell must be positive")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "w", w)

    def cutoff_weights(self) -> tuple[float, float, float]:
        """Smooth-lane weight vector (rho, tau, 1/(c0 K^{1+delta}))."""
        if self.K is None:
            raise FieldError("cutoff K not set")
        sm = self.smoothing
        return (self.w[0], self.w[1], 1.0 / (sm.c0 * self.K ** (1.0 + sm.delta_exp)))


@dataclass
class StepDiagnostics:
    """Measured hypothesis quantities and pass flags for one state."""

    lane: str
    Q: float
    chi: float
    theta1: float
    theta2: float
    theta3: float
    eta: float
    q: float
    drive_ratio: float
    norm_before: float
    smallness: float
    flags: dict[str, bool]
    norm_after: float | None = None
    bound_after: float | None = None
    floor_after: float | None = None
    residual: float | None = None
    generator: VectorField3 | None = None

    def first_failure(self, keys) -> str | None:
        for k in keys:
            if not self.flags[k]:
                return k
        return None


@dataclass
class StepRecord:
    step: int
    norm_P: float
    Q: float
    chi: float
    theta1: float
    theta2: float
    theta3: float
    eta: float
    branch: str


@dataclass
class IterationHistory:
    """Per-step norms and diagnostics of a full normalization run."""

    lane: str
    records: list[StepRecord] = field(default_factory=list)
    completed: bool = True
    failed_step: int | None = None
    failure: str | None = None
    final_ok: bool | None = None
    branch: str | None = None
    early_exit: bool = False
    prediction: float | None = None
    prediction_quadratic: float | None = None
    prediction_floor: float | None = None
    floor_measured: float | None = None
    report: dict | None = None

    @property
    def norms(self) -> list[float]:
        return [rec.norm_P for rec in self.records]


# gates, per lemma
STEP_REQUIRED = ("geom_step", "drive", "chi", "theta1", "theta2", "theta3", "smallness")
STEP_REQUIRED_SMOOTH = ("geom_step", "chi", "theta1", "theta2", "theta3", "smallness")
NFT_REQUIRED = ("geom_nft", "chi", "theta1", "theta2", "theta3", "eta")
GNFT_REQUIRED = ("geom_nft", "chi", "theta1", "theta2", "theta3", "eta")


def _grid_ratios(N: DriverField) -> dict:
    v = np.abs(N.v_grid)
    return {
        "inv_v": float(np.max(1.0 / v)),
        "omega": float(np.max(np.abs(N.omega_grid) / v)),
        "dyv": float(np.max(np.abs(N.dv_dy) / v)),
        "dyom": float(np.max(np.abs(N.domega_dy) / v)),
        "dIv": float(np.max(np.abs(N.dv_dI) / v)),
        "dIom": float(np.max(np.abs(N.domega_dI) / v)),
    }


def check_step_hypotheses(N: DriverField, P: VectorField3, params: StepParams,
                          lane: str = "analytic") -> StepDiagnostics:
    """Evaluate every hypothesis quantity of the active lane and flag each.

    Diagnostic only: nothing is raised here.  geom_step carries the
    quarter-margin geometry a bare step needs, geom_nft the tighter
    eighth/tenth margins of the full iteration.
    """
    if lane not in ("analytic", "smooth"):
        raise FieldError(f"unknown lane {lane!r}")
    r, sigma, s = params.u
    rho, tau, t = params.w
    s1, s2 = params.s1, params.s2
    dom = N.domain
    diam = (dom.Y_interval[1] - dom.Y_interval[0]) + 2.0 * sigma
    m = _grid_ratios(N)
    p_eta = np.inf if params.p == 0 else 1.0 / math.sqrt(params.p)

    if lane == "analytic":
        Q = 3.0 * diam * m["inv_v"]
        chi = (diam / s2) * m["dyv"]
        theta1 = 2.0 * math.exp(s2) * diam * m["dyom"] * (tau / t)
        theta2 = 4.0 * diam * m["dIv"] * (rho / tau)
        theta3 = 8.0 * diam * m["dIom"] * (rho / t)
        drive = (diam / t) * m["omega"]
        norm_P = vf_norm(P, params.u, params.w)
        eta = math.sqrt(max(drive, 2.0 ** 7 * math.exp(2 * s2) * (Q * norm_P) ** 2))
        geom_step = rho < r / 4 and tau < math.exp(-s2) * sigma / 4 and t < s / 5
        geom_nft = rho < r / 8 and tau < math.exp(-s2) * sigma / 8 and t < s / 10
    else:
        if params.K is None or params.ell is None:
            raise FieldError("smooth lane needs K and ell")
        sm = params.smoothing
        Kfac = sm.c0 * params.K ** (1.0 + sm.delta_exp)
        Q = 3.0 * math.exp(s1) * diam * m["inv_v"]
        drive = (diam / s1) * m["omega"]
        chi = max(drive, (diam / s2) * m["dyv"])
        theta1 = 2.0 * math.exp(s1 + s2) * diam * m["dyom"] * Kfac * tau
        theta2 = 4.0 * math.exp(s1) * diam * m["dIv"] * (rho / tau)
        theta3 = 8.0 * math.exp(s1) * diam * m["dIom"] * Kfac * rho
        norm_P = vf_smooth_norm(P, params.cutoff_weights(), 0)
        eta = 2.0 ** 4 * math.exp(s2) * Q * norm_P
        geom_step = rho < r / 4 and tau < math.exp(-s2) * sigma / 4
        geom_nft = rho < r / 8 and tau < math.exp(-s2) * sigma / 8

    smallness = 2.0 * Q * norm_P
    flags = {
        "geom_step": geom_step,
        "geom_nft": geom_nft,
        "chi": chi <= 1.0,
        "theta1": theta1 <= 1.0,
        "theta2": theta2 <= 1.0,
        "theta3": theta3 <= 1.0,
        "drive": drive <= 1.0,
        "smallness": smallness < 1.0,
        "eta": eta < p_eta,
    }
    return StepDiagnostics(lane=lane, Q=Q, chi=chi, theta1=theta1, theta2=theta2,
                           theta3=theta3, eta=eta, q=Q * norm_P, drive_ratio=drive,
                           norm_before=norm_P, smallness=smallness, flags=flags)


def _shrunk_widths(params: StepParams, lane: str) -> tuple[float, float, float]:
    r, sigma, s = params.u
    rho, tau, t = params.w
    s_next = s - 5.0 * t if lane == "analytic" else s
    return (r - 4.0 * rho, sigma - 4.0 * tau * math.exp(params.s2), s_next)


def nf_step(N: DriverField, P: VectorField3, params: StepParams,
            lane: str = "analytic") -> tuple[VectorField3, StepDiagnostics]:
    """One normalization step: returns (P_plus, diagnostics); N is untouched.

    Gates on the step-lemma hypotheses (quarter margins, theta forms,
    2*Q*norm(P) < 1) and refuses with the failing inequality named.  The
    transformed perturbation is assembled as

        P_plus = (B + P) + sum_{m>=1} L_Y^m [B/(m+1)! + P/m!],  B = L_Y N,

    which is the Lie series of N + P with the unperturbed part cancelled
    analytically, so no large N-sized tail is ever summed.  On the smooth
    lane the homological equation is solved for the cutoff part T_K P only
    and B + P then carries the remainder R_K P.
    """
    diag = check_step_hypotheses(N, P, params, lane)
    gate = STEP_REQUIRED if lane == "analytic" else STEP_REQUIRED_SMOOTH
    bad = diag.first_failure(gate)
    if bad is not None:
        val = {"geom_step": None, "drive": diag.drive_ratio, "chi": diag.chi,
               "theta1": diag.theta1, "theta2": diag.theta2, "theta3": diag.theta3,
               "smallness": diag.smallness}[bad]
        detail = "" if val is None else f" = {val:.3e}"
        raise HypothesisError(f"step hypothesis {bad}{detail} fails")

    if lane == "analytic":
        Z = P
    else:
        Z = VectorField3(*(truncate(c, params.K) for c in P.components))
    Y, res = solve_homological(N, Z, tol=params.quad_tol)
    diag.residual = res
    diag.generator = Y

    if lane == "analytic":
        u_wide = tuple(a + b for a, b in zip(params.u, params.w))
        q = 3.0 * vf_norm(Y, u_wide, params.w)
    else:
        q = 3.0 * vf_smooth_norm(Y, params.cutoff_weights(), 0)
    diag.q = q
    if q >= 1.0:
        raise HypothesisError(f"generator too large: q = {q:.3e} >= 1")

    B = lie_bracket(Y, N.as_vector3())
    head = B + P
    tail = lie_series_mixed(Y, B, P, q, tol=params.lie_tol)
    P_plus = head + tail

    u_next = _shrunk_widths(params, lane)
    s2Q = 8.0 * math.exp(params.s2) * diag.Q
    if lane == "analytic":
        diag.norm_after = vf_norm(P_plus, u_next, params.w)
        diag.bound_after = s2Q * diag.norm_before ** 2
    else:
        wK = params.cutoff_weights()
        sm = params.smoothing
        diag.norm_after = vf_smooth_norm(P_plus, wK, 0)
        diag.floor_after = (2.0 * sm.c0 * params.K ** (sm.delta_exp - params.ell)
                            * vf_smooth_norm(P, wK, params.ell))
        diag.bound_after = s2Q * diag.norm_before ** 2 + diag.floor_after
    return P_plus, diag


def _record(step: int, norm_w0: float, diag: StepDiagnostics, branch: str) -> StepRecord:
    return StepRecord(step=step, norm_P=norm_w0, Q=diag.Q, chi=diag.chi,
                      theta1=diag.theta1, theta2=diag.theta2, theta3=diag.theta3,
                      eta=diag.eta, branch=branch)


def _abort(history: IterationHistory, step: int, reason: str, allow_partial: bool):
    history.completed = False
    history.failed_step = step
    history.failure = reason
    if not allow_partial:
        raise HypothesisError(f"step {step}: hypothesis {reason} fails")


def nft_iterate(N: DriverField, P: VectorField3, params: StepParams,
                allow_partial: bool = False) -> tuple[VectorField3, IterationHistory]:
    """Full analytic iteration: one base step at weight w, then p inner steps
    at weight w/p on the shrinking schedule

        r_j = r_1 - 4(j-1) rho/p,  sigma_j = sigma_1 - 4 e^{s2} (j-1) tau/p,
        s_j = s_1 - 5(j-1) t/p,

    so the run ends exactly at (r - 8 rho, sigma - 8 e^{s2} tau, s - 10 t).
    History rows report the perturbation norm at the base weight w for every
    stage; final_ok records whether the 2^{-(p+1)} contraction target holds.
    On a hypothesis failure the run raises with the step index, or (with
    allow_partial) returns the partial history behind the completed flag.
    """
    w0 = params.w
    history = IterationHistory(lane="analytic")
    diag0 = check_step_hypotheses(N, P, params, "analytic")
    norm0 = diag0.norm_before
    history.records.append(_record(0, norm0, diag0, "quadratic"))

    # report-only exponential-stability constants
    psi = np.linspace(0.0, 2.0 * np.pi, 4 * (N.domain.K_max + 1), endpoint=False)
    eps_sup = float(np.max(np.abs(P.X1.values_on_grid(psi))))
    varrho = (eps_sup / norm0) ** 2 if norm0 > 0 else float("inf")
    diam = (N.domain.Y_interval[1] - N.domain.Y_interval[0]) + 2.0 * params.u[1]
    history.report = {
        "eps_apriori": eps_sup,
        "varrho": varrho,
        "stability_C": min(2.0 ** -7 * diag0.Q ** -2 * math.exp(-2 * params.s2)
                           * varrho ** 2 * math.log(2.0), params.w[2] / diam),
        "stability_exponent": 2.0,
    }

    bad = diag0.first_failure(NFT_REQUIRED)
    if bad is not None:
        _abort(history, 0, bad, allow_partial)
        return P, history

    try:
        P1, diag_base = nf_step(N, P, params, "analytic")
    except HypothesisError as err:
        _abort(history, 0, str(err), allow_partial)
        return P, history
    u1 = _shrunk_widths(params, "analytic")
    P_j = P1
    u_j = u1
    history.records.append(_record(1, vf_norm(P1, u1, w0), diag_base, "quadratic"))

    p = params.p
    if p > 0:
        w1 = tuple(x / p for x in w0)
        rho, tau, t = w0
        for j in range(1, p + 1):
            params_j = replace(params, u=u_j, w=w1)
            try:
                P_next, diag_j = nf_step(N, P_j, params_j, "analytic")
            except HypothesisError as err:
                _abort(history, j, str(err), allow_partial)
                return P_j, history
            u_j = (u1[0] - 4.0 * j * rho / p,
                   u1[1] - 4.0 * math.exp(params.s2) * j * tau / p,
                   u1[2] - 5.0 * j * t / p)
            P_j = P_next
            history.records.append(_record(j + 1, vf_norm(P_j, u_j, w0), diag_j,
                                           "quadratic"))

    final_norm = history.records[-1].norm_P
    history.final_ok = final_norm < 2.0 ** -(p + 1) * norm0
    return P_j, history


def gnft_iterate(N: DriverField, P: VectorField3, params: StepParams,
                 allow_partial: bool = False) -> tuple[VectorField3, IterationHistory]:
    """Cutoff-lane iteration with sup norms at the cutoff weight vector.

    Each step normalizes the band |k| <= K only, so the high-mode remainder
    survives every step and the history decays until it hits that floor.
    If one base step already lands below the floor the run exits early.
    The returned history flags which branch of the final bound

        max{ 2^{-(p+1)} norm(P0),  2 c0 K^{delta-ell} smooth_norm(P0, ell) }

    dominates the prediction, alongside the measured norm of R_K P0 (the
    genuine floor, which the stated constants overestimate by design).
    """
    if params.K is None or params.ell is None:
        raise FieldError("gnft_iterate needs K and ell")
    Kmax = P.domain.K_max
    if Kmax < params.K:
        raise FieldError(f"P stores modes to {Kmax}, below cutoff K={params.K}")
    wK = params.cutoff_weights()
    sm = params.smoothing
    history = IterationHistory(lane="smooth")

    diag0 = check_step_hypotheses(N, P, params, "smooth")
    norm0 = diag0.norm_before
    norm0_ell = vf_smooth_norm(P, wK, params.ell)
    tail0 = VectorField3(*(remainder(c, params.K) for c in P.components))
    history.floor_measured = vf_smooth_norm(tail0, wK, 0)
    history.prediction_quadratic = 2.0 ** -(params.p + 1) * norm0
    history.prediction_floor = (2.0 * sm.c0 * params.K ** (sm.delta_exp - params.ell)
                                * norm0_ell)
    history.prediction = max(history.prediction_quadratic, history.prediction_floor)
    history.branch = ("floor" if history.prediction_floor >= history.prediction_quadratic
                      else "quadratic")
    history.records.append(_record(0, norm0, diag0, history.branch))

    bad = diag0.first_failure(GNFT_REQUIRED)
    if bad is not None:
        _abort(history, 0, bad, allow_partial)
        return P, history

    # one base step always happens; if its quadratic gain is already below
    # the cutoff floor the theorem stops there
    early = (8.0 * math.exp(params.s2) * diag0.Q * norm0 ** 2
             <= sm.c0 * params.K ** (sm.delta_exp - params.ell) * norm0_ell)
    try:
        P1, diag_base = nf_step(N, P, params, "smooth")
    except HypothesisError as err:
        _abort(history, 0, str(err), allow_partial)
        return P, history
    P_j = P1
    history.records.append(_record(1, diag_base.norm_after, diag_base, history.branch))

    if early:
        history.early_exit = True
    elif params.p > 0:
        w1 = tuple(x / params.p for x in params.w)
        rho, tau = params.w[0], params.w[1]
        u1 = _shrunk_widths(params, "smooth")
        u_j = u1
        for j in range(1, params.p + 1):
            params_j = replace(params, u=u_j, w=w1)
            try:
                P_next, diag_j = nf_step(N, P_j, params_j, "smooth")
            except HypothesisError as err:
                _abort(history, j, str(err), allow_partial)
                return P_j, history
            u_j = (u1[0] - 4.0 * j * rho / params.p,
                   u1[1] - 4.0 * math.exp(params.s2) * j * tau / params.p,
                   u1[2])
            P_j = P_next
            history.records.append(_record(j + 1, vf_smooth_norm(P_j, wK, 0), diag_j,
                                           history.branch))

    final_norm = history.records[-1].norm_P
    history.final_ok = final_norm <= history.prediction
    return P_j, history


def write_history_csv(history: IterationHistory, path: str) -> None:
    """Emit the per-step record table; column set is part of the contract."""
    with open(path, "w", newline="") as fh:
        fh.write("step,norm_P,Q,chi,theta1,theta2,theta3,eta,branch\n")
        for rec in history.records:
            fh.write(f"{rec.step},{rec.norm_P!r},{rec.Q!r},{rec.chi!r},"
                     f"{rec.theta1!r},{rec.theta2!r},{rec.theta3!r},"
                     f"{rec.eta!r},{rec.branch}\n")
