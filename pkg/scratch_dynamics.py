"""Smoke checks for the dynamics module before the test suite."""
import math
import time

import numpy as np

from fastdrift.dynamics import (ExperimentParams, WindowModel, X_field,
                                X_split, Y_cal, bounds_report, chi_bump,
                                drift_experiment, hamiltonian, integrate,
                                localize, psi_zero, window_radius)
from fastdrift.euler import PhysParams

t0 = time.time()

# --- split identity at random window-ish points -------------------------
par = ExperimentParams(L=3.0)
ph = par.phys
a_lo, a_hi = par.A_window
ky_lo, ky_hi = par.ky_window
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(25):
    A = rng.uniform(a_lo, a_hi)
    ky = rng.uniform(ky_lo, ky_hi)
    psi = rng.uniform(0.1, math.pi - 0.1)
    X = X_field(A, ky, psi, ph)
    N, P = X_split(A, ky, psi, ph)
    worst = max(worst, float(np.max(np.abs(X - (N + P)))))
print("split identity worst:", worst)
assert worst < 1e-12

# --- Y_cal algebra -------------------------------------------------------
A, ky = 0.5 * (a_lo + a_hi), 0.5 * (ky_lo + ky_hi)
yv = Y_cal(A, ky, 1.0, ph)
print("Y_cal:", yv)
assert yv > 0

# degenerate: alpha=0, beta=0 -> radicand = 2c - (C - G_*)^2 / r^2
from fastdrift.charts import star_fields
r_here = window_radius(A, ky, 1)
G_here = star_fields(A, r_here, 1.0, "high")[0]
ph0 = PhysParams(alpha=0.0, C_total=0.0, c=1.0)
y0 = Y_cal(A, ky, 1.0, ph0)
expect = math.sqrt(2.0 - G_here ** 2 / r_here ** 2)
print("Y_cal degenerate:", y0, "vs", expect)
assert abs(y0 - expect) < 1e-12
# and it vanishes when C = G_* and c = alpha F_* exactly
from fastdrift.dynamics import potential_star
F_here = potential_star(A, r_here, 1)[0]
ph_z = PhysParams(alpha=1.0, C_total=G_here, c=F_here)
assert abs(Y_cal(A, ky, 1.0, ph_z)) < 1e-7

# --- psi_zero in range ---------------------------------------------------
pz = psi_zero(A, ky)
print("psi_zero:", pz)
assert 0.0 < pz < math.pi

# --- bump ---------------------------------------------------------------
assert chi_bump(0.0, 0.1, 0.2) == 1.0
assert chi_bump(0.25, 0.1, 0.2) == 0.0
mid = chi_bump(0.15, 0.1, 0.2)
assert 0.0 < mid < 1.0
print("bump mid:", mid)

# --- localize kills P away from the graph -------------------------------
P_only = lambda a, y, p: X_split(a, y, p, ph)[1]
Pt = localize(P_only, par.delta_loc)
on = Pt(A, ky, pz)
off = Pt(A, ky, pz + 2.0)
print("P_tilde on-graph:", on, " off-graph:", off)
assert np.all(off == 0.0)

# --- model build + orbit -------------------------------------------------
t1 = time.time()
model = WindowModel(par)
print("model build: %.2f s" % (time.time() - t1))
print("fidelity:", model.fidelity())
print("sup_P1:", model.sup_P1(), " eps_schedule:", par.eps_schedule)

# energy conservation on a short 4-dof orbit
A0, ky0 = 0.5 * (a_lo + a_hi), 0.5 * (ky_lo + ky_hi)
psi0 = float(model.psi_center(A0, ky0))
r0 = window_radius(A0, ky0, 1)
v = model._eval_ar(A0, r0, psi0)
cg = model.C - v["G"]
rad = 2.0 * (model.c - model.alpha * v["F"] - 0.5 * cg * cg / (r0 * r0)
             + model.beta / r0)
q0 = [math.sqrt(rad) - float(v["rho"]), A0, r0, psi0, 0.0]
print("H4 at start:", model.energy4(q0), "target c:", model.c)
traj = integrate(model.field4, q0, 2e-3, tol=1e-10, energy=model.energy4)
print("energy drift (short):", traj.energy_drift)
assert traj.energy_drift < 1e-7

# --- drift experiment, small --------------------------------------------
t2 = time.time()
rep = drift_experiment(par, n_orbits=4, model=model)
print("drift: %.1f s, ratios:" % (time.time() - t2), rep.ratios)
print("eps_measured:", rep.eps_measured, " apriori_ok:", rep.apriori_ok)
print("energy drift max:", rep.energy_drift_max)
print("exit times (slowed):", rep.exit_times)

# --- bounds report -------------------------------------------------------
br = bounds_report(par, model=model)
for row in br.rows:
    print(f"  {row.quantity:18s} meas={row.measured:.3e} "
          f"rhs={row.paper_rhs:.3e} C={row.implied_C:.3f} ok={row.ok}")
print("Lm:", br.lm_lhs, ">=", br.lm_rhs, "->", br.lm_ok)
print("step5:", {k: (f"{v:.3e}" if isinstance(v, float) else v)
                 for k, v in br.step5.items()})
print("total: %.1f s" % (time.time() - t0))
