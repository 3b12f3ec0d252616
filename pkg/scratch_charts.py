"""Scratch verification for the charts module (deleted before final commit)."""
import math
import numpy as np

from fastdrift.charts import (
    ChartPoint, aa_forward, aa_inverse, delaunay_to_aa, et_forward,
    et_inverse, psi_star, rg_forward, rg_inverse, star_fields,
    symplectic_defect,
)
from fastdrift.euler import E_of_action, euler_E, level_data, r_s, sep_action
from fastdrift.elliptic import rho_funcs, Tp_of

rng = np.random.default_rng(11)
ok = fail = 0

def check(name, cond, detail=""):
    global ok, fail
    if cond:
        ok += 1
    else:
        fail += 1
        print(f"FAIL {name}  {detail}")

# --- et anchors ---
for E, r in [(0.4, 1.2), (1.3, 1.5), (1.05, 0.6), (2.0, 2.5)]:
    ld = level_data(E, r, with_action=False)
    G, g, rho = et_forward(E, r, 0.0)
    check(f"tau0 G ({E},{r})", abs(G - ld.sigma) < 1e-12, f"{G} vs {ld.sigma}")
    expect_g = math.pi if E < 1 else 0.0
    check(f"tau0 g ({E},{r})", abs(g - expect_g) < 1e-9, f"{g} vs {expect_g}")
    check(f"tau0 rho ({E},{r})", abs(rho) < 1e-12, f"{rho}")
    # rho odd
    for tau in (0.3 * ld.tau_p, 0.77 * ld.tau_p):
        _, _, rp = et_forward(E, r, tau)
        _, _, rm = et_forward(E, r, -tau)
        check(f"rho odd ({E},{r},{tau:.3f})", abs(rp + rm) < 1e-11, f"{rp} {rm}")
    # E conservation along tau
    worst = 0.0
    for tau in rng.uniform(-3 * ld.tau_p, 3 * ld.tau_p, size=20):
        G, g, _ = et_forward(E, r, float(tau))
        worst = max(worst, abs(euler_E(r, G, g) - E))
    check(f"E conserved ({E},{r})", worst < 1e-9, f"{worst}")
    # quasi-periodic shift: rho(tau + 2j tau_p) = rho(tau) + 2j rho(tau_p)
    _, _, rho_p = et_forward(E, r, ld.tau_p)
    for j in (1, -2):
        _, _, r1 = et_forward(E, r, 0.4 * ld.tau_p + 2 * j * ld.tau_p)
        _, _, r0 = et_forward(E, r, 0.4 * ld.tau_p)
        check(f"rho shift ({E},{r},j={j})", abs(r1 - r0 - 2 * j * rho_p) < 1e-10,
              f"{r1 - r0} vs {2 * j * rho_p}")

# --- et round-trip on random interior points ---
worst = 0.0
done = 0
while done < 100:
    r = float(rng.uniform(0.3, 2.8))
    G0 = float(rng.uniform(-0.95, 0.95))
    g0 = float(rng.uniform(-math.pi, math.pi))
    E = euler_E(r, G0, g0)
    if abs(E - r) < 1e-3 or abs(E - 1) < 1e-3 or E < -r + 1e-3:
        continue
    if E > r and G0 < 0:
        G0 = -G0  # chart covers the G > 0 mirror component
    R0 = float(rng.uniform(-1, 1))
    Rcal, E1, tau = et_inverse(R0, G0, r, g0)
    G1, g1, rho1 = et_forward(E1, r, tau)
    err = max(abs(G1 - G0), abs(math.remainder(g1 - g0, 2 * math.pi)),
              abs(Rcal + rho1 - R0))
    worst = max(worst, err)
    done += 1
check("et roundtrip 100 pts", worst < 1e-8, f"{worst}")

# --- tau at the lower turning point = tau_p ---
for E, r in [(0.4, 1.2), (1.3, 1.5)]:
    ld = level_data(E, r, with_action=False)
    beta = -ld.sigma if ld.alpha_minus < 0 else math.sqrt(ld.alpha_minus)
    x = (E - beta * beta) / (r * math.sqrt(1 - beta * beta))
    g_at_beta = -math.acos(min(1, max(-1, x)))
    _, _, tau = et_inverse(0.0, beta, r, g_at_beta)
    check(f"tau at beta ({E},{r})", abs(abs(tau) - ld.tau_p) < 1e-8,
          f"{tau} vs {ld.tau_p}")

# --- aa round-trip + good relation ---
worst = 0.0
for E, r, side in [(1.1, 0.8, "high"), (1.71, 1.7, "high"), (0.3, 0.6, "low"),
                   (1.2, 1.6, "mid"), (2.0, 2.5, "mid")]:
    ld = level_data(E, r)
    for _ in range(5):
        Rcal = float(rng.uniform(-1, 1))
        tau = float(rng.uniform(-0.95, 0.95)) * ld.tau_p
        Rs, As, rs_, ps = aa_forward(Rcal, E, r, tau)
        Rc2, E2, r2, tau2 = aa_inverse(Rs, As, rs_, ps, side=side)
        err = max(abs(Rc2 - Rcal), abs(E2 - E), abs(r2 - r), abs(tau2 - tau))
        worst = max(worst, err)
check("aa roundtrip", worst < 1e-9, f"{worst}")
try:
    aa_inverse(0.0, 0.05, 1.5, 0.0, side="high")
    check("aa out-of-band", False)
except ValueError:
    check("aa out-of-band", True)

# good relation: R = Rcal_star + rho_star with rho_star periodic in phi
E, r = 1.3, 1.5
R0, G0 = 0.37, None
ld = level_data(E, r)
for tau in (0.2 * ld.tau_p, 0.9 * ld.tau_p, 2.3 * ld.tau_p):
    G, g, rho = et_forward(E, r, tau)
    Rcal = R0 - rho
    Rs, As, rs_, ps = aa_forward(Rcal, E, r, tau)
    # rho_star = (sigma/r) * rho_breve at theta = Tp * ps / pi
    theta = Tp_of(ld.kappa) * ps / math.pi
    rho_star = ld.sigma * rho_funcs(ld.kappa, theta)[1] / r
    check(f"good relation tau={tau:.3f}", abs(Rs + rho_star - R0) < 1e-9,
          f"{Rs + rho_star} vs {R0}")

# --- rg round-trips, both k ---
worst = 0.0
for k in (1, -1):
    for _ in range(20):
        A = float(rng.uniform(0.3, 0.97))
        y = float(k * rng.uniform(0.5, 6.0))
        Y = float(rng.uniform(-2, 2))
        phi = float(rng.uniform(-math.pi, math.pi))
        Rs, As, rs_, ps = rg_forward(Y, A, y, phi, k=k)
        Y2, A2, y2, phi2 = rg_inverse(Rs, As, rs_, ps, k=k)
        err = max(abs(Y2 - Y), abs(A2 - A), abs(y2 - y), abs(phi2 - phi))
        worst = max(worst, err)
check("rg roundtrip both k", worst < 1e-10, f"{worst}")
# linearity of phi_star - phi in Y
A, y = 0.8, 2.0
slopes = []
for Y in (0.5, 1.0, 2.0):
    _, _, _, ps = rg_forward(Y, A, y, 0.0, k=1)
    slopes.append(ps / Y)
check("phi linear in Y", max(slopes) - min(slopes) < 1e-12, f"{slopes}")
try:
    rg_inverse(0.1, 0.8, r_s(0.8) + 0.2, 0.0, k=1)
    check("wrong side rejected", False)
except ValueError:
    check("wrong side rejected", True)

# --- star fields ---
for A, r in [(0.97, 1.2), (0.95, 1.5), (0.9, 0.9)]:
    Gs, rs0, G1, G3, rho1, rho3 = star_fields(A, r, 1.1)
    E = E_of_action(A, r, "high")
    ld = level_data(E, r, with_action=False)
    check(f"G_star bounded ({A},{r})", abs(Gs) <= ld.sigma + 1e-12)
    h = 1e-6
    _, rp, *_ = star_fields(A, r, 1.1 + h)
    _, rm, *_ = star_fields(A, r, 1.1 - h)
    check(f"rho3 FD ({A},{r})", abs((rp - rm) / (2 * h) - rho3) < 1e-6,
          f"{(rp - rm) / (2 * h)} vs {rho3}")
    ps = psi_star(A, r)
    check(f"psi_star in (0,pi) ({A},{r})", 0 < ps < math.pi, f"{ps}")
    _, _, _, _, _, rho3_at_star = star_fields(A, r, ps)
    check(f"rho3 zero at psi_star ({A},{r})", abs(rho3_at_star) < 1e-9,
          f"{rho3_at_star}")
    # G3 FD cross-check
    Gp = star_fields(A, r, 1.1 + h)[0]
    Gm = star_fields(A, r, 1.1 - h)[0]
    check(f"G3 FD ({A},{r})", abs((Gp - Gm) / (2 * h) - G3) < 1e-6,
          f"{(Gp - Gm) / (2 * h)} vs {G3}")

# --- quarter parity for -r < E < r ---
for E, r in [(0.4, 1.2), (-0.5, 0.9), (1.2, 1.6)]:
    if not (-r < E < r):
        continue
    ld = level_data(E, r, with_action=False)
    worst = 0.0
    for tau in rng.uniform(0.05, 0.95, size=8) * ld.tau_p:
        G1, g1, rho1 = et_forward(E, r, float(tau))
        G2, g2, rho2 = et_forward(E, r, float(ld.tau_p - tau))
        _, _, rho_p = et_forward(E, r, ld.tau_p)
        worst = max(worst, abs(G1 + G2), abs(g1 - g2),
                    abs(rho1 - (rho_p - rho2)))
    check(f"quarter parity ({E},{r})", worst < 1e-8, f"{worst}")

# --- chain identity dE/dA = pi/tau_p, dE/dr = -B ---
for A, r, side in [(0.9, 1.2, "high"), (0.5, 0.7, "low")]:
    E = E_of_action(A, r, side)
    ld = level_data(E, r, with_action=False)
    h = 1e-6
    fd_A = (E_of_action(A + h, r, side) - E_of_action(A - h, r, side)) / (2 * h)
    fd_r = (E_of_action(A, r + h, side) - E_of_action(A, r - h, side)) / (2 * h)
    check(f"dE/dA ({A},{r})", abs(fd_A - math.pi / ld.tau_p) < 1e-5 * math.pi / ld.tau_p,
          f"{fd_A} vs {math.pi / ld.tau_p}")
    check(f"dE/dr ({A},{r})", abs(fd_r + ld.B) < 1e-5 * max(1, abs(ld.B)),
          f"{fd_r} vs {-ld.B}")

# --- symplectic defects ---
check("identity defect", symplectic_defect(lambda *x: x, (0.3, 0.5, 1.2, 0.1)) < 1e-12)

# phi_aa: (Rcal, E, r, tau) -> aa
worst_aa = 0.0
done = 0
while done < 50:
    r = float(rng.uniform(0.4, 1.9))
    top = 1 + r * r / 4
    E = float(rng.uniform(r + 0.03, top - 0.03)) if r < top - 0.06 else None
    if E is None or E >= top or abs(E - 1) < 0.02:
        continue
    ld = level_data(E, r, with_action=False)
    pt = (float(rng.uniform(-1, 1)), E, r, float(rng.uniform(-0.8, 0.8)) * ld.tau_p)
    d = symplectic_defect(lambda Rc, EE, rr, tt: aa_forward(Rc, EE, rr, tt), pt)
    worst_aa = max(worst_aa, d)
    done += 1
print(f"phi_aa worst defect: {worst_aa:.3e}")
check("phi_aa defect < 1e-5", worst_aa < 1e-5)

# phi_rg both k
worst_rg = 0.0
for k in (1, -1):
    for _ in range(25):
        pt = (float(rng.uniform(-2, 2)), float(rng.uniform(0.3, 0.95)),
              float(k * rng.uniform(0.5, 5.0)), float(rng.uniform(-3, 3)))
        d = symplectic_defect(lambda Y, A, y, p, kk=k: rg_forward(Y, A, y, p, k=kk), pt)
        worst_rg = max(worst_rg, d)
print(f"phi_rg worst defect: {worst_rg:.3e}")
check("phi_rg defect < 1e-7", worst_rg < 1e-7)

# composition phi_aa . phi_et from delaunay (acceptance-style)
worst_cmp = 0.0
done = 0
while done < 50:
    r = float(rng.uniform(0.4, 1.9))
    G0 = float(rng.uniform(0.05, 0.95))
    g0 = float(rng.uniform(-math.pi + 0.1, -0.1))
    E = euler_E(r, G0, g0)
    if abs(E - r) < 0.02 or abs(E - 1) < 0.02 or E < -r + 0.02:
        continue
    pt = (float(rng.uniform(-1, 1)), G0, r, g0)
    d = symplectic_defect(lambda R, G, rr, g: delaunay_to_aa(R, G, rr, g), pt)
    worst_cmp = max(worst_cmp, d)
    done += 1
print(f"composition worst defect: {worst_cmp:.3e}")
check("composition defect < 1e-5", worst_cmp < 1e-5)

# ChartPoint validation
try:
    ChartPoint("action_angle", (0.0, 1.5, 1.0, 0.0))
    check("ChartPoint validates", False)
except ValueError:
    check("ChartPoint validates", True)
try:
    ChartPoint("regularizing_k", (0.0, 0.5, 1.0, 0.0))
    check("rg needs k", False)
except ValueError:
    check("rg needs k", True)

print(f"\n{ok} ok, {fail} fail")
