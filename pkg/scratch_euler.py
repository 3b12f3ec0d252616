"""Scratch verification for the euler module (deleted before final commit)."""
import math
import numpy as np

from fastdrift.euler import (
    CollisionError, E_of_action, F_of, U_direct, action_jet, alpha_pm,
    e_signed, euler_E, level_curve, level_data, r_s, r_s_prime, sep_action,
    _F_direct,
)
from fastdrift.elliptic import SeparatrixError

rng = np.random.default_rng(7)
ok = fail = 0

def check(name, cond, detail=""):
    global ok, fail
    if cond:
        ok += 1
    else:
        fail += 1
        print(f"FAIL {name}  {detail}")

# --- basic geometry ---
check("E at G=1", abs(euler_E(0.8, 1.0, 2.3) - 1.0) < 1e-14)
check("E at min", abs(euler_E(0.8, 0.0, math.pi) + 0.8) < 1e-14)
for r in (0.5, 1.5, 3.0):
    Gg, gg = np.meshgrid(np.linspace(-1, 1, 601), np.linspace(-np.pi, np.pi, 601))
    mx = euler_E(r, Gg, gg).max()
    expect = 1 + r * r / 4 if r < 2 else r
    check(f"grid max r={r}", abs(mx - expect) < 2e-4, f"{mx} vs {expect}")

ap, am = alpha_pm(1.0, 1.5)
check("alpha at E=1", abs(ap - 1.0) < 1e-14 and abs(am - (1 - 1.5**2)) < 1e-14,
      f"{ap} {am}")

ld = level_data(0.5, 1.5)
check("panel_b", ld.regime.startswith("panel_b"), ld.regime)
check("kappa<0 at (0.5,1.5)", ld.kappa < 0)
check("regime tag consistent", ld.regime.endswith("inside_S0"), ld.regime)
check("r>2 level valid", level_data(2.5, 3.0).kappa < 0)
try:
    level_data(2.5, 1.0)
    check("empty level raises", False)
except ValueError:
    check("empty level raises", True)

# --- action: closed-form derivative identities vs FD ---
for E, r in [(0.4, 1.2), (0.7, 0.5), (1.08, 0.7), (1.3, 1.5), (2.0, 2.5),
             (-0.3, 0.9), (1.2, 1.9)]:
    A, A_E, A_r = action_jet(E, r)
    h = 1e-6
    fd_E = (level_data(E + h, r).action - level_data(E - h, r).action) / (2 * h)
    fd_r = (level_data(E, r + h).action - level_data(E, r - h).action) / (2 * h)
    check(f"A_E id ({E},{r})", abs(fd_E - A_E) < 3e-6 * max(1, abs(A_E)),
          f"fd={fd_E} cf={A_E}")
    check(f"A_r id ({E},{r})", abs(fd_r - A_r) < 3e-6 * max(1, abs(A_r)),
          f"fd={fd_r} cf={A_r}")

# --- separatrix action limits ---
for r in (0.7, 1.5):
    above = level_data(r + 1e-6, r).action
    check(f"A->sep_action from above r={r}", abs(above - sep_action(r)) < 1e-4,
          f"{above} vs {sep_action(r)}")
    below = level_data(r - 1e-6, r).action
    expect = 2 * sep_action(r) if r < 1 else 2 * sep_action(r) - 1
    check(f"A below-limit r={r}", abs(below - expect) < 1e-4,
          f"{below} vs {expect}")
check("A(top)", abs(level_data(1 + 0.49 * 0.49 - 1e-9, 0.98).action - 1.0) < 1e-3)
check("A(bottom)", abs(level_data(-0.9 + 1e-7, 0.9).action) < 1e-3)

check("sep_action(0)", sep_action(0.0) == 0.0)
check("sep_action(2)", abs(sep_action(2.0) - 1.0) < 1e-15)
h = 1e-6
fd = (sep_action(1.0 + h) - sep_action(1.0 - h)) / (2 * h)
check("sep_action'(1)=1/pi", abs(fd - 1 / math.pi) < 1e-9, f"{fd}")
check("r_s roundtrip", abs(r_s(sep_action(1.3)) - 1.3) < 1e-10)
fd = (r_s(0.6 + h) - r_s(0.6 - h)) / (2 * h)
check("r_s_prime", abs(fd - r_s_prime(0.6)) < 1e-6 * r_s_prime(0.6), f"{fd}")

# --- E_of_action round-trips, all sides ---
for E, r, side in [(1.1, 0.8, "high"), (1.71, 1.7, "high"), (0.3, 0.6, "low"),
                   (-1.0, 2.6, "low"), (1.2, 1.6, "mid"), (1.5, 2.8, "mid")]:
    A = level_data(E, r).action
    E2 = E_of_action(A, r, side)
    check(f"E_of_action ({E},{r},{side})", abs(E2 - E) < 1e-9, f"{E2}")
try:
    E_of_action(0.05, 1.5, "high")
    check("out-of-band raises", False)
except ValueError:
    check("out-of-band raises", True)

# --- U level constancy + symmetry ---
for trial in range(20):
    r = float(rng.uniform(0.2, 1.9)) if trial % 2 else float(rng.uniform(2.1, 3.0))
    G0 = float(rng.uniform(-0.95, 0.95))
    g0 = float(rng.uniform(-math.pi, math.pi))
    E = euler_E(r, G0, g0)
    if abs(E - r) < 1e-3 or abs(E - 1) < 1e-3:
        continue
    u0 = U_direct(r, G0, g0)
    check(f"U symmetry t{trial}", abs(U_direct(r, G0, -g0) - u0) < 1e-10)
    pts = level_curve(E, r, n=64)[0]
    idx = rng.integers(5, 59, size=3)
    for i in idx:
        g1, G1 = pts[i]
        u1 = U_direct(r, float(G1), float(g1))
        check(f"U const t{trial}i{i}", abs(u1 - u0) < 1e-8 * max(1, abs(u0)),
              f"{u1} vs {u0}")
    f = F_of(E, r)
    check(f"U vs F t{trial}", abs(f - u0) < 1e-7 * max(1, abs(u0)),
          f"F={f} U={u0} E={E} r={r}")

check("spec point U vs F",
      abs(U_direct(0.5, 0.6, 2.0) - F_of(euler_E(0.5, 0.6, 2.0), 0.5)) < 1e-7)

# --- e anchors ---
check("e at top", abs(e_signed(1 + 1.3**2 / 4, 1.3) - 1.3 / 2) < 1e-14)
check("e at sep r<2", abs(e_signed(1.5, 1.5) - 0.5) < 1e-14)
check("e at sep r>2", abs(e_signed(2.5, 2.5) - 1.0) < 1e-12)
check("e<0 below 1", e_signed(0.7, 1.1) < 0)

# --- F near the critical level: log growth, stable fallback ---
r = 1.5
print("near-separatrix F (direct route):")
for d in (1e-3, 1e-4, 1e-5, 1e-6, 1e-7):
    va = F_of(r + d, r)
    vb = F_of(r - d, r)
    ca, cb = va / math.log(1 / d), vb / math.log(1 / d)
    print(f"  d={d:.0e}  F(above)={va:.8f} ratio={ca:.4f} "
          f"F(below)={vb:.8f} ratio={cb:.4f}")
    check(f"F log bounded d={d}", 0.2 < ca < 1.2 and 0.2 < cb < 1.2)
# fallback consistency where both routes valid
for E, r2 in [(1.5 + 2e-4, 1.5), (1.5 - 2e-4, 1.5), (0.9, 1.2), (2.2, 2.6)]:
    va, vb = F_of(E, r2), _F_direct(E, r2)
    check(f"F rep vs direct ({E},{r2})", abs(va - vb) < 1e-9 * max(1, abs(va)),
          f"{va} vs {vb}")

# --- level curves ---
for E, r in [(0.5, 1.5), (1.1, 0.8), (2.0, 2.5), (1.3, 1.5)]:
    comps = level_curve(E, r, n=128)
    n_expected = 2 if level_data(E, r, with_action=False).kappa > 0 else 1
    check(f"n_components ({E},{r})", len(comps) == n_expected,
          f"{len(comps)} vs {n_expected}")
    res = max(float(np.abs(euler_E(r, c[:, 1], c[:, 0]) - E).max()) for c in comps)
    check(f"curve residual ({E},{r})", res < 1e-10, f"{res}")

# --- collision / floor errors ---
try:
    U_direct(1.0, 0.0, 0.0)
    check("collision raises", False)
except CollisionError:
    check("collision raises", True)
try:
    F_of(1.5 + 1e-12, 1.5)
    check("sep floor raises", False)
except SeparatrixError:
    check("sep floor raises", True)

print(f"\n{ok} ok, {fail} fail")
