import numpy as np
from scipy.special import ellipk, ellipe, ellipj, ellipeinc

import fastdrift.elliptic as el

rng = np.random.default_rng(7)

print("== T0 ==")
for kap in [0.9, 0.5, 0.1, 1e-4, 1e-8, -0.1, -0.5, -2.6, -1e-4, -1e-8]:
    mine = el.T0_of(kap)
    if kap > 0:
        oracle = ellipk(1 - kap)
    else:
        c = -kap
        oracle = ellipk(1 / (1 + c)) / np.sqrt(1 + c)
    print(f"  kappa={kap:+.2e}  T0={mine:.12f}  oracle={oracle:.12f}  rel={abs(mine/oracle-1):.2e}")

print("== A (calA_jet vs closed form vs table mean) ==")
for kap in [0.9, 0.5, 0.1, 1e-3, -0.1, -0.5, -2.6]:
    A, Ap, App = el.calA_jet(kap)
    if kap > 0:
        m = 1 - kap
        oracle = ellipe(m) / ellipk(m)
    else:
        c = -kap
        m = 1 / (1 + c)
        oracle = (1 + c) * ellipe(m) / ellipk(m) - c
    tbl = el.calA_fast(kap)
    print(f"  kappa={kap:+.2e}  A={A:.12f} oracle={oracle:.12f} table={tbl:.12f} "
          f"dOracle={abs(A-oracle):.2e} dTable={abs(A-tbl):.2e}")

print("== A' and A'' vs FD of closed-form A ==")
for kap in [0.5, 0.1, -0.3, -1.5]:
    h = 1e-5
    def Aor(k):
        if k > 0:
            return ellipe(1 - k) / ellipk(1 - k)
        c = -k
        m = 1 / (1 + c)
        return (1 + c) * ellipe(m) / ellipk(m) - c
    A, Ap, App = el.calA_jet(kap)
    fd1 = (Aor(kap + h) - Aor(kap - h)) / (2 * h)
    fd2 = (Aor(kap + h) - 2 * Aor(kap) + Aor(kap - h)) / h**2
    print(f"  kappa={kap:+.2f}  Ap={Ap:.9f} fd={fd1:.9f} d={abs(Ap-fd1):.2e}   "
          f"App={App:.9f} fd={fd2:.9f} d={abs(App-fd2):.2e}")

print("== T0' identity -R/(2k) vs FD, T0'' vs FD ==")
for kap in [0.5, 0.1, -0.3, -1.5]:
    h = 1e-5
    R, S = el.RS_of(kap)
    fd1 = (el.T0_of(kap + h) - el.T0_of(kap - h)) / (2 * h)
    fd2 = (el.T0_of(kap + h) - 2 * el.T0_of(kap) + el.T0_of(kap - h)) / h**2
    print(f"  kappa={kap:+.2f}  -R/2k={-R/(2*kap):.9f} fd={fd1:.9f} rel={abs(-R/(2*kap)/fd1-1):.2e}   "
          f"S/4k2={S/(4*kap**2):.9f} fd={fd2:.9f} rel={abs(S/(4*kap**2)/fd2-1):.2e}")

print("== R, S limits at kappa -> 0 ==")
for kap in [1e-3, 1e-5, -1e-3, -1e-5]:
    R, S = el.RS_of(kap)
    print(f"  kappa={kap:+.0e}  R={R:.8f}  S={S:.8f}")

print("== breve_G vs dn / cn ==")
for kap in [0.7, 0.3, 0.05, -0.4, -2.0]:
    T0 = el.T0_of(kap)
    Tp = el.Tp_of(kap)
    th = rng.uniform(-2 * Tp, 3 * Tp, 60)
    mine = el.breve_G(kap, th)
    if kap > 0:
        sn, cn, dn, ph = ellipj(th, 1 - kap)
        oracle = dn
    else:
        s = np.sqrt(1 - kap)
        sn, cn, dn, ph = ellipj(th * s, 1 / (1 - kap))
        oracle = cn
    print(f"  kappa={kap:+.2f}  max|G - oracle| = {np.max(np.abs(mine - oracle)):.2e}")

print("== rho_hat vs ellipeinc ==")
for kap in [0.7, 0.3, -0.4, -2.0]:
    Tp = el.Tp_of(kap)
    th = rng.uniform(-2 * Tp, 3 * Tp, 40)
    rh, rb = el.rho_funcs(kap, th)
    if kap > 0:
        m = 1 - kap
        sn, cn, dn, ph = ellipj(th, m)
        # d/dth am = dn, and int dn^2 = E(am, m); am batches need unwinding:
        # ellipj returns ph in (-pi/2, pi/2] windings? check directly
        oracle = ellipeinc(ph, m)
    else:
        c = -kap
        s = np.sqrt(1 + c)
        m = 1 / (1 + c)
        sn, cn, dn, ph = ellipj(th * s, m)
        oracle = (ellipeinc(ph, m) - (1 - m) * th * s) / (m * s)
    d = np.max(np.abs(rh - oracle))
    print(f"  kappa={kap:+.2f}  max|rho_hat - oracle| = {d:.2e}")

print("== rho_breve periodic / zero at Tp ==")
for kap in [0.7, -0.4]:
    Tp = el.Tp_of(kap)
    rh, rb = el.rho_funcs(kap, np.array([0.0, Tp, 2 * Tp, 5.5]))
    rh2, rb2 = el.rho_funcs(kap, np.array([5.5 + 2 * Tp]))
    print(f"  kappa={kap:+.2f}  rb(0)={rb[0]:.2e} rb(Tp)={rb[1]:.2e} rb(2Tp)={rb[2]:.2e} "
          f"periodicity={abs(rb2[0]-rb[3]):.2e}")

print("== theta_star ==")
for kap in [0.7, 0.3, -0.4, -2.0]:
    ts = el.theta_star(kap)
    g = el.breve_G(kap, ts)
    A = el.calA_fast(kap)
    print(f"  kappa={kap:+.2f}  theta*={ts:.10f}  residual={abs(g*g - A):.2e}  T0={el.T0_of(kap):.6f}")

print("== j_beta spot values ==")
print(f"  j_1(1)={el.j_beta(1.0, 0.999999999):.12f}  pi/4={np.pi/4:.12f}")
for b in [0.5, 2.0, 10.0]:
    print(f"  j_{b}(0.5)={el.j_beta(b, 0.5):.12f}")

print("== log-divergence ratio T0 / |log kappa| ==")
for m in range(4, 9):
    for sgn in (1, -1):
        kap = sgn * 10.0 ** (-m)
        print(f"  kappa={kap:+.0e}  ratio={el.T0_of(kap)/abs(np.log(abs(kap))):.8f}")
