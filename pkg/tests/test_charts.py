"""Chart stack: level-flow chart, action-angle chart, regularizing charts.

Round-trips, parity structure, and finite-difference symplecticity are the
oracles; every map is checked against the geometry it is built from.
"""

import math

import numpy as np
import pytest

from fastdrift.charts import (
    ChartPoint,
    aa_forward,
    aa_inverse,
    delaunay_to_aa,
    et_forward,
    et_inverse,
    psi_star,
    rg_forward,
    rg_inverse,
    star_fields,
    symplectic_defect,
)
from fastdrift.elliptic import Tp_of, rho_funcs
from fastdrift.euler import E_of_action, euler_E, level_data, r_s, sep_action


class TestEnergyTimeChart:
    @pytest.mark.parametrize("E,r", [(0.4, 1.2), (1.3, 1.5), (1.05, 0.6),
                                     (2.0, 2.5)])
    def test_time_zero_anchor(self, E, r):
        ld = level_data(E, r, with_action=False)
        G, g, rho = et_forward(E, r, 0.0)
        assert G == pytest.approx(ld.sigma, abs=1e-12)
        assert g == pytest.approx(math.pi if E < 1 else 0.0, abs=1e-12)
        assert rho == pytest.approx(0.0, abs=1e-12)

    def test_rho_odd(self):
        for E, r in [(0.4, 1.2), (1.3, 1.5)]:
            tau_p = level_data(E, r, with_action=False).tau_p
            for tau in (0.3 * tau_p, 0.77 * tau_p):
                _, _, rp = et_forward(E, r, tau)
                _, _, rm = et_forward(E, r, -tau)
                assert rp == pytest.approx(-rm, abs=1e-11)

    def test_level_conserved_along_flow(self):
        rng = np.random.default_rng(5)
        for E, r in [(0.4, 1.2), (1.3, 1.5), (2.0, 2.5)]:
            tau_p = level_data(E, r, with_action=False).tau_p
            for tau in rng.uniform(-3 * tau_p, 3 * tau_p, size=20):
                G, g, _ = et_forward(E, r, float(tau))
                assert euler_E(r, G, g) == pytest.approx(E, abs=1e-9)

    def test_rho_period_shift(self):
        # crossing a full period adds 2 rho(tau_p), not a periodic repeat
        E, r = 1.3, 1.5
        tau_p = level_data(E, r, with_action=False).tau_p
        _, _, rho_p = et_forward(E, r, tau_p)
        _, _, r0 = et_forward(E, r, 0.4 * tau_p)
        for j in (1, -2):
            _, _, r1 = et_forward(E, r, 0.4 * tau_p + 2 * j * tau_p)
            assert r1 - r0 == pytest.approx(2 * j * rho_p, abs=1e-10)
        assert abs(rho_p) > 1e-3

    def test_roundtrip_random(self):
        rng = np.random.default_rng(7)
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
            assert abs(G1 - G0) < 1e-8
            assert abs(math.remainder(g1 - g0, 2 * math.pi)) < 1e-8
            assert abs(Rcal + rho1 - R0) < 1e-8
            done += 1

    def test_half_period_at_lower_turning(self):
        for E, r in [(0.4, 1.2), (1.3, 1.5)]:
            ld = level_data(E, r, with_action=False)
            beta = -ld.sigma if ld.alpha_minus < 0 else math.sqrt(ld.alpha_minus)
            x = (E - beta * beta) / (r * math.sqrt(1 - beta * beta))
            g_b = -math.acos(min(1.0, max(-1.0, x)))
            _, _, tau = et_inverse(0.0, beta, r, g_b)
            assert abs(abs(tau) - ld.tau_p) < 1e-8

    def test_quarter_parity(self):
        # -r < E < r: mirror symmetry inside the half period
        rng = np.random.default_rng(9)
        for E, r in [(0.4, 1.2), (-0.5, 0.9), (1.2, 1.6)]:
            assert -r < E < r
            tau_p = level_data(E, r, with_action=False).tau_p
            _, _, rho_p = et_forward(E, r, tau_p)
            for u in rng.uniform(0.05, 0.95, size=8):
                tau = float(u) * tau_p
                G1, g1, rho1 = et_forward(E, r, tau)
                G2, g2, rho2 = et_forward(E, r, tau_p - tau)
                assert abs(G1 + G2) < 1e-8
                assert abs(g1 - g2) < 1e-8
                assert abs(rho1 - (rho_p - rho2)) < 1e-8


class TestActionAngleChart:
    def test_zero_time(self):
        Rs, As, rs_, ps = aa_forward(0.37, 1.3, 1.5, 0.0)
        assert Rs == 0.37
        assert ps == 0.0
        assert rs_ == 1.5
        assert As == pytest.approx(level_data(1.3, 1.5).action, abs=1e-14)

    @pytest.mark.parametrize("E,r,side", [
        (1.1, 0.8, "high"), (1.71, 1.7, "high"),
        (0.3, 0.6, "low"), (1.2, 1.6, "mid"), (2.0, 2.5, "mid"),
    ])
    def test_roundtrip(self, E, r, side):
        rng = np.random.default_rng(13)
        tau_p = level_data(E, r, with_action=False).tau_p
        for _ in range(5):
            Rcal = float(rng.uniform(-1, 1))
            tau = float(rng.uniform(-0.95, 0.95)) * tau_p
            out = aa_inverse(*aa_forward(Rcal, E, r, tau), side=side)
            for got, want in zip(out, (Rcal, E, r, tau)):
                assert got == pytest.approx(want, abs=1e-9)

    def test_out_of_band(self):
        with pytest.raises(ValueError, match="out of band"):
            aa_inverse(0.0, 0.05, 1.5, 0.0, side="high")

    def test_good_relation(self):
        # R = Rcal_star + rho_star with rho_star periodic in the angle
        E, r, R0 = 1.3, 1.5, 0.37
        ld = level_data(E, r)
        for tau in (0.2 * ld.tau_p, 0.9 * ld.tau_p, 2.3 * ld.tau_p):
            _, _, rho = et_forward(E, r, tau)
            Rs, As, rs_, ps = aa_forward(R0 - rho, E, r, tau)
            theta = Tp_of(ld.kappa) * ps / math.pi
            rho_star = ld.sigma * rho_funcs(ld.kappa, theta)[1] / r
            assert Rs + rho_star == pytest.approx(R0, abs=1e-9)

    def test_chain_identity(self):
        # dE/dA = pi/tau_p and dE/dr = -B at fixed action
        h = 1e-6
        for A, r, side in [(0.9, 1.2, "high"), (0.5, 0.7, "low")]:
            E = E_of_action(A, r, side)
            ld = level_data(E, r, with_action=False)
            fd_A = (E_of_action(A + h, r, side)
                    - E_of_action(A - h, r, side)) / (2 * h)
            fd_r = (E_of_action(A, r + h, side)
                    - E_of_action(A, r - h, side)) / (2 * h)
            assert fd_A == pytest.approx(math.pi / ld.tau_p, rel=1e-5)
            assert fd_r == pytest.approx(-ld.B, abs=1e-5 * max(1, abs(ld.B)))


class TestRegularizingChart:
    def test_side_convention(self):
        # k = +1 lands below the critical radius, k = -1 above
        A = 0.8
        assert rg_forward(0.0, A, 1.5, 0.0, k=1)[2] < r_s(A)
        assert rg_forward(0.0, A, -1.5, 0.0, k=-1)[2] > r_s(A)

    @pytest.mark.parametrize("k", [1, -1])
    def test_roundtrip(self, k):
        rng = np.random.default_rng(17)
        for _ in range(20):
            pt = (float(rng.uniform(-2, 2)), float(rng.uniform(0.3, 0.97)),
                  float(k * rng.uniform(0.5, 6.0)),
                  float(rng.uniform(-math.pi, math.pi)))
            out = rg_inverse(*rg_forward(*pt, k=k), k=k)
            for got, want in zip(out, pt):
                assert got == pytest.approx(want, abs=1e-10)

    def test_angle_shift_linear_in_Y(self):
        A, y = 0.8, 2.0
        slopes = [rg_forward(Y, A, y, 0.0, k=1)[3] / Y for Y in (0.5, 1.0, 2.0)]
        assert max(slopes) - min(slopes) < 1e-12

    def test_wrong_side_rejected(self):
        with pytest.raises(ValueError, match="wrong side"):
            rg_inverse(0.1, 0.8, r_s(0.8) + 0.2, 0.0, k=1)
        with pytest.raises(ValueError, match="wrong side"):
            rg_inverse(0.1, 0.8, r_s(0.8) - 0.2, 0.0, k=-1)


class TestStarFields:
    @pytest.mark.parametrize("A,r", [(0.97, 1.2), (0.95, 1.5), (0.9, 0.9)])
    def test_values_and_derivatives(self, A, r):
        psi = 1.1
        Gs, rho_s, G1, G3, rho1, rho3 = star_fields(A, r, psi)
        sigma = level_data(E_of_action(A, r, "high"), r,
                           with_action=False).sigma
        assert abs(Gs) <= sigma + 1e-12

        h = 1e-6
        Gp, rp, *_ = star_fields(A, r, psi + h)
        Gm, rm, *_ = star_fields(A, r, psi - h)
        assert (Gp - Gm) / (2 * h) == pytest.approx(G3, abs=1e-6)
        assert (rp - rm) / (2 * h) == pytest.approx(rho3, abs=1e-6)
        for v in (G1, rho1):
            assert math.isfinite(v)

    @pytest.mark.parametrize("A,r", [(0.97, 1.2), (0.95, 1.5)])
    def test_rho3_zero_locus(self, A, r):
        ps = psi_star(A, r)
        assert 0 < ps < math.pi
        assert star_fields(A, r, ps)[5] == pytest.approx(0.0, abs=1e-9)


class TestSymplecticDefect:
    def test_identity(self):
        assert symplectic_defect(lambda *x: x, (0.3, 0.5, 1.2, 0.1)) == 0.0

    def test_aa_chart(self):
        rng = np.random.default_rng(23)
        done = 0
        while done < 50:
            r = float(rng.uniform(0.4, 1.9))
            top = 1 + r * r / 4
            if top - r < 0.08:
                continue
            E = float(rng.uniform(r + 0.03, top - 0.03))
            if abs(E - 1) < 0.02:
                continue
            tau_p = level_data(E, r, with_action=False).tau_p
            pt = (float(rng.uniform(-1, 1)), E, r,
                  float(rng.uniform(-0.8, 0.8)) * tau_p)
            assert symplectic_defect(aa_forward, pt) < 1e-5
            done += 1

    @pytest.mark.parametrize("k", [1, -1])
    def test_rg_chart(self, k):
        rng = np.random.default_rng(29)
        for _ in range(25):
            pt = (float(rng.uniform(-2, 2)), float(rng.uniform(0.3, 0.95)),
                  float(k * rng.uniform(0.5, 5.0)), float(rng.uniform(-3, 3)))
            fn = lambda Y, A, y, p: rg_forward(Y, A, y, p, k=k)
            assert symplectic_defect(fn, pt) < 1e-7

    def test_composition_from_delaunay(self):
        rng = np.random.default_rng(31)
        done = 0
        while done < 25:
            r = float(rng.uniform(0.4, 1.9))
            G0 = float(rng.uniform(0.05, 0.95))
            g0 = float(rng.uniform(-math.pi + 0.1, -0.1))
            E = euler_E(r, G0, g0)
            if abs(E - r) < 0.02 or abs(E - 1) < 0.02 or E < -r + 0.02:
                continue
            pt = (float(rng.uniform(-1, 1)), G0, r, g0)
            assert symplectic_defect(delaunay_to_aa, pt) < 1e-5
            done += 1


class TestChartPoint:
    def test_valid(self):
        p = ChartPoint("energy_time", (0.1, 1.3, 1.5, 0.2))
        assert p.chart == "energy_time"
        q = ChartPoint("regularizing_k", (0.1, 0.8, 2.0, 0.2), k=-1)
        assert q.k == -1

    def test_invalid(self):
        with pytest.raises(ValueError):
            ChartPoint("nonsense", (0, 0, 0, 0))
        with pytest.raises(ValueError):
            ChartPoint("action_angle", (0.0, 1.5, 1.0, 0.0))
        with pytest.raises(ValueError):
            ChartPoint("regularizing_k", (0.0, 0.5, 1.0, 0.0))
        with pytest.raises(ValueError):
            ChartPoint("delaunay_radial", (0.0, 1.5, 1.0, 0.0))
        with pytest.raises(ValueError):
            ChartPoint("energy_time", (0.1, 1.3, 1.5, 0.2), k=1)
