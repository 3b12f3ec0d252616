"""Level geometry: invariant, turning values, action, averaged coupling.

The main oracle is internal redundancy: the direct anomaly average U,
the weighted-period representation F, and the level-curve sampler must
all agree about the same geometric object.
"""

import math

import numpy as np
import pytest

from fastdrift.elliptic import SeparatrixError
from fastdrift.euler import (
    COLLISION_FLOOR,
    SEPARATRIX_FLOOR,
    CollisionError,
    E_of_action,
    F_of,
    LevelData,
    PhysParams,
    U_direct,
    action_jet,
    alpha_pm,
    e_signed,
    euler_E,
    level_curve,
    level_data,
    r_s,
    r_s_prime,
    sep_action,
)


class TestInvariant:
    def test_polar_value(self):
        # G = +-1 gives 1 regardless of r, g
        for r in (0.3, 1.8, 2.6):
            for g in (0.0, 1.0, -2.7):
                assert euler_E(r, 1.0, g) == pytest.approx(1.0, abs=1e-14)
                assert euler_E(r, -1.0, g) == pytest.approx(1.0, abs=1e-14)

    def test_extremes(self):
        assert euler_E(0.8, 0.0, math.pi) == pytest.approx(-0.8, abs=1e-14)
        assert euler_E(0.8, 0.0, 0.0) == pytest.approx(0.8, abs=1e-14)

    @pytest.mark.parametrize("r", [0.5, 1.5, 3.0])
    def test_grid_max(self, r):
        G, g = np.meshgrid(np.linspace(-1, 1, 801), np.linspace(-np.pi, np.pi, 801))
        top = euler_E(r, G, g).max()
        expect = 1 + r * r / 4 if r < 2 else r
        assert top == pytest.approx(expect, abs=1e-4)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            euler_E(-0.5, 0.3, 0.0)
        with pytest.raises(ValueError):
            euler_E(1.0, 1.5, 0.0)


class TestCriticalCensus:
    """Critical points of the level foliation on the (G, g) cylinder."""

    @pytest.mark.parametrize("r", [0.5, 1.5, 3.0])
    def test_census(self, r):
        G = np.linspace(-0.999, 0.999, 1201)
        g = np.linspace(-np.pi, np.pi, 1200, endpoint=False)
        Gm, gm = np.meshgrid(G, g, indexing="ij")
        E = euler_E(r, Gm, gm)

        # neighbor comparison: periodic in g, clipped in G
        g_up, g_dn = np.roll(E, 1, axis=1), np.roll(E, -1, axis=1)
        mid = E[1:-1, :]
        is_min = ((mid < g_up[1:-1]) & (mid < g_dn[1:-1])
                  & (mid < E[:-2, :]) & (mid < E[2:, :]))
        is_max = ((mid > g_up[1:-1]) & (mid > g_dn[1:-1])
                  & (mid > E[:-2, :]) & (mid > E[2:, :]))

        min_pts = np.argwhere(is_min)
        max_pts = np.argwhere(is_max)

        # the minimum sits at G = 0, g = pi (one cylinder point, shown at
        # g = +-pi by a chart that splits the circle there)
        assert len(min_pts) == 1
        i, j = min_pts[0]
        assert abs(G[i + 1]) < 0.01 and abs(abs(g[j]) - math.pi) < 0.02
        assert E[i + 1, j] == pytest.approx(-r, abs=1e-4)

        i0, j0 = 600, 600
        assert abs(G[i0]) < 1e-12 and abs(g[j0]) < 1e-12

        if r < 2:
            # two maxima on the G-axis at cos g = 1, G^2 = 1 - r^2/4
            assert len(max_pts) == 2
            G_expect = math.sqrt(1 - r * r / 4)
            for i, j in max_pts:
                assert abs(abs(G[i + 1]) - G_expect) < 0.01
                assert abs(g[j]) < 0.01
            # saddle at the origin: a max along g, a min along G
            assert E[i0, j0] > E[i0, j0 - 1] and E[i0, j0] > E[i0, j0 + 1]
            assert E[i0, j0] < E[i0 - 1, j0] and E[i0, j0] < E[i0 + 1, j0]
            assert E[i0, j0] == pytest.approx(r, abs=1e-6)
        else:
            # saddle absent: the origin is the single maximum, value r
            assert len(max_pts) == 1
            i, j = max_pts[0]
            assert abs(G[i + 1]) < 0.01 and abs(g[j]) < 0.01
            assert E[i + 1, j] == pytest.approx(r, abs=1e-4)


class TestLevelData:
    def test_alpha_at_polar_level(self):
        ap, am = alpha_pm(1.0, 1.5)
        assert ap == pytest.approx(1.0, abs=1e-14)
        assert am == pytest.approx(1.0 - 1.5**2, abs=1e-14)

    def test_turning_value_identity(self):
        for E, r in [(0.4, 1.2), (1.05, 0.6), (2.1, 2.7), (-0.5, 0.8)]:
            for a in alpha_pm(E, r):
                assert (E - a) ** 2 == pytest.approx(r * r * (1 - a), rel=1e-12)

    def test_regime_tags(self):
        ld = level_data(0.5, 1.5)
        assert ld.regime == "panel_b:inside_S0"
        assert ld.kappa < 0
        assert level_data(1.2, 1.5).regime == "panel_b:between"
        assert level_data(1.52, 1.5).regime == "panel_b:outside_S1"
        assert level_data(0.7, 0.9).regime == "panel_a:inside_S0"
        assert level_data(0.95, 0.9).regime == "panel_a:between"
        assert level_data(1.1, 0.9).regime == "panel_a:outside_S1"
        assert level_data(0.5, 2.5).regime == "panel_c:below_S1"
        assert level_data(1.5, 2.5).regime == "panel_c:above_S1"

    def test_kappa_sign_tracks_component_count(self):
        # kappa > 0 iff E > r iff the level misses G = 0
        for E, r in [(1.1, 0.8), (1.35, 1.3), (0.5, 1.5), (2.0, 2.5)]:
            ld = level_data(E, r, with_action=False)
            assert (ld.kappa > 0) == (E > r)
            assert len(level_curve(E, r, n=32)) == (2 if ld.kappa > 0 else 1)

    def test_empty_level(self):
        # above the global max: no turning values at all
        with pytest.raises(ValueError):
            level_data(2.5, 1.0)
        # r > 2, E between r and 1 + r^2/4: turning values both negative
        with pytest.raises(ValueError, match="empty"):
            level_data(3.2, 3.0)

    def test_below_bottom(self):
        with pytest.raises(ValueError):
            level_data(-1.2, 1.0)

    def test_separatrix_floor(self):
        with pytest.raises(SeparatrixError):
            level_data(1.5 + 1e-12, 1.5)
        with pytest.raises(SeparatrixError):
            level_data(1.0 - 1e-11, 0.7)

    def test_fields_finite(self):
        ld = level_data(1.3, 1.5)
        assert isinstance(ld, LevelData)
        for v in (ld.sigma, ld.kappa, ld.tau_p, ld.B, ld.action):
            assert math.isfinite(v)
        assert ld.tau_p > 0


class TestAction:
    @pytest.mark.parametrize("E,r", [(0.4, 1.2), (1.08, 0.7), (2.0, 2.5),
                                     (-0.3, 0.9), (1.3, 1.5)])
    def test_derivative_identities(self, E, r):
        A, A_E, A_r = action_jet(E, r)
        h = 1e-6
        fd_E = (level_data(E + h, r).action - level_data(E - h, r).action) / (2 * h)
        fd_r = (level_data(E, r + h).action - level_data(E, r - h).action) / (2 * h)
        assert fd_E == pytest.approx(A_E, abs=1e-6 * max(1, abs(A_E)))
        assert fd_r == pytest.approx(A_r, abs=3e-6 * max(1, abs(A_r)))

    def test_A_E_positive(self):
        for E, r in [(0.4, 1.2), (1.05, 0.6), (2.1, 2.7), (1.3, 1.5)]:
            assert action_jet(E, r)[1] > 0

    def test_limit_at_critical_level(self):
        # approaching from the single-loop-per-component side
        for r in (0.7, 1.5):
            A = level_data(r + 1e-6, r).action
            assert abs(A - sep_action(r)) < 1e-4
        # from below the enclosed area doubles (less the polar disk once
        # E exceeds 1), so the limit differs by construction
        A_below = level_data(0.7 - 1e-6, 0.7).action
        assert abs(A_below - 2 * sep_action(0.7)) < 1e-4
        A_below = level_data(1.5 - 1e-6, 1.5).action
        assert abs(A_below - (2 * sep_action(1.5) - 1)) < 1e-4

    def test_range_endpoints(self):
        assert level_data(-0.9 + 1e-7, 0.9).action == pytest.approx(0.0, abs=1e-3)
        top = 1 + 0.49**2 / 4
        assert level_data(top - 1e-9, 0.49).action == pytest.approx(1.0, abs=1e-3)


class TestSepAction:
    def test_endpoints(self):
        assert sep_action(0.0) == 0.0
        assert sep_action(2.0) == pytest.approx(1.0, abs=1e-15)

    def test_midpoint_slope(self):
        h = 1e-6
        fd = (sep_action(1 + h) - sep_action(1 - h)) / (2 * h)
        assert fd == pytest.approx(1 / math.pi, abs=1e-9)

    def test_monotone(self):
        rr = np.linspace(0.01, 1.99, 199)
        vals = [sep_action(float(r)) for r in rr]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_matches_quadrature(self):
        # independent route: half-area of the region the critical level
        # bounds, integrated as int (2/pi) arcsin weight over the loop
        from scipy.integrate import quad

        for r in (0.6, 1.4):
            def half_width(G):
                x = (r - G * G) / (r * math.sqrt(1 - G * G))
                return math.acos(min(1.0, max(-1.0, x)))

            sigma_s = math.sqrt(r * (2 - r))
            val, _ = quad(half_width, -sigma_s, sigma_s, limit=200)
            # below-side area: 2 sigma_s - integral/pi, minus the polar
            # disk (head 1 instead of 2 sigma_s) once the level exceeds 1
            if r < 1:
                assert 2 * sigma_s - val / math.pi == pytest.approx(
                    2 * sep_action(r), abs=1e-9)
            else:
                assert 1 - val / math.pi == pytest.approx(
                    2 * sep_action(r) - 1, abs=1e-9)

    def test_inverse_roundtrip(self):
        assert r_s(sep_action(1.3)) == pytest.approx(1.3, abs=1e-10)
        assert r_s(0.0) == 0.0
        assert r_s(1.0) == 2.0

    def test_inverse_slope(self):
        h = 1e-7
        fd = (r_s(0.6 + h) - r_s(0.6 - h)) / (2 * h)
        assert fd == pytest.approx(r_s_prime(0.6), rel=1e-5)


class TestEFromAction:
    @pytest.mark.parametrize("E,r,side", [
        (1.1, 0.8, "high"), (1.71, 1.7, "high"),
        (0.3, 0.6, "low"), (-1.0, 2.6, "low"),
        (1.2, 1.6, "mid"), (1.5, 2.8, "mid"),
    ])
    def test_roundtrip(self, E, r, side):
        A = level_data(E, r).action
        assert E_of_action(A, r, side) == pytest.approx(E, abs=1e-9)

    def test_out_of_band(self):
        with pytest.raises(ValueError, match="out of band"):
            E_of_action(0.05, 1.5, "high")
        with pytest.raises(ValueError):
            E_of_action(0.5, 2.5, "high")


class TestDirectAverage:
    def test_symmetry_in_g(self):
        for r, G, g in [(0.5, 0.6, 2.0), (1.5, -0.3, 0.7), (2.8, 0.1, 2.9)]:
            assert U_direct(r, G, g) == pytest.approx(U_direct(r, G, -g),
                                                      abs=1e-10)

    def test_constant_on_level(self):
        rng = np.random.default_rng(3)
        for r, E in [(0.8, 0.55), (1.5, 1.3), (2.6, 1.8)]:
            comps = level_curve(E, r, n=64)
            vals = []
            for comp in comps:
                for i in rng.integers(2, 62, size=4):
                    g, G = comp[i]
                    vals.append(U_direct(r, float(G), float(g)))
            v0 = vals[0]
            assert all(abs(v - v0) <= 1e-8 * max(1, abs(v0)) for v in vals)

    def test_matches_representation_at_spec_point(self):
        r, G, g = 0.5, 0.6, 2.0
        E = euler_E(r, G, g)
        assert U_direct(r, G, g) == pytest.approx(F_of(E, r), abs=1e-7)

    def test_collision(self):
        with pytest.raises(CollisionError):
            U_direct(1.0, 0.0, 0.0)

    def test_near_collision_still_evaluates(self):
        # passes the outer point at ~10x the collision floor
        val = U_direct(1.0, 0.0, 10 * COLLISION_FLOOR)
        assert math.isfinite(val) and val > 1


class TestRepresentation:
    def test_apex_eccentricity_anchors(self):
        assert e_signed(1 + 1.3**2 / 4, 1.3) == pytest.approx(0.65, abs=1e-14)
        assert e_signed(1.5, 1.5) == pytest.approx(0.5, abs=1e-14)
        assert e_signed(2.5, 2.5) == pytest.approx(1.0, abs=1e-12)
        assert e_signed(0.7, 1.1) < 0

    @pytest.mark.parametrize("E,r", [(0.55, 0.8), (1.3, 1.5), (1.8, 2.6),
                                     (0.9, 1.2), (1.05, 0.5), (-0.2, 0.7)])
    def test_two_routes_agree(self, E, r):
        comps = level_curve(E, r, n=48)
        g, G = comps[0][17]
        assert F_of(E, r) == pytest.approx(U_direct(r, float(G), float(g)),
                                           abs=1e-7)

    def test_random_levels_dual_route(self):
        rng = np.random.default_rng(42)
        done = 0
        while done < 50:
            r = float(rng.uniform(0.2, 1.9) if done % 2 else rng.uniform(2.1, 3.0))
            G = float(rng.uniform(-0.95, 0.95))
            g = float(rng.uniform(-math.pi, math.pi))
            E = euler_E(r, G, g)
            if abs(E - r) < 1e-3 or abs(E - 1.0) < 1e-3:
                continue
            u = U_direct(r, G, g)
            assert abs(F_of(E, r) - u) <= 1e-7 * max(1.0, abs(u))
            done += 1

    def test_log_growth_at_critical_level(self):
        r = 1.5
        for d in (1e-3, 1e-5, 1e-7):
            for E in (r + d, r - d):
                ratio = F_of(E, r) / math.log(1 / d)
                assert 0.2 < ratio < 1.2

    def test_derivative_blowup_bounded(self):
        # |dF/dE| grows like 1/|E - r|; the product must stay bounded
        r = 1.5
        for d in (1e-3, 1e-4, 1e-5):
            h = d / 10
            fd = (F_of(r + d + h, r) - F_of(r + d - h, r)) / (2 * h)
            assert abs(fd) * d < 2.0

    def test_floor(self):
        with pytest.raises(SeparatrixError):
            F_of(1.5 + 1e-12, 1.5)


class TestLevelCurve:
    def test_points_lie_on_level(self):
        for E, r in [(0.5, 1.5), (1.1, 0.8), (2.0, 2.5), (1.3, 1.5)]:
            for comp in level_curve(E, r, n=128):
                res = np.abs(euler_E(r, comp[:, 1], comp[:, 0]) - E)
                assert float(res.max()) < 1e-10

    def test_component_split(self):
        # two mirror curves above the critical level, one closed below
        comps = level_curve(1.55, 1.5, n=64)
        assert len(comps) == 2
        assert np.allclose(comps[0][:, 1], -comps[1][:, 1])
        assert len(level_curve(0.5, 1.5, n=64)) == 1
        assert len(level_curve(1.35, 1.5, n=64)) == 1

    def test_single_loop_near_top_r_gt_2(self):
        comps = level_curve(2.45, 2.5, n=64)
        assert len(comps) == 1
        assert np.all(np.abs(comps[0][:, 1]) < 1.0)

    def test_rotational_band_is_graph_over_g(self):
        # r < E < 1 at r < 1: mirror bands, each a graph over the circle
        comps = level_curve(0.9, 0.7, n=256)
        assert len(comps) == 2
        comp = comps[0]
        assert np.all(comp[:, 1] > 0)
        assert comp[:, 0].max() - comp[:, 0].min() > 2 * math.pi - 0.1


class TestPhysParams:
    def test_validation(self):
        p = PhysParams(alpha=1.0, C_total=0.3, c=1.0)
        assert p.beta == 0.0
        # alpha = 0 is the legal coupling-off degenerate case
        assert PhysParams(alpha=0.0, C_total=0.3, c=1.0).alpha == 0.0
        with pytest.raises(ValueError):
            PhysParams(alpha=-1.0, C_total=0.3, c=1.0)
        with pytest.raises(ValueError):
            PhysParams(alpha=1.0, C_total=0.3, c=1.0, beta=-0.1)
