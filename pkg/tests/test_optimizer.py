import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gss4d.channel import SSFMConfig
from gss4d.constellation import ShapingConfig, build_gss, pm16qam
from gss4d.exceptions import ConfigError, DomainError
from gss4d.metrics import mi_awgn_quadrature_2d
from gss4d.optimizer import (
    AWGNSurrogate,
    Bounds,
    GSSSearchConfig,
    PatternSearchConfig,
    gss_bounds,
    init_halfway,
    objective,
    optimize_gss,
    optimize_ps_prior,
    pattern_search,
)
from gss4d.system import SystemConfig, evaluate_constellation
from gss4d.txdsp import PSDistribution, ps_pm16qam_constellation

QUICK_SSFM = SSFMConfig(max_step_km=4.0, max_nl_phase_rad=1e-2)


def unit_box(n=28):
    return Bounds(np.zeros(n), np.ones(n))


class TestBounds:
    def test_gss_bounds(self):
        b = gss_bounds(ShapingConfig())
        assert b.size == 28
        np.testing.assert_array_equal(b.upper[:4], 1.0)
        np.testing.assert_array_equal(b.upper[4:], np.pi / 2)
        np.testing.assert_array_equal(b.lower, 0.0)

    def test_halfway(self):
        x = init_halfway(gss_bounds(ShapingConfig()))
        assert x.shape == (28,)
        np.testing.assert_array_equal(x[:4], 0.5)
        np.testing.assert_allclose(x[4:], np.pi / 4, rtol=1e-15)
        np.testing.assert_array_equal(x, init_halfway(gss_bounds(ShapingConfig())))

    def test_halfway_simple(self):
        assert init_halfway(Bounds(np.array([0.0]), np.array([2.0])))[0] == 1.0

    def test_invalid(self):
        with pytest.raises(ConfigError):
            Bounds(np.array([1.0]), np.array([1.0]))
        with pytest.raises(ConfigError):
            Bounds(np.zeros(2), np.ones(3))

    def test_projection(self):
        b = unit_box(3)
        np.testing.assert_array_equal(b.project(np.array([-1.0, 0.5, 2.0])), [0.0, 0.5, 1.0])


class TestPatternSearchConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(initial_mesh=0.0),
            dict(mesh_tolerance=0.5),
            dict(expand_factor=1.0),
            dict(contract_factor=1.0),
            dict(max_evals=0),
            dict(poll_order="random"),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            PatternSearchConfig(**kw)


class TestPatternSearch:
    @pytest.mark.parametrize("order", ["consecutive", "success"])
    def test_separable_quadratic(self, order):
        b = unit_box()
        res = pattern_search(
            lambda x: -np.sum((x - 0.3) ** 2), init_halfway(b), b, PatternSearchConfig(poll_order=order)
        )
        assert res.n_evals <= 20000
        assert not res.truncated
        np.testing.assert_allclose(res.x, 0.3, atol=1e-3)

    def test_complete_poll(self):
        b = unit_box(5)
        res = pattern_search(
            lambda x: -np.sum((x - 0.3) ** 2), init_halfway(b), b, PatternSearchConfig(complete_poll=True)
        )
        np.testing.assert_allclose(res.x, 0.3, atol=1e-3)

    def test_corner_optimum_on_bound(self):
        b = unit_box(6)
        res = pattern_search(lambda x: np.sum(x * np.arange(1, 7)), init_halfway(b), b)
        np.testing.assert_array_equal(res.x, 1.0)

    def test_feasible_and_monotone(self):
        b = Bounds(np.array([0.0, -1.0, 2.0]), np.array([1.0, 1.0, 5.0]))
        seen = []

        def f(x):
            seen.append(x.copy())
            return -np.sum((x - np.array([2.0, -3.0, 3.3])) ** 2) + np.sin(5 * x[2])

        res = pattern_search(f, init_halfway(b), b)
        pts = np.array(seen)
        assert np.all(pts >= b.lower) and np.all(pts <= b.upper)
        best = np.array([row[2] for row in res.trace])
        assert np.all(np.diff(best) >= 0)
        assert len(seen) == res.n_evals
        assert res.fun == pytest.approx(f(res.x))

    def test_truncation(self):
        b = unit_box()
        res = pattern_search(lambda x: -np.sum((x - 0.3) ** 2), init_halfway(b), b, PatternSearchConfig(max_evals=50))
        assert res.truncated
        assert res.n_evals == 50
        assert res.fun >= -np.sum((init_halfway(b) - 0.3) ** 2)

    def test_x0_checks(self):
        b = unit_box(2)
        with pytest.raises(DomainError):
            pattern_search(lambda x: 0.0, np.array([2.0, 0.0]), b)
        with pytest.raises(DomainError):
            pattern_search(lambda x: 0.0, np.zeros(3), b)

    def test_trace_csv(self, tmp_path):
        b = unit_box(2)
        res = pattern_search(lambda x: -np.sum(x**2), init_halfway(b), b)
        path = res.write_trace(tmp_path / "trace.csv")
        rows = path.read_text().splitlines()
        assert rows[0] == "eval,mesh,best_mi"
        assert len(rows) == len(res.trace) + 1
        last = rows[-1].split(",")
        assert float(last[2]) == res.fun

    def test_deterministic(self):
        b = unit_box(4)

        def f(x):
            return -np.sum(np.cos(7 * x) + (x - 0.6) ** 2)

        r1 = pattern_search(f, init_halfway(b), b)
        r2 = pattern_search(f, init_halfway(b), b)
        np.testing.assert_array_equal(r1.x, r2.x)
        assert r1.trace == r2.trace

    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3))
    def test_concave_targets(self, target):
        b = unit_box(3)
        t = np.array(target)
        res = pattern_search(lambda x: -np.sum((x - t) ** 2), init_halfway(b), b)
        np.testing.assert_allclose(res.x, t, atol=1e-3)


class TestObjective:
    def sys(self, **kw):
        return SystemConfig(distance_km=120.0, power_dbm=10.0, n_symbols=2**12, ssfm=QUICK_SSFM, **kw)

    def test_common_random_numbers(self):
        x = init_halfway(gss_bounds(ShapingConfig()))
        assert objective(x, self.sys(), 3) == objective(x, self.sys(), 3)

    def test_matches_shared_evaluation(self):
        # the objective is the shared link evaluation of the built constellation
        x = np.random.default_rng(0).uniform(0.1, 1.4, 28)
        C = build_gss(x, ShapingConfig())
        ref = evaluate_constellation(C, self.sys(), 5).mi_bits_per_4d
        assert objective(x, self.sys(), 5) == ref

    def test_noiseless_back_to_back(self):
        sys = SystemConfig(distance_km=0.0, n_symbols=2**12).noiseless()
        # distinct radii and generic angles give 256 distinct points
        x = np.r_[[0.2, 0.5, 0.8, 1.0], np.random.default_rng(1).uniform(0.1, 1.4, 24)]
        assert objective(x, sys, 0) == pytest.approx(8.0, abs=1e-3)

    def test_degenerate_scores_zero(self):
        x = np.zeros(28)
        assert objective(x, self.sys(), 0) == 0.0


class TestAWGNSurrogate:
    def test_against_quadrature(self):
        sigma2 = 0.25 / 10 ** (12 / 10)
        sur = AWGNSurrogate(sigma2, 2**17, 1)
        ref = 2 * mi_awgn_quadrature_2d(
            np.array([a + 1j * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)]) / math.sqrt(20),
            np.full(16, 1 / 16),
            sigma2,
        )
        assert sur(pm16qam()) == pytest.approx(ref, abs=0.02)

    def test_common_noise(self):
        sur = AWGNSurrogate(0.01, 4096, 2)
        assert sur(pm16qam()) == sur(pm16qam())


class TestOptimizeGSS:
    def test_never_below_halfway(self):
        sys = SystemConfig(distance_km=120.0, power_dbm=10.0, n_symbols=2**12, ssfm=QUICK_SSFM)
        search = GSSSearchConfig(search=PatternSearchConfig(max_evals=30, poll_order="success"), surrogate_evals=200)
        r = optimize_gss(sys, 4, search=search, surrogate_sigma2=0.02)
        start = objective(init_halfway(gss_bounds(ShapingConfig())), sys, 4)
        assert r.mi >= start
        assert r.mi == objective(r.params, sys, 4)
        assert gss_bounds(ShapingConfig()).contains(r.params)

    def test_reproducible(self):
        sys = SystemConfig(distance_km=0.0, n_symbols=2**12)
        search = GSSSearchConfig(search=PatternSearchConfig(max_evals=40), surrogate_evals=100)
        a = optimize_gss(sys, 9, search=search, surrogate_sigma2=0.01)
        b = optimize_gss(sys, 9, search=search, surrogate_sigma2=0.01)
        np.testing.assert_array_equal(a.params, b.params)
        assert a.trace == b.trace

    def test_warm_start(self):
        sys = SystemConfig(distance_km=0.0, n_symbols=2**12)
        x0 = init_halfway(gss_bounds(ShapingConfig()))
        r = optimize_gss(sys, 1, search=GSSSearchConfig(search=PatternSearchConfig(max_evals=20)), x0=x0)
        assert r.surrogate is None
        np.testing.assert_array_equal(r.x0, x0)
        assert r.search.trace[0][1] == pytest.approx(0.0625)


class TestOptimizePS:
    def sys(self):
        return SystemConfig(distance_km=120.0, power_dbm=10.0, n_symbols=2**12, ssfm=QUICK_SSFM)

    def test_grid_containment(self):
        best, mi, table = optimize_ps_prior(self.sys(), 2, grid=[0.1, 0.3])
        assert 0.5 in table
        assert mi >= table[0.5]
        assert mi == table[best]

    def test_uniform_only(self):
        best, mi, table = optimize_ps_prior(self.sys(), 2, grid=[0.5])
        assert best == 0.5
        assert mi == evaluate_constellation(pm16qam(), self.sys(), 2).mi_bits_per_4d

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            optimize_ps_prior(self.sys(), 2, grid=[])

    def test_out_of_range_grid(self):
        with pytest.raises(ConfigError):
            optimize_ps_prior(self.sys(), 2, grid=[1.5])

    def test_high_snr_prefers_uniform(self):
        # back-to-back at high SNR: shaping gain vanishes, the oracle and the search agree
        levels = np.array([-3.0, -1.0, 1.0, 3.0])
        sigma2 = 0.25 / 10 ** (24 / 10)
        grid = np.linspace(0.0, 0.5, 11)
        oracle = []
        for p3 in grid:
            C = ps_pm16qam_constellation(PSDistribution(p3))
            unit = np.abs(C.points).min()
            per = np.where(np.abs(levels) > 2, p3 / 2, (1 - p3) / 2)
            pts = unit * (levels[:, None] + 1j * levels[None, :]).ravel()
            oracle.append(2 * mi_awgn_quadrature_2d(pts, (per[:, None] * per[None, :]).ravel(), sigma2))
        assert grid[int(np.argmax(oracle))] >= 0.4
        sys = SystemConfig(distance_km=0.0, power_dbm=0.0, n_symbols=2**13)
        best, _, _ = optimize_ps_prior(sys, 0, grid=grid)
        assert best >= 0.4
