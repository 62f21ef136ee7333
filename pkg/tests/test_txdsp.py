import numpy as np
import pytest

from gss4d.constellation import Constellation, pm16qam
from gss4d.exceptions import ConfigError, DegenerateError, DomainError
from gss4d.rxdsp import matched_filter_downsample
from gss4d.txdsp import (
    SYMBOL_RATE_400ZR,
    PSDistribution,
    PulseShapeConfig,
    WaveformGrid,
    draw_symbols,
    fields_to_symbols,
    ps_pm16qam_constellation,
    nyquist_rrc_taps,
    pulse_shape,
    pulse_taps,
    rrc_taps,
    set_launch_power,
    symbols_to_fields,
)


class TestDrawSymbols:
    def test_uniform_frequencies(self):
        n = 10**6
        counts = np.bincount(draw_symbols(pm16qam(), n, 11), minlength=256)
        p = 1 / 256
        se = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 5 * se)

    def test_point_mass(self):
        priors = np.zeros(256)
        priors[17] = 1.0
        C = pm16qam().with_priors(priors)
        assert np.all(draw_symbols(C, 1000, 0) == 17)

    def test_seed_reproducible(self):
        C = pm16qam()
        np.testing.assert_array_equal(draw_symbols(C, 500, 3), draw_symbols(C, 500, 3))
        assert not np.array_equal(draw_symbols(C, 500, 3), draw_symbols(C, 500, 4))

    def test_n_must_be_positive(self):
        with pytest.raises(DomainError):
            draw_symbols(pm16qam(), 0, 0)


class TestPSConstellation:
    def test_half_is_uniform(self):
        C = ps_pm16qam_constellation(PSDistribution(0.5))
        np.testing.assert_allclose(C.priors, 1 / 256, rtol=1e-14)
        np.testing.assert_allclose(C.points, pm16qam().points, rtol=1e-14)

    def test_zero_keeps_inner_points(self):
        C = ps_pm16qam_constellation(PSDistribution(0.0))
        active = C.priors > 0
        assert active.sum() == 16
        np.testing.assert_allclose(C.priors[active], 1 / 16)
        # all active points sit on the inner level and carry unit energy
        np.testing.assert_allclose(np.abs(C.points[active]), 0.5)

    def test_quarter_product_rule(self):
        C = ps_pm16qam_constellation(PSDistribution(0.25))
        amp = np.abs(C.points)
        all_outer = np.all(amp > 2 * amp.min(), axis=1)
        assert all_outer.sum() == 16
        np.testing.assert_allclose(C.priors[all_outer], 0.25**4 / 16, rtol=1e-14)
        assert C.mean_energy == pytest.approx(1.0, abs=1e-12)

    def test_invalid(self):
        with pytest.raises(DomainError):
            PSDistribution(1.2)

    @pytest.mark.parametrize("p3", [0.15, 0.35])
    def test_empirical_amplitude_frequency(self, p3):
        C = ps_pm16qam_constellation(PSDistribution(p3))
        n = 10**6
        x = C.points[draw_symbols(C, n, 5)]
        amp = np.abs(x)
        outer = amp > 2 * amp.min()
        trials = outer.size
        se = np.sqrt(p3 * (1 - p3) / trials)
        assert abs(outer.mean() - p3) < 5 * se


class TestPulseShape:
    def test_taps_unit_energy_and_symmetric(self):
        h = rrc_taps(0.05, 64, 2)
        assert len(h) == 129
        assert np.sum(h**2) == pytest.approx(1.0)
        np.testing.assert_allclose(h, h[::-1], atol=1e-15)

    @pytest.mark.parametrize("rolloff", [0.25, 0.5])
    def test_taps_removable_singularity(self, rolloff):
        # the closed form at t = 1/(4 beta) must match the limit of the general expression
        def general(t, b=rolloff):
            return (np.sin(np.pi * t * (1 - b)) + 4 * b * t * np.cos(np.pi * t * (1 + b))) / (
                np.pi * t * (1 - (4 * b * t) ** 2)
            )

        sps = 4
        h = rrc_taps(rolloff, 16, sps)
        t = np.arange(-32, 33) / sps
        i = np.flatnonzero(np.isclose(t, 1 / (4 * rolloff)))[0]
        centre = 1 - rolloff + 4 * rolloff / np.pi
        limit = 0.5 * (general(t[i] + 1e-6) + general(t[i] - 1e-6))
        assert h[i] / h[32] == pytest.approx(limit / centre, rel=1e-6)

    def test_impulse_response(self):
        cfg = PulseShapeConfig(rolloff=0.05, span_symbols=16, sps=2)
        sym = np.zeros((64, 4))
        sym[32, 0] = 1.0
        w = pulse_shape(sym, cfg)
        taps = pulse_taps(cfg)
        centre = 32 * cfg.sps
        half = len(taps) // 2
        seg = w.ex[centre - half : centre + half + 1]
        np.testing.assert_allclose(seg.real, np.sqrt(cfg.sps) * taps, atol=1e-14)
        assert np.max(np.abs(w.ey)) < 1e-14

    def test_nyquist_matched_filter(self):
        cfg = PulseShapeConfig()
        rng = np.random.default_rng(2)
        n = 2048
        sym = np.zeros((n, 4))
        sym[:, 0] = np.where(np.arange(n) % 2, 1.0, -1.0)
        sym[:, 3] = rng.choice([-1.0, 1.0], n)
        rx = matched_filter_downsample(pulse_shape(sym, cfg), cfg)
        assert np.max(np.abs(rx.y - rx.tx_slice(sym))) < 1e-3

    def test_plain_rrc_truncation_isi(self):
        # the truncated RRC pair is only approximately Nyquist at this span
        h = rrc_taps(0.05, 64, 2)
        rc = np.convolve(h, h)[len(h) - 1 :: 2]
        assert 2 * np.abs(rc[1:]).sum() > 1e-3

    @pytest.mark.parametrize("span,sps", [(64, 2), (32, 4)])
    def test_refined_taps_are_nyquist(self, span, sps):
        h = nyquist_rrc_taps(0.05, span, sps)
        rc = np.convolve(h, h)[len(h) - 1 :: sps]
        assert rc[0] == pytest.approx(1.0, abs=1e-6)
        assert 2 * np.abs(rc[1:]).sum() < 1e-4
        np.testing.assert_allclose(h, h[::-1], atol=1e-15)

    def test_refined_taps_stay_close_to_rrc(self):
        d = nyquist_rrc_taps(0.05, 64, 2) - rrc_taps(0.05, 64, 2)
        assert np.max(np.abs(d)) < 5e-3

    def test_unknown_tap_design(self):
        with pytest.raises(ConfigError):
            PulseShapeConfig(tap_design="sinc")

    def test_mean_power_equals_symbol_energy(self):
        C = pm16qam()
        x = C.points[draw_symbols(C, 2**14, 1)]
        w = pulse_shape(x)
        assert w.power == pytest.approx(np.mean(np.sum(x**2, axis=1)), rel=0.01)

    @pytest.mark.parametrize("design", ["rrc", "nyquist"])
    def test_out_of_band_power(self, design):
        h = pulse_taps(PulseShapeConfig(tap_design=design))
        nfft = 2**18
        psd = np.abs(np.fft.fft(h, nfft)) ** 2
        f = np.fft.fftfreq(nfft, d=1 / 2)  # in units of the symbol rate
        oob = psd[np.abs(f) > 1.05 / 2].sum() / psd.sum()
        assert 10 * np.log10(oob) < -40

    def test_grid_metadata(self):
        w = pulse_shape(np.zeros((256, 4)) + 0.5)
        assert w.sample_rate == SYMBOL_RATE_400ZR * 2
        assert w.n_samples == 512 and w.n_symbols == 256

    def test_polarization_mapping_lossless(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((1000, 4))
        np.testing.assert_array_equal(fields_to_symbols(symbols_to_fields(x)), x)

    def test_filter_longer_than_block(self):
        with pytest.raises(ConfigError):
            pulse_shape(np.ones((32, 4)), PulseShapeConfig(span_symbols=64))

    def test_grid_shape_checks(self):
        with pytest.raises(DomainError):
            WaveformGrid(np.zeros((2, 5)), 1.0, 2)


class TestLaunchPower:
    def make(self, scale=1.0):
        rng = np.random.default_rng(0)
        return pulse_shape(scale * rng.standard_normal((1024, 4)))

    def test_zero_dbm(self):
        assert set_launch_power(self.make(), 0.0).power == pytest.approx(1e-3, rel=1e-9)

    def test_14_dbm(self):
        p = set_launch_power(self.make(3.0), 14.0).power
        assert p == pytest.approx(10 ** (14 / 10) * 1e-3, rel=1e-9)
        assert p * 1e3 == pytest.approx(25.12, abs=0.01)

    def test_idempotent(self):
        w1 = set_launch_power(self.make(), 7.0)
        w2 = set_launch_power(w1, 7.0)
        np.testing.assert_allclose(w2.fields, w1.fields, rtol=1e-12)

    @pytest.mark.parametrize("C", [pm16qam(), ps_pm16qam_constellation(PSDistribution(0.2))])
    def test_independent_of_constellation(self, C):
        w = pulse_shape(C.points[draw_symbols(C, 4096, 0)])
        assert set_launch_power(w, 11.5).power == pytest.approx(10**1.15 * 1e-3, rel=1e-9)

    def test_zero_power(self):
        with pytest.raises(DegenerateError):
            set_launch_power(pulse_shape(np.zeros((256, 4))), 0.0)


def test_constellation_with_priors_keeps_geometry():
    C = pm16qam()
    D = C.with_priors(np.r_[np.ones(128) / 128, np.zeros(128)])
    assert isinstance(D, Constellation)
    np.testing.assert_array_equal(D.points, C.points)
