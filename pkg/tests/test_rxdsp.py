import numpy as np
import pytest

from gss4d.channel import FiberParams, linear_half_step
from gss4d.constellation import ShapingConfig, build_gss, pm16qam
from gss4d.exceptions import ConfigError, DegenerateError, DomainError
from gss4d.rxdsp import RxSymbols, align_scale, cdc, matched_filter_downsample
from gss4d.txdsp import (
    PSDistribution,
    PulseShapeConfig,
    draw_symbols,
    ps_pm16qam_constellation,
    pulse_shape,
    set_launch_power,
)


def evm_db(a, b):
    return 10 * np.log10(np.sum(np.abs(a - b) ** 2) / np.sum(np.abs(b) ** 2))


def tx(C=None, n=2**14, seed=0, cfg=PulseShapeConfig()):
    C = pm16qam() if C is None else C
    x = C.points[draw_symbols(C, n, seed)]
    return pulse_shape(x, cfg), x


class TestCDC:
    def test_dispersion_round_trip(self):
        w, _ = tx()
        f = FiberParams(alpha_db_per_km=0.0, length_km=160.0)
        rec = cdc(linear_half_step(w, f, f.length_km), f)
        assert evm_db(rec.fields, w.fields) < -60

    def test_lossy_round_trip_is_scaling(self):
        w, _ = tx()
        f = FiberParams(length_km=120.0)
        rec = cdc(linear_half_step(w, f, f.length_km), f)
        scale = np.exp(-0.5 * f.alpha_per_km * f.length_km)
        np.testing.assert_allclose(rec.fields / scale, w.fields, atol=1e-6 * np.abs(w.fields).max())

    def test_zero_dispersion_is_identity(self):
        w, _ = tx(n=1024)
        rec = cdc(w, FiberParams(beta2=0.0))
        np.testing.assert_allclose(rec.fields, w.fields, atol=1e-14)


class TestMatchedFilter:
    def test_back_to_back(self):
        w, x = tx()
        rx = matched_filter_downsample(w, PulseShapeConfig())
        err = np.max(np.abs(rx.y - rx.tx_slice(x)))
        assert err < 1e-3 * np.max(np.abs(x))

    def test_output_length(self):
        w, x = tx(n=1000)
        rx = matched_filter_downsample(w, PulseShapeConfig())
        assert len(rx) == 1000 - 2 * 64
        assert rx.start == 64

    def test_back_to_back_after_launch_power(self):
        w, x = tx()
        w = set_launch_power(w, 10.0)
        rx = matched_filter_downsample(w, PulseShapeConfig())
        out = align_scale(rx, rx.tx_slice(x))
        assert np.max(np.abs(out.y - rx.tx_slice(x))) < 1e-3

    def test_sps_mismatch(self):
        w, _ = tx(n=1024)
        with pytest.raises(ConfigError):
            matched_filter_downsample(w, PulseShapeConfig(sps=4))

    def test_block_too_short(self):
        w, _ = tx(n=128)
        with pytest.raises(ConfigError):
            matched_filter_downsample(w, PulseShapeConfig())

    def test_noise_variance(self):
        # white noise of variance s2 per complex sample through a unit-energy filter:
        # s2 / sps per complex symbol after the sqrt(sps) normalization
        rng = np.random.default_rng(4)
        w, x = tx(n=2**16)
        s2 = 0.02
        noise = np.sqrt(s2 / 2) * (rng.standard_normal(w.fields.shape) + 1j * rng.standard_normal(w.fields.shape))
        rx_clean = matched_filter_downsample(w, PulseShapeConfig())
        rx = matched_filter_downsample(w.with_fields(w.fields + noise), PulseShapeConfig())
        var = np.mean((rx.y - rx_clean.y) ** 2)
        assert var == pytest.approx(s2 / 2 / 2, rel=0.03)


class TestAlignScale:
    def symbols(self, n=4096, seed=0):
        C = pm16qam()
        return C.points[draw_symbols(C, n, seed)]

    def test_gain_two(self):
        x = self.symbols()
        out = align_scale(RxSymbols(2 * x), x)
        np.testing.assert_allclose(out.gains, 0.5, rtol=1e-14)
        np.testing.assert_allclose(out.y, x, atol=1e-14)

    def test_rotation_removed(self):
        x = self.symbols()
        rot = np.exp(1j * np.pi / 7)
        xc = x[:, 0::2] + 1j * x[:, 1::2]
        yc = xc * rot
        y = np.empty_like(x)
        y[:, 0::2], y[:, 1::2] = yc.real, yc.imag
        out = align_scale(RxSymbols(y), x)
        np.testing.assert_allclose(out.y, x, atol=1e-13)
        np.testing.assert_allclose(out.gains, np.conj(rot), rtol=1e-13)

    def test_independent_polarizations(self):
        x = self.symbols()
        y = x.copy()
        y[:, :2] *= 3.0
        out = align_scale(RxSymbols(y), x)
        np.testing.assert_allclose(out.gains, [1 / 3, 1.0], rtol=1e-13)

    def test_noisy_gain(self):
        # LS gain estimate has std sqrt(sigma2 / sum |x|^2) per polarization
        rng = np.random.default_rng(2)
        x = self.symbols(n=10**5)
        s = 0.1
        out = align_scale(RxSymbols(x + s * rng.standard_normal(x.shape)), x)
        px = np.sum(x[:, :2] ** 2)
        se = np.sqrt(2 * s**2 / px)
        assert np.all(np.abs(out.gains - 1) < 5 * se)

    def test_deterministic(self):
        x = self.symbols()
        y = 1.7 * x + 0.01
        a, b = align_scale(RxSymbols(y), x), align_scale(RxSymbols(y), x)
        np.testing.assert_array_equal(a.y, b.y)

    def test_zero_reference(self):
        x = self.symbols(n=100)
        x[:, 2:] = 0
        with pytest.raises(DegenerateError):
            align_scale(RxSymbols(x), x)

    def test_length_mismatch(self):
        x = self.symbols(n=100)
        with pytest.raises(DomainError):
            align_scale(RxSymbols(x[:50]), x)


@pytest.mark.parametrize(
    "C",
    [
        pm16qam(),
        ps_pm16qam_constellation(PSDistribution(0.2)),
        build_gss(np.linspace(0.2, 1.4, 28), ShapingConfig()),
    ],
    ids=["pm16qam", "ps", "gss"],
)
def test_ideal_chain_identity(C):
    n = 10**4
    w, x = tx(C, n=n + 128, seed=3)
    w = set_launch_power(w, 3.0)
    rx = matched_filter_downsample(w, PulseShapeConfig())
    out = align_scale(rx, rx.tx_slice(x))
    rel = np.max(np.linalg.norm(out.y - rx.tx_slice(x), axis=1)) / np.sqrt(C.mean_energy)
    assert len(out) == n
    assert rel < 1e-3
