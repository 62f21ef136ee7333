"""AWGN loading stages and the OSNR / SNR / BER conversions that calibrate them.

The transmitter is loaded to a fixed OSNR in a 12.5 GHz (0.1 nm) reference
bandwidth with noise in both polarizations. The receiver adds a fixed absolute
noise power, derived from the SNR at which Gray-coded 16QAM reaches the pre-FEC
BER threshold for a given receiver input power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import erfc

from .exceptions import DomainError
from .txdsp import WaveformGrid

OSNR_REF_BANDWIDTH = 12.5e9
SNR_SEARCH_RANGE_DB = (-10.0, 30.0)


def qfunc(x):
    """Gaussian tail probability."""
    return 0.5 * erfc(np.asarray(x) / math.sqrt(2.0))


def ber_16qam(snr_db):
    """Bit error rate of Gray-coded square 16QAM on AWGN at symbol SNR ``snr_db``.

    Exact per-bit average over the two 4-PAM rails:
    ``(3 Q(d) + 2 Q(3d) - Q(5d)) / 4`` with ``d = sqrt(SNR / 5)``.
    """
    snr = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    d = np.sqrt(snr / 5.0)
    ber = (3.0 * qfunc(d) + 2.0 * qfunc(3.0 * d) - qfunc(5.0 * d)) / 4.0
    return float(ber) if ber.ndim == 0 else ber


def snr_for_ber(ber_target: float) -> float:
    """Symbol SNR in dB at which 16QAM reaches ``ber_target`` (bisection)."""
    if not 0.0 < ber_target < 0.5:
        raise DomainError(f"BER target must lie in (0, 0.5), got {ber_target}")
    lo, hi = SNR_SEARCH_RANGE_DB
    if not ber_16qam(hi) <= ber_target <= ber_16qam(lo):
        raise DomainError(f"BER target {ber_target} is outside the searchable SNR range")
    return bisect(lambda s: ber_16qam(s) - ber_target, lo, hi, xtol=1e-12, rtol=1e-15, maxiter=200)


def rx_noise_power(input_power_dbm: float, snr_db: float) -> float:
    return input_power_dbm - snr_db


@dataclass(frozen=True)
class NoiseBudget:
    """400ZR-style noise budget.

    ``rx_noise_bandwidth`` sets what the receiver noise power is integrated over:
    ``"full"`` (the whole simulation bandwidth) or ``"signal"`` (one symbol-rate
    bandwidth, so the noise PSD is independent of the sampling rate).
    """

    tx_osnr_db: float = 34.0
    rx_input_power_dbm: float = -20.0
    rx_prefec_ber_target: float = 1.25e-2
    rx_noise_bandwidth: str = "signal"

    def __post_init__(self):
        if self.rx_noise_bandwidth not in ("full", "signal"):
            raise DomainError(f"unknown rx_noise_bandwidth {self.rx_noise_bandwidth!r}")

    @property
    def rx_snr_db(self) -> float:
        return snr_for_ber(self.rx_prefec_ber_target)

    @property
    def rx_noise_power_dbm(self) -> float:
        return rx_noise_power(self.rx_input_power_dbm, self.rx_snr_db)


def complex_awgn(shape, variance, rng) -> np.ndarray:
    """Circular complex Gaussian samples with total variance ``variance`` per sample."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def load_tx_osnr(
    w: WaveformGrid, osnr_db: float, seed, ref_bandwidth=OSNR_REF_BANDWIDTH
) -> WaveformGrid:
    """Add white noise so that signal power over noise power in ``ref_bandwidth`` is ``osnr_db``.

    Noise is counted in both polarizations and spread over the full simulation
    bandwidth. ``osnr_db = inf`` returns ``w`` unchanged.
    """
    if math.isinf(osnr_db) and osnr_db > 0:
        return w
    if not 0.0 < osnr_db <= 60.0:
        raise DomainError(f"OSNR must lie in (0, 60] dB, got {osnr_db}")
    ps = w.power
    if not ps > 0:
        raise DomainError("signal power must be positive")
    noise_psd = ps / 10.0 ** (osnr_db / 10.0) / ref_bandwidth
    per_pol = noise_psd * w.sample_rate / 2.0
    rng = np.random.default_rng(seed)
    return w.with_fields(w.fields + complex_awgn(w.fields.shape, per_pol, rng))


def measure_osnr(clean: WaveformGrid, noisy: WaveformGrid, ref_bandwidth=OSNR_REF_BANDWIDTH) -> float:
    """OSNR in dB of ``noisy`` given the noise-free reference ``clean``."""
    noise = noisy.fields - clean.fields
    pn = float(np.mean(np.abs(noise[0]) ** 2 + np.abs(noise[1]) ** 2))
    return 10.0 * math.log10(clean.power / (pn * ref_bandwidth / clean.sample_rate))


def load_rx_noise(
    w: WaveformGrid,
    noise_power_dbm: float,
    signal_power_assumption_dbm: float | None = None,
    seed=None,
    bandwidth: str = "full",
) -> WaveformGrid:
    """Add receiver AWGN of total power ``noise_power_dbm``, split over both polarizations.

    If ``signal_power_assumption_dbm`` is given the waveform is first rescaled to
    that mean power (back-to-back calibration); otherwise the noise meets the
    waveform at whatever power it arrives with. ``bandwidth="signal"`` integrates
    the noise power over the symbol rate instead of the full sampling bandwidth.
    """
    if w.n_samples == 0:
        raise DomainError("empty waveform")
    if signal_power_assumption_dbm is not None:
        target = 10.0 ** ((signal_power_assumption_dbm - 30.0) / 10.0)
        w = w.with_fields(w.fields * math.sqrt(target / w.power))
    if math.isinf(noise_power_dbm) and noise_power_dbm < 0:
        return w
    pn = 10.0 ** ((noise_power_dbm - 30.0) / 10.0)
    if bandwidth == "signal":
        pn *= w.sample_rate / w.symbol_rate
    elif bandwidth != "full":
        raise DomainError(f"unknown bandwidth {bandwidth!r}")
    rng = np.random.default_rng(seed)
    return w.with_fields(w.fields + complex_awgn(w.fields.shape, pn / 2.0, rng))
