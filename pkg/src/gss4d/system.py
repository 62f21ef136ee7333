"""End-to-end link: TX DSP, TX noise loading, fiber, RX noise loading, RX DSP, MI.

Every random stream (symbols, TX noise, RX noise) is derived from one seed, so
two evaluations with the same seed use common random numbers.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import FiberParams, SSFMConfig, ssfm_propagate
from .constellation import Constellation
from .metrics import MIEstimate, fit_noise_variance, mi_monte_carlo, papr_waveform
from .noise import NoiseBudget, load_rx_noise, load_tx_osnr
from .rxdsp import align_scale, cdc, matched_filter_downsample
from .txdsp import (
    SYMBOL_RATE_400ZR,
    PulseShapeConfig,
    draw_symbols,
    pulse_shape,
    set_launch_power,
)

# floor for the fitted noise variance in noiseless back-to-back runs
MIN_SIGMA2 = 1e-30


@dataclass(frozen=True)
class SystemConfig:
    """Everything needed to evaluate one constellation at one operating point.

    ``distance_km = 0`` bypasses the fiber (back-to-back).
    """

    distance_km: float = 160.0
    power_dbm: float = 12.0
    n_symbols: int = 2**14
    symbol_rate: float = SYMBOL_RATE_400ZR
    fiber: FiberParams = field(default_factory=FiberParams)
    ssfm: SSFMConfig = field(default_factory=SSFMConfig)
    pulse: PulseShapeConfig = field(default_factory=PulseShapeConfig)
    noise: NoiseBudget = field(default_factory=NoiseBudget)
    tx_noise: bool = True
    rx_noise: bool = True

    def at(self, distance_km=None, power_dbm=None) -> SystemConfig:
        changes = {}
        if distance_km is not None:
            changes["distance_km"] = float(distance_km)
        if power_dbm is not None:
            changes["power_dbm"] = float(power_dbm)
        return replace(self, **changes)

    def noiseless(self) -> SystemConfig:
        return replace(self, tx_noise=False, rx_noise=False)


@dataclass(frozen=True)
class LinkResult:
    mi: MIEstimate
    papr_waveform_db: float


def seed_streams(seed):
    """Independent seeds for the symbol, TX-noise and RX-noise streams."""
    return np.random.SeedSequence(seed).spawn(3)


def simulate_link(C: Constellation, sys: SystemConfig, seed) -> LinkResult:
    """Transmit ``C`` over the configured link and estimate the MI."""
    sym_seed, tx_seed, rx_seed = seed_streams(seed)
    idx = draw_symbols(C, sys.n_symbols, sym_seed)
    x = C.points[idx]
    w = pulse_shape(x, sys.pulse, sys.symbol_rate)
    w = set_launch_power(w, sys.power_dbm)
    papr = papr_waveform(w)
    if sys.tx_noise:
        w = load_tx_osnr(w, sys.noise.tx_osnr_db, tx_seed)
    if sys.distance_km > 0:
        fiber = sys.fiber.with_length(sys.distance_km)
        w = ssfm_propagate(w, fiber, sys.ssfm)
        w = cdc(w, fiber)
    if sys.rx_noise:
        w = load_rx_noise(
            w, sys.noise.rx_noise_power_dbm, seed=rx_seed, bandwidth=sys.noise.rx_noise_bandwidth
        )
    rx = matched_filter_downsample(w, sys.pulse)
    x_ref = rx.tx_slice(x)
    rx = align_scale(rx, x_ref)
    sigma2 = max(fit_noise_variance(rx.y, x_ref), MIN_SIGMA2)
    mi = mi_monte_carlo(rx.y, rx.tx_slice(idx), C, sigma2)
    return LinkResult(mi=mi, papr_waveform_db=papr)


def evaluate_constellation(C: Constellation, sys: SystemConfig, seed) -> MIEstimate:
    return simulate_link(C, sys, seed).mi
