"""Ideal receiver: dispersion compensation, matched filter and gain alignment."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as sfft

from .channel import FiberParams
from .exceptions import ConfigError, DegenerateError, DomainError
from .txdsp import (
    PulseShapeConfig,
    WaveformGrid,
    circular_filter,
    fields_to_symbols,
    pulse_taps,
)


@dataclass(frozen=True, eq=False)
class RxSymbols:
    """Received 4D symbols ``y`` (shape ``(K, 4)``).

    ``y[i]`` corresponds to transmitted symbol ``start + i``; ``gains`` holds the
    per-polarization complex gains applied by ``align_scale``.
    """

    y: np.ndarray
    start: int = 0
    gains: np.ndarray | None = None

    def __len__(self):
        return len(self.y)

    def tx_slice(self, x):
        """The part of a transmitted sequence aligned with ``y``."""
        return x[self.start : self.start + len(self.y)]


def cdc(w: WaveformGrid, f: FiberParams) -> WaveformGrid:
    """Undo the accumulated chromatic dispersion of ``f`` (loss is left alone)."""
    omega = w.angular_frequencies()
    H = np.exp(-0.5j * f.beta2_per_km * omega**2 * f.length_km)
    return w.with_fields(sfft.ifft(sfft.fft(w.fields, axis=1) * H, axis=1))


def matched_filter_downsample(w: WaveformGrid, cfg: PulseShapeConfig) -> RxSymbols:
    """Matched filter, sample at symbol centres, drop ``span_symbols`` per edge."""
    if w.sps != cfg.sps:
        raise ConfigError(f"waveform has sps={w.sps}, pulse config expects {cfg.sps}")
    taps = pulse_taps(cfg)
    filtered = circular_filter(w.fields, taps) / np.sqrt(cfg.sps)
    sym = fields_to_symbols(filtered[:, :: cfg.sps])
    span = cfg.span_symbols
    if len(sym) <= 2 * span:
        raise ConfigError("block too short for the configured edge discard")
    return RxSymbols(sym[span:-span], start=span)


def align_scale(y: RxSymbols, x) -> RxSymbols:
    """Remove one least-squares complex gain per polarization.

    Fits ``y ~ h x`` per polarization and returns ``y / h``; ``gains`` stores
    ``1 / h``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != y.y.shape:
        raise DomainError(f"shape mismatch {y.y.shape} vs {x.shape}")
    yc = y.y[:, 0::2] + 1j * y.y[:, 1::2]
    xc = x[:, 0::2] + 1j * x[:, 1::2]
    px = np.sum(np.abs(xc) ** 2, axis=0)
    if np.any(px == 0):
        raise DegenerateError("reference symbols have zero power")
    h = np.sum(np.conj(xc) * yc, axis=0) / px
    if np.any(h == 0):
        raise DegenerateError("received symbols are uncorrelated with the reference")
    g = 1.0 / h
    zc = yc * g
    out = np.empty_like(y.y)
    out[:, 0::2] = zc.real
    out[:, 1::2] = zc.imag
    return replace(y, y=out, gains=g)
