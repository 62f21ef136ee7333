"""Mutual information and peak-to-average power figures.

MI is estimated with a memoryless isotropic Gaussian auxiliary channel, which
gives an achievable-rate lower bound for the simulated fiber link. All MI values
are in bits per 4D symbol.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from .constellation import Constellation
from .exceptions import DomainError, EstimationError

MIN_SYMBOLS_FOR_FIT = 1000
_LOG2E = 1.0 / np.log(2.0)


@dataclass(frozen=True)
class MIEstimate:
    mi_bits_per_4d: float
    n_symbols: int
    sigma2: float
    stderr: float

    def to_dict(self):
        return asdict(self)


def fit_noise_variance(y, x) -> float:
    """Moment-matched noise variance per real dimension, ``mean(||y - x||**2) / 4``.

    Raises
    ------
    EstimationError
        Fewer than 1000 symbol pairs.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape:
        raise DomainError(f"shape mismatch {y.shape} vs {x.shape}")
    if len(y) < MIN_SYMBOLS_FOR_FIT:
        raise EstimationError(
            f"need at least {MIN_SYMBOLS_FOR_FIT} symbols to fit the noise variance"
        )
    return float(np.mean(np.sum((y - x) ** 2, axis=1)) / y.shape[1])


def _log_posterior(y, tx_idx, points, log_priors, sigma2):
    """Natural-log posterior of the transmitted point under the Gaussian auxiliary channel."""
    # ||y||**2 is common to every candidate and cancels in the posterior
    metric = y @ (points.T / sigma2)
    metric += log_priors - np.sum(points**2, axis=1) / (2.0 * sigma2)
    own = metric[np.arange(len(y)), tx_idx]
    peak = metric.max(axis=1)
    metric -= peak[:, None]
    np.exp(metric, out=metric)
    return own - peak - np.log(metric.sum(axis=1))


def mi_monte_carlo(y, x_indices, C: Constellation, sigma2, chunk=8192) -> MIEstimate:
    """Monte Carlo MI estimate for received 4D symbols ``y`` sent as ``C.points[x_indices]``.

    Uses ``H(X) + mean(log2 P(x_t | y_t))`` with the posterior computed under an
    isotropic Gaussian of variance ``sigma2`` per real dimension and the priors of
    ``C``. The result is clipped to ``[0, m]``.
    """
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    y = np.asarray(y, dtype=float)
    x_indices = np.asarray(x_indices)
    if len(y) != len(x_indices):
        raise DomainError("y and x_indices differ in length")
    with np.errstate(divide="ignore"):
        log_priors = np.log(C.priors)
    terms = np.empty(len(y))
    for start in range(0, len(y), chunk):
        sl = slice(start, start + chunk)
        terms[sl] = _log_posterior(y[sl], x_indices[sl], C.points, log_priors, sigma2)
    terms *= _LOG2E
    mi = C.entropy() + float(np.mean(terms))
    stderr = float(np.std(terms) / np.sqrt(len(terms)))
    return MIEstimate(
        mi_bits_per_4d=float(np.clip(mi, 0.0, np.log2(C.M))),
        n_symbols=len(y),
        sigma2=float(sigma2),
        stderr=stderr,
    )


def estimate_mi(y, x_indices, C: Constellation) -> MIEstimate:
    """Fit the auxiliary noise variance on the data, then estimate MI."""
    sigma2 = fit_noise_variance(y, C.points[x_indices])
    return mi_monte_carlo(y, x_indices, C, sigma2)


def mi_awgn_quadrature_2d(points, priors, sigma2, n_nodes=160) -> float:
    """MI of a 2D constellation on the AWGN channel by Gauss-Hermite quadrature.

    Parameters
    ----------
    points : array_like of complex
        2D constellation.
    priors : array_like
        Probabilities of ``points``.
    sigma2 : float
        Noise variance per real dimension.

    Returns
    -------
    float
        MI in bits per 2D symbol.
    """
    points = np.asarray(points, dtype=complex)
    priors = np.asarray(priors, dtype=float)
    keep = priors > 0
    points, priors = points[keep], priors[keep]
    z, w = np.polynomial.hermite.hermgauss(n_nodes)
    zz = (z[:, None] + 1j * z[None, :]).ravel() * np.sqrt(2.0 * sigma2)
    ww = (w[:, None] * w[None, :]).ravel() / np.pi
    diff = points[:, None] - points[None, :]
    # noise n = zz; exponent of q(x_i + n | x_j) / q(x_i + n | x_i)
    expo = -(np.abs(diff[:, :, None] + zz[None, None, :]) ** 2 - np.abs(zz) ** 2) / (
        2.0 * sigma2
    )
    inner = logsumexp(expo, axis=1, b=priors[None, :, None])
    return float(-np.sum(priors[:, None] * ww[None, :] * inner) * _LOG2E)


def papr_symbols(C: Constellation) -> float:
    """4D symbol-level PAPR, ``max ||x||**2 / E||x||**2`` (linear)."""
    energy = np.sum(C.points**2, axis=1)
    return float(np.max(energy[C.priors > 0]) / (C.priors @ energy))


def papr_waveform(w) -> float:
    """Waveform PAPR in dB over the joint power of both polarizations."""
    p = np.sum(np.abs(w.fields) ** 2, axis=0)
    if p.size == 0:
        raise DomainError("empty waveform")
    return float(10.0 * np.log10(p.max() / p.mean()))
