"""Prediction-quality indices, averaged over state channels.

All normalisations use the population standard deviation of the *reference*
channel over the compared window.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannelError, InvalidInputError

DEFAULT_BINS = 64
NAMMAE_NORMALISATION = "per-channel 8*sigma inside the channel sum"


def _pair(ref, pred):
    ref = np.asarray(ref, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if ref.ndim == 1:
        ref = ref[None, :]
    if pred.ndim == 1:
        pred = pred[None, :]
    if ref.shape != pred.shape:
        raise InvalidInputError(f"shape mismatch: ref {ref.shape} vs pred {pred.shape}")
    if ref.shape[1] == 0:
        raise InvalidInputError("no samples to compare")
    return ref, pred


def _ref_sigma(ref):
    sigma = ref.std(axis=1)
    bad = np.flatnonzero(~(sigma > 0))
    if bad.size:
        raise DegenerateChannelError(
            f"reference channel(s) {bad.tolist()} have zero standard deviation"
        )
    return sigma


def _nrmse(ref, pred, sigma):
    with np.errstate(over="ignore", invalid="ignore"):
        return np.sqrt(np.mean((pred - ref) ** 2, axis=1)) / (8.0 * sigma)


def _nammae(ref, pred, sigma):
    with np.errstate(over="ignore", invalid="ignore"):
        d = np.abs(pred.min(axis=1) - ref.min(axis=1)) + np.abs(pred.max(axis=1) - ref.max(axis=1))
        return d / (2.0 * 8.0 * sigma)


def nrmse_per_channel(ref, pred) -> np.ndarray:
    ref, pred = _pair(ref, pred)
    return _nrmse(ref, pred, _ref_sigma(ref))


def nrmse(ref, pred) -> float:
    """Root-mean-square error per channel over 8 sigma_ref, channel-averaged."""
    return float(np.mean(nrmse_per_channel(ref, pred)))


def nammae_per_channel(ref, pred) -> np.ndarray:
    ref, pred = _pair(ref, pred)
    return _nammae(ref, pred, _ref_sigma(ref))


def nammae(ref, pred) -> float:
    """Mean of the min and max absolute errors over 8 sigma_ref, channel-averaged."""
    return float(np.mean(nammae_per_channel(ref, pred)))


def kl_divergence(p, q) -> float:
    """sum p ln(p/q) with 0 ln 0 = 0; q must be positive wherever p is."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence (natural log) of two probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    # KL against m = (p+q)/2 written as p ln(2p/(p+q)); halving first can underflow to 0
    s = p + q
    a, b = p > 0, q > 0
    return float(0.5 * np.sum(p[a] * np.log(2.0 * p[a] / s[a])) + 0.5 * np.sum(q[b] * np.log(2.0 * q[b] / s[b])))


def histogram_pair(a, b, n_bins: int = DEFAULT_BINS):
    """Probability masses of two samples on shared bins spanning both ranges."""
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        return np.array([1.0]), np.array([1.0])
    edges = np.linspace(lo, hi, n_bins + 1)
    return _masses(a, edges), _masses(b, edges)


def _masses(x, edges):
    # same binning as np.histogram (half-open bins, last bin closed), without its overhead
    n_bins = edges.size - 1
    idx = np.minimum(np.searchsorted(edges, x, side="right") - 1, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return counts / x.size


def jsd_per_channel(ref, pred, n_bins: int = DEFAULT_BINS) -> np.ndarray:
    ref, pred = _pair(ref, pred)
    if n_bins < 2:
        raise InvalidInputError("n_bins must be >= 2")
    out = np.empty(ref.shape[0])
    for i in range(ref.shape[0]):
        if not (np.all(np.isfinite(ref[i])) and np.all(np.isfinite(pred[i]))):
            out[i] = np.nan
            continue
        # pred plays Q, ref plays R; the divergence is symmetric anyway
        q, r = histogram_pair(pred[i], ref[i], n_bins)
        out[i] = js_divergence(q, r)
    return out


def jsd(ref, pred, n_bins: int = DEFAULT_BINS) -> float:
    """Histogram-based Jensen-Shannon divergence, channel-averaged (<= ln 2)."""
    return float(np.mean(jsd_per_channel(ref, pred, n_bins)))


@dataclass(frozen=True)
class MetricsReport:
    nrmse: float
    nammae: float
    jsd: float
    nrmse_channels: tuple[float, ...]
    nammae_channels: tuple[float, ...]
    jsd_channels: tuple[float, ...]
    T: int
    N: int
    channel_names: tuple[str, ...] = field(default=())
    nammae_normalisation: str = NAMMAE_NORMALISATION

    @property
    def finite(self) -> bool:
        return bool(np.isfinite([self.nrmse, self.nammae, self.jsd]).all())


def evaluate(ref, pred, n_bins: int = DEFAULT_BINS, channel_names=()) -> MetricsReport:
    ref, pred = _pair(ref, pred)
    sigma = _ref_sigma(ref)
    a = _nrmse(ref, pred, sigma)
    b = _nammae(ref, pred, sigma)
    c = jsd_per_channel(ref, pred, n_bins)
    return MetricsReport(
        nrmse=float(a.mean()),
        nammae=float(b.mean()),
        jsd=float(c.mean()),
        nrmse_channels=tuple(a.tolist()),
        nammae_channels=tuple(b.tolist()),
        jsd_channels=tuple(c.tolist()),
        T=ref.shape[1],
        N=ref.shape[0],
        channel_names=tuple(channel_names),
    )


@dataclass(frozen=True)
class ErrorEvolution:
    epsilon: np.ndarray
    max_value: float

    @property
    def all_zero(self) -> bool:
        return self.max_value == 0.0


def error_evolution(ref, pred) -> ErrorEvolution:
    """Channel-averaged absolute error over time, scaled by its maximum."""
    ref, pred = _pair(ref, pred)
    eps_bar = np.mean(np.abs(pred - ref), axis=0)
    peak = float(eps_bar.max())
    if peak == 0.0:
        return ErrorEvolution(epsilon=np.zeros_like(eps_bar), max_value=0.0)
    return ErrorEvolution(epsilon=eps_bar / peak, max_value=peak)
