"""Evaluation metrics: lag-searched cross-correlation, its improvement in dB,
and peak-to-RMS PSNR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import MultichannelSignal
from .fourier import fft_complex


@dataclass(frozen=True)
class ChannelMetrics:
    channel: int
    cc_noisy: float
    cc_denoised: float
    cci_db: float
    psnr_noisy_db: float
    psnr_denoised_db: float


def _as_signal_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("signal must be non-empty")
    return arr


def cross_correlation_max(x, y) -> float:
    """Maximum normalized cross-correlation over all integer lags.

    Each candidate overlap is mean-removed and energy-normalized on its own,
    and lags whose overlap is shorter than half the shorter signal are
    skipped.  The scan runs over positive and negative lags; products are
    computed with one padded FFT pass and the per-overlap statistics with
    cumulative sums.
    """
    x = _as_signal_1d(x)
    y = _as_signal_1d(y)
    if not np.any(x) or not np.any(y):
        raise ValueError("cross-correlation is undefined for an all-zero signal")

    lx, ly = x.size, y.size
    n_min = max(1, min(lx, ly) // 2)

    # Raw lag products sum_i x[i] * y[i + lag] for every admissible lag.
    size = 1
    while size < lx + ly - 1:
        size *= 2
    fx = fft_complex(np.concatenate([x, np.zeros(size - lx)]).astype(np.complex128))
    fy = fft_complex(np.concatenate([y, np.zeros(size - ly)]).astype(np.complex128))
    raw = fft_complex(np.conj(fx) * fy, inverse=True).real

    lags = np.arange(-(lx - 1), ly)
    sxy = raw[lags % size]

    i0 = np.maximum(0, -lags)
    i1 = np.minimum(lx, ly - lags)
    n_ov = i1 - i0
    j0 = i0 + lags
    j1 = i1 + lags

    cx = np.concatenate([[0.0], np.cumsum(x)])
    cxx = np.concatenate([[0.0], np.cumsum(x * x)])
    cy = np.concatenate([[0.0], np.cumsum(y)])
    cyy = np.concatenate([[0.0], np.cumsum(y * y)])

    valid = n_ov >= n_min
    n = n_ov[valid].astype(np.float64)
    sx = cx[i1[valid]] - cx[i0[valid]]
    sxx = cxx[i1[valid]] - cxx[i0[valid]]
    sy = cy[j1[valid]] - cy[j0[valid]]
    syy = cyy[j1[valid]] - cyy[j0[valid]]

    var_x = np.maximum(0.0, sxx - sx * sx / n)
    var_y = np.maximum(0.0, syy - sy * sy / n)
    denom = np.sqrt(var_x * var_y)
    scale = math.sqrt(float(np.max(cxx)) * float(np.max(cyy)))
    ok = denom > 1e-15 * scale
    if not np.any(ok):
        raise ValueError("cross-correlation is undefined: no overlap with variation")
    corr = (sxy[valid][ok] - sx[ok] * sy[ok] / n[ok]) / denom[ok]
    return float(np.clip(np.max(corr), -1.0, 1.0))


def cci(cc_denoised: float, cc_noisy: float) -> float:
    """Cross-correlation improvement 20*log10((1 + cc_den) / (1 + cc_noisy)) in dB."""
    for name, v in (("cc_denoised", cc_denoised), ("cc_noisy", cc_noisy)):
        if not -1.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [-1, 1], got {v}")
    if cc_noisy == -1.0:
        raise ZeroDivisionError("cci is undefined when cc_noisy == -1")
    if cc_denoised == -1.0:
        return -math.inf
    return 20.0 * math.log10((1.0 + cc_denoised) / (1.0 + cc_noisy))


def psnr(y) -> float:
    """Peak-to-RMS ratio of a signal in dB: 20*log10(max(y) / rms(y)).

    The peak is the maximum of the signed samples; signals whose peak is not
    positive are rejected.
    """
    y = _as_signal_1d(y)
    peak = float(y.max())
    if peak <= 0.0:
        raise ValueError("psnr is undefined for signals with non-positive peak")
    rms = math.sqrt(float(np.mean(y * y)))
    return 20.0 * math.log10(peak / rms)


def evaluate_channels(noisy: MultichannelSignal, denoised: MultichannelSignal,
                      source) -> list[ChannelMetrics]:
    """Per-channel CC/CCi/PSNR of denoised and noisy signals against a source."""
    if noisy.channels != denoised.channels:
        raise ValueError(
            f"channel mismatch: noisy has {noisy.channels}, denoised has {denoised.channels}")
    source = _as_signal_1d(source)
    rows = []
    for c in range(noisy.channels):
        cc_n = cross_correlation_max(noisy.data[c], source)
        cc_d = cross_correlation_max(denoised.data[c], source)
        rows.append(ChannelMetrics(
            channel=c,
            cc_noisy=cc_n,
            cc_denoised=cc_d,
            cci_db=cci(cc_d, cc_n),
            psnr_noisy_db=psnr(noisy.data[c]),
            psnr_denoised_db=psnr(denoised.data[c]),
        ))
    return rows


def mean_metrics(rows: list[ChannelMetrics]) -> dict[str, float]:
    """Arithmetic means of every metric column."""
    if not rows:
        raise ValueError("cannot average an empty metrics list")
    return {
        "cc_noisy": float(np.mean([r.cc_noisy for r in rows])),
        "cc_denoised": float(np.mean([r.cc_denoised for r in rows])),
        "cci_db": float(np.mean([r.cci_db for r in rows])),
        "psnr_noisy_db": float(np.mean([r.psnr_noisy_db for r in rows])),
        "psnr_denoised_db": float(np.mean([r.psnr_denoised_db for r in rows])),
    }
