"""Per-channel STFT/ISTFT and spectrogram-tensor construction.

Framing starts at sample 0 with no centering or zero padding; frame ``k``
covers samples ``[k*hop, k*hop + window)``.  Analysis and synthesis both use
the periodic Hann window, and the inverse normalizes by the accumulated
squared window, so an unmodified round trip reconstructs the interior
exactly for any hop up to the window length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import hann_periodic, irfft_frames, rfft_frames


@dataclass(frozen=True)
class MultichannelSignal:
    """C-channel time-domain signal; ``data`` has shape (channels, samples)."""

    data: np.ndarray
    sample_rate: float

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise ValueError(f"expected (channels, samples) data, got {arr.shape}")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples_per_channel(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Per-channel complex STFT stored as separate real/imag (C, F, T) arrays."""

    real: np.ndarray
    imag: np.ndarray
    window_size: int
    hop_size: int
    sample_rate: float

    def __post_init__(self):
        re = np.asarray(self.real, dtype=np.float64)
        im = np.asarray(self.imag, dtype=np.float64)
        if re.shape != im.shape or re.ndim != 3:
            raise ValueError(f"real/imag must be equal 3-D shapes, got {re.shape}/{im.shape}")
        if re.shape[1] != self.window_size // 2 + 1:
            raise ValueError(
                f"{re.shape[1]} frequency bins inconsistent with window {self.window_size}")
        if not 1 <= self.hop_size <= self.window_size:
            raise ValueError("hop_size must be in [1, window_size]")
        object.__setattr__(self, "real", np.ascontiguousarray(re))
        object.__setattr__(self, "imag", np.ascontiguousarray(im))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.real.shape


def stft(sig: MultichannelSignal, window_size: int, hop_size: int) -> ComplexSpectrogram:
    """Hann-windowed real-input STFT of every channel."""
    if window_size < 2 or window_size % 2 != 0:
        raise ValueError("window_size must be even and >= 2")
    if hop_size < 1:
        raise ValueError("hop_size must be >= 1")
    n = sig.samples_per_channel
    if n < window_size:
        raise ValueError(f"signal length {n} is shorter than one window ({window_size})")

    n_frames = 1 + (n - window_size) // hop_size
    idx = hop_size * np.arange(n_frames)[:, None] + np.arange(window_size)[None, :]
    frames = sig.data[:, idx] * hann_periodic(window_size)[None, None, :]
    re, im = rfft_frames(frames, window_size)  # (C, T, F)
    return ComplexSpectrogram(
        real=np.ascontiguousarray(np.swapaxes(re, 1, 2)),
        imag=np.ascontiguousarray(np.swapaxes(im, 1, 2)),
        window_size=window_size,
        hop_size=hop_size,
        sample_rate=sig.sample_rate,
    )


def magnitude(spec: ComplexSpectrogram) -> np.ndarray:
    """Entrywise complex magnitude as a (C, F, T) tensor."""
    return np.sqrt(spec.real ** 2 + spec.imag ** 2)


def istft_with_phase(mag: np.ndarray, phase_source: ComplexSpectrogram) -> MultichannelSignal:
    """Inverse STFT of ``mag`` combined with the phase angles of ``phase_source``.

    Output length is ``(T - 1) * hop + window``.  Samples where the
    accumulated squared synthesis window vanishes (the very edges for a
    zero-endpoint window) are set to 0.
    """
    mag = np.asarray(mag, dtype=np.float64)
    if mag.shape != phase_source.dims:
        raise ValueError(f"magnitude shape {mag.shape} != spectrogram {phase_source.dims}")
    if mag.size and float(mag.min()) < 0.0:
        raise ValueError("magnitude must be non-negative")

    window = phase_source.window_size
    hop = phase_source.hop_size
    angle = np.arctan2(phase_source.imag, phase_source.real)
    re = np.swapaxes(mag * np.cos(angle), 1, 2)  # (C, T, F)
    im = np.swapaxes(mag * np.sin(angle), 1, 2)
    frames = irfft_frames(re, im, window)

    win = hann_periodic(window)
    frames *= win[None, None, :]
    channels, n_frames, _ = frames.shape
    out_len = (n_frames - 1) * hop + window
    y = np.zeros((channels, out_len))
    den = np.zeros(out_len)
    win_sq = win * win
    for k in range(n_frames):
        start = k * hop
        y[:, start:start + window] += frames[:, k, :]
        den[start:start + window] += win_sq
    live = den > 1e-12 * den.max()
    y[:, live] /= den[live]
    y[:, ~live] = 0.0
    return MultichannelSignal(data=y, sample_rate=phase_source.sample_rate)
