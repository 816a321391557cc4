"""Reference denoising methods: spectral subtraction, spatial SVD, Tucker truncation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import ComplexSpectrogram, MultichannelSignal, magnitude
from .svd import leading_left_singular_vectors
from .tensor import as_tensor3, hosvd, reconstruct


@dataclass(frozen=True)
class NoiseFloor:
    """Time-averaged noise magnitude per (channel, frequency)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a (channels, frequencies) matrix, got {arr.shape}")
        if arr.size and float(arr.min()) < 0.0:
            raise ValueError("noise floor entries must be non-negative")
        object.__setattr__(self, "values", arr)


def estimate_noise_floor(noise: ComplexSpectrogram) -> NoiseFloor:
    """Mean magnitude over time frames of a noise-only recording."""
    return NoiseFloor(values=magnitude(noise).mean(axis=2))


def spectral_subtraction(mag: np.ndarray, floor: NoiseFloor, alpha: float = 1.0) -> np.ndarray:
    """max(0, mag - alpha * floor) per (channel, frequency, time) entry."""
    mag = as_tensor3(mag)
    if not alpha >= 0:
        raise ValueError("alpha must be non-negative")
    if floor.values.shape != mag.shape[:2]:
        raise ValueError(
            f"noise floor shape {floor.values.shape} incompatible with tensor {mag.shape}")
    return np.maximum(0.0, mag - alpha * floor.values[:, :, None])


def svd_denoise(sig: MultichannelSignal, rank: int) -> MultichannelSignal:
    """Best rank-``rank`` approximation of the (channels x samples) matrix.

    Operates directly in the time domain; the signal never enters the
    spectrogram representation.
    """
    if not 1 <= rank <= sig.channels:
        raise ValueError(f"rank {rank} out of range [1, {sig.channels}]")
    a = sig.data
    u = leading_left_singular_vectors(a, rank)
    return MultichannelSignal(data=u @ (u.T @ a), sample_rate=sig.sample_rate)


def tucker_denoise(mag: np.ndarray, ranks: tuple[int, int, int]) -> np.ndarray:
    """Tucker truncation of the amplitude tensor, clipped at zero."""
    return np.maximum(0.0, reconstruct(hosvd(as_tensor3(mag), ranks)))
