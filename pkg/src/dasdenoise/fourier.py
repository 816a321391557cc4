"""Window and DFT kernels shared by the spectral pipeline.

Transforms are computed in-repo: an iterative radix-2 FFT when the length is
a power of two, otherwise a direct DFT realized as two real matrix products
against cached cosine/sine tables (fine at desk-scale frame lengths such as
640).  Everything is vectorized over leading axes.
"""

from __future__ import annotations

import numpy as np

_TABLE_CACHE: dict[tuple[str, int], tuple[np.ndarray, ...]] = {}


def hann_periodic(n: int) -> np.ndarray:
    """Periodic Hann window; pairs of half-window-shifted copies sum to 1."""
    if n < 1:
        raise ValueError("window length must be >= 1")
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev = (rev << 1) | ((idx >> b) & 1)
    return rev


def fft_complex(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Radix-2 Cooley-Tukey transform along the last axis (length power of 2)."""
    x = np.asarray(x)
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise ValueError(f"fft length must be a power of two, got {n}")
    y = np.array(x[..., _bit_reversal(n)], dtype=np.complex128)
    sign = 1.0 if inverse else -1.0
    half = 1
    while half < n:
        step = 2 * half
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / step)
        blocks = y.reshape(*y.shape[:-1], n // step, step)
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * tw
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        half = step
    if inverse:
        y /= n
    return y


def _forward_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    key = ("fwd", n)
    if key not in _TABLE_CACHE:
        f = n // 2 + 1
        ang = 2.0 * np.pi * np.outer(np.arange(n), np.arange(f)) / n
        _TABLE_CACHE[key] = (np.cos(ang), np.sin(ang))
    return _TABLE_CACHE[key]


def _inverse_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    key = ("inv", n)
    if key not in _TABLE_CACHE:
        f = n // 2 + 1
        coef = np.full(f, 2.0)
        coef[0] = 1.0
        if n % 2 == 0:
            coef[-1] = 1.0
        ang = 2.0 * np.pi * np.outer(np.arange(f), np.arange(n)) / n
        _TABLE_CACHE[key] = (coef[:, None] * np.cos(ang) / n,
                             coef[:, None] * np.sin(ang) / n)
    return _TABLE_CACHE[key]


def rfft_frames(frames: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Real-input DFT of the last axis, keeping bins ``0 .. n//2``.

    Returns ``(re, im)`` arrays of shape ``frames.shape[:-1] + (n//2 + 1,)``.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] != n:
        raise ValueError(f"frame length {frames.shape[-1]} != {n}")
    f = n // 2 + 1
    if is_power_of_two(n):
        z = fft_complex(frames)[..., :f]
        return np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)
    cos_t, sin_t = _forward_tables(n)
    return frames @ cos_t, -(frames @ sin_t)


def irfft_frames(re: np.ndarray, im: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`rfft_frames` assuming a Hermitian full spectrum."""
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    f = n // 2 + 1
    if re.shape != im.shape or re.shape[-1] != f:
        raise ValueError(f"expected trailing axis {f}, got {re.shape}/{im.shape}")
    if is_power_of_two(n):
        z = np.zeros(re.shape[:-1] + (n,), dtype=np.complex128)
        z[..., :f] = re + 1j * im
        z[..., f:] = np.conj(z[..., 1:f - 1])[..., ::-1]
        return fft_complex(z, inverse=True).real
    icos_t, isin_t = _inverse_tables(n)
    return re @ icos_t - im @ isin_t
