"""Synthetic multichannel acoustic scenes with known ground truth.

Scenes embody the two priors the denoiser exploits: the clean channel matrix
has rank at most the number of sources (each channel is a gain-scaled,
optionally delayed copy of the same sources), and per-channel sensitivity
varies (gain and noise level profiles).  Noise is white Gaussian with a
per-channel sigma, drawn from a seed-derived stream independent of the
source draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import MultichannelSignal

SOURCE_KINDS = ("sine", "chirp", "filtered_noise", "wav")


@dataclass(frozen=True)
class SourceSpec:
    """One source waveform.

    * ``sine``: ``freq_hz`` peak-amplitude sinusoid.
    * ``chirp``: linear sweep ``f0_hz`` to ``f1_hz``, peak amplitude.
    * ``filtered_noise``: white noise band-passed to ``band_hz``, normalized
      to unit RMS before scaling by ``amplitude``.
    * ``wav``: samples provided externally via ``samples`` (already at the
      scene rate), scaled by ``amplitude``.
    """

    kind: str
    amplitude: float = 1.0
    freq_hz: float | None = None
    f0_hz: float | None = None
    f1_hz: float | None = None
    band_hz: tuple[float, float] | None = None
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.kind == "sine" and not self.freq_hz:
            raise ValueError("sine source requires freq_hz")
        if self.kind == "chirp" and (self.f0_hz is None or self.f1_hz is None):
            raise ValueError("chirp source requires f0_hz and f1_hz")
        if self.kind == "filtered_noise":
            if self.band_hz is None or not 0 <= self.band_hz[0] < self.band_hz[1]:
                raise ValueError("filtered_noise source requires band_hz = (lo, hi), lo < hi")
        if self.kind == "wav" and self.samples is None:
            raise ValueError("wav source requires samples")


@dataclass(frozen=True)
class SceneConfig:
    channels: int
    duration_s: float
    sample_rate: float
    sources: tuple[SourceSpec, ...]
    gains: np.ndarray
    delays: np.ndarray
    noise_sigma: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if not self.duration_s > 0 or not self.sample_rate > 0:
            raise ValueError("duration_s and sample_rate must be positive")
        if len(self.sources) < 1:
            raise ValueError("at least one source is required")
        object.__setattr__(self, "sources", tuple(self.sources))
        for name in ("gains", "noise_sigma"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.channels,):
                raise ValueError(f"{name} must have length {self.channels}")
            if float(arr.min()) < 0:
                raise ValueError(f"{name} entries must be non-negative")
            object.__setattr__(self, name, arr)
        delays = np.asarray(self.delays, dtype=np.int64)
        if delays.shape != (self.channels,):
            raise ValueError(f"delays must have length {self.channels}")
        if int(delays.min()) < 0:
            raise ValueError("delays must be non-negative sample counts")
        object.__setattr__(self, "delays", delays)

    @property
    def total_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))


@dataclass(frozen=True)
class SceneTruth:
    """Generated scene plus everything needed to score a denoiser on it."""

    clean: MultichannelSignal
    noisy: MultichannelSignal
    sources: tuple[np.ndarray, ...]
    noise: np.ndarray
    gains: np.ndarray
    noise_sigma: np.ndarray


def _bandpass_fir(lo_hz: float, hi_hz: float, sample_rate: float, taps: int = 257) -> np.ndarray:
    """Windowed-sinc band-pass kernel (symmetric Hann taper, odd length)."""
    if taps % 2 == 0:
        taps += 1
    mid = (taps - 1) // 2
    n = np.arange(taps) - mid
    w1 = 2.0 * lo_hz / sample_rate
    w2 = 2.0 * hi_hz / sample_rate
    h = w2 * np.sinc(w2 * n) - w1 * np.sinc(w1 * n)
    taper = 0.5 * (1.0 + np.cos(np.pi * n / (mid + 1)))
    return h * taper


def _render_source(spec: SourceSpec, n: int, sample_rate: float,
                   rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / sample_rate
    if spec.kind == "sine":
        return spec.amplitude * np.sin(2.0 * np.pi * spec.freq_hz * t)
    if spec.kind == "chirp":
        dur = n / sample_rate
        phase = 2.0 * np.pi * (spec.f0_hz * t + (spec.f1_hz - spec.f0_hz) * t * t / (2.0 * dur))
        return spec.amplitude * np.sin(phase)
    if spec.kind == "filtered_noise":
        white = rng.standard_normal(n)
        shaped = np.convolve(white, _bandpass_fir(*spec.band_hz, sample_rate), mode="same")
        rms = math.sqrt(float(np.mean(shaped * shaped)))
        if rms > 0:
            shaped /= rms
        return spec.amplitude * shaped
    samples = np.asarray(spec.samples, dtype=np.float64).ravel()
    out = np.zeros(n)
    out[:min(n, samples.size)] = samples[:n]
    return spec.amplitude * out


def generate(cfg: SceneConfig) -> SceneTruth:
    """Render a scene: clean[c] = sum_s gain_c * delayed source_s, plus noise."""
    n = cfg.total_samples
    if n < 1:
        raise ValueError("scene is empty: duration times sample rate < 1 sample")
    src_seed, noise_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    src_rng = np.random.default_rng(src_seed)

    sources = tuple(_render_source(s, n, cfg.sample_rate, src_rng) for s in cfg.sources)
    mix = np.zeros(n)
    for s in sources:
        mix += s

    clean = np.zeros((cfg.channels, n))
    for c in range(cfg.channels):
        d = int(cfg.delays[c])
        if d < n:
            clean[c, d:] = cfg.gains[c] * mix[:n - d]

    noise = (np.random.default_rng(noise_seed).standard_normal((cfg.channels, n))
             * cfg.noise_sigma[:, None])
    noisy = clean + noise
    return SceneTruth(
        clean=MultichannelSignal(data=clean, sample_rate=cfg.sample_rate),
        noisy=MultichannelSignal(data=noisy, sample_rate=cfg.sample_rate),
        sources=sources,
        noise=noise,
        gains=cfg.gains.copy(),
        noise_sigma=cfg.noise_sigma.copy(),
    )


def standard_scene_config(seed: int = 0) -> SceneConfig:
    """The repo-wide fixture: 50 channels, 4 s at 20 kHz, one band-limited
    noise source, gains ramping 0.1 -> 1.0 and noise sigma ramping 1.0 -> 0.1
    (the least sensitive channels are the noisiest)."""
    channels = 50
    return SceneConfig(
        channels=channels,
        duration_s=4.0,
        sample_rate=20000.0,
        sources=(SourceSpec(kind="filtered_noise", amplitude=1.0, band_hz=(200.0, 3000.0)),),
        gains=np.linspace(0.1, 1.0, channels),
        delays=np.zeros(channels, dtype=np.int64),
        noise_sigma=np.linspace(1.0, 0.1, channels),
        seed=seed,
    )


def standard_scene(seed: int = 0) -> SceneTruth:
    """Deterministic standard scene; equal seeds give bit-identical output."""
    return generate(standard_scene_config(seed))


def ambient_noise(cfg: SceneConfig, duration_s: float, seed: int) -> MultichannelSignal:
    """Noise-only recording with the scene's per-channel sigma profile
    (for noise-floor estimation)."""
    if not duration_s > 0:
        raise ValueError("duration_s must be positive")
    n = int(round(duration_s * cfg.sample_rate))
    # Third spawn child: children 0 and 1 are taken by a scene generated
    # from the same seed, so an ambient recording never replays its streams.
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    data = rng.standard_normal((cfg.channels, n)) * cfg.noise_sigma[:, None]
    return MultichannelSignal(data=data, sample_rate=cfg.sample_rate)
