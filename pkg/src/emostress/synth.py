"""Synthetic 7-class audio corpus for end-to-end runs without real speech.

Each emotion gets a distinct spectral recipe (pure tones, harmonic stacks,
a chord, vibrato, narrowband noise) so a small CNN can separate the
classes, while per-clip pitch jitter, phase, amplitude, and a per-speaker
pitch offset keep clips within a class from being identical.  Clips are
derived from per-clip seeds, so regenerating any subset reproduces the
same audio regardless of generation order.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .audio import write_wav_pcm16
from .errors import InvalidConfigError
from .labels import CLASS_NAMES
from .rng import Rng, derive_seed


def _tone(t: np.ndarray, freq: float, phase: float) -> np.ndarray:
    return np.sin(2.0 * math.pi * freq * t + phase)


def _vibrato(t: np.ndarray, freq: float, depth: float, rate: float, phase: float) -> np.ndarray:
    # instantaneous frequency freq + depth*cos(2*pi*rate*t)
    mod = (depth / rate) * np.sin(2.0 * math.pi * rate * t)
    return np.sin(2.0 * math.pi * (freq * t + mod) + phase)


def _narrowband_noise(t: np.ndarray, freq: float, rng: Rng, phase: float) -> np.ndarray:
    # random-walk phase smears a tone into a band around freq
    drift = np.cumsum(rng.normal(len(t))) * 0.25
    return np.sin(2.0 * math.pi * freq * t + phase + drift)


def synth_clip(
    emotion: str, rng: Rng, sample_rate: int = 16000, duration: float = 2.0
) -> np.ndarray:
    """One mono clip in [-1, 1] following the emotion's recipe."""
    if emotion not in CLASS_NAMES:
        raise InvalidConfigError(f"unknown synth emotion {emotion!r}")
    n = int(round(sample_rate * duration))
    t = np.arange(n) / sample_rate
    jitter = 1.0 + 0.06 * (float(rng.uniform(1)[0]) - 0.5)
    phase = 2.0 * math.pi * float(rng.uniform(1)[0])
    amp = 0.25 + 0.15 * float(rng.uniform(1)[0])

    if emotion == "angry":
        f0 = 220.0 * jitter
        x = sum(_tone(t, f0 * k, phase * k) / k**0.5 for k in range(1, 9))
        x = x / 6.0 + 0.15 * rng.normal(n)
    elif emotion == "boredom":
        x = _tone(t, 330.0 * jitter, phase)
    elif emotion == "disgust":
        x = _narrowband_noise(t, 2000.0 * jitter, rng, phase)
    elif emotion == "fear":
        x = _vibrato(t, 800.0 * jitter, depth=100.0, rate=6.0, phase=phase)
    elif emotion == "happy":
        x = (
            _tone(t, 523.25 * jitter, phase)
            + _tone(t, 659.25 * jitter, phase * 2.0)
            + _tone(t, 783.99 * jitter, phase * 3.0)
        ) / 3.0
    elif emotion == "neutral":
        x = _tone(t, 440.0 * jitter, phase)
    else:  # sad
        x = _tone(t, 160.0 * jitter, phase) * np.exp(-t / 0.7)

    x = x + 0.01 * rng.normal(n)
    peak = float(np.max(np.abs(x)))
    return x * (amp / peak) if peak > 0 else x


def generate_corpus(
    root: str | Path,
    clips_per_class: int = 30,
    seed: int = 0,
    sample_rate: int = 16000,
    duration: float = 2.0,
    n_speakers: int = 10,
) -> list[Path]:
    """Write ``<root>/<emotion>/<emotion>_s<speaker>_<index>.wav`` clips."""
    if clips_per_class < 1 or duration <= 0 or n_speakers < 1:
        raise InvalidConfigError("clips_per_class, duration, n_speakers must be positive")
    root = Path(root)
    paths = []
    for emotion in CLASS_NAMES:
        out_dir = root / emotion
        out_dir.mkdir(parents=True, exist_ok=True)
        for idx in range(clips_per_class):
            speaker = idx % n_speakers
            rng = Rng(derive_seed(seed, f"synth/{emotion}/{idx:03d}"))
            samples = synth_clip(emotion, rng, sample_rate, duration)
            # stable per-speaker pitch shift via linear time warp
            rate_shift = 1.0 + 0.04 * (speaker - (n_speakers - 1) / 2.0) / max(n_speakers - 1, 1)
            warped_pos = np.arange(len(samples)) * rate_shift
            warped = np.interp(warped_pos, np.arange(len(samples)), samples)
            path = out_dir / f"{emotion}_s{speaker:02d}_{idx:03d}.wav"
            write_wav_pcm16(path, warped, sample_rate)
            paths.append(path)
    return paths
