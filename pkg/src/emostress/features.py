"""MFCC feature extraction producing fixed-size time x coefficient matrices.

The front end is the classic chain: pre-emphasis, 25 ms Hamming frames
every 10 ms, 512-point power spectrum, 26 triangular mel filters, log,
orthonormal DCT-II keeping 13 coefficients, then delta and delta-delta
regression columns for a 39-wide frame vector.  Matrices are padded or
center-cropped to a fixed row count so every clip yields the same shape.

Normalization is corpus-level per-column z-scoring fit on the training
split only; it runs before length fixing so pad rows (zeros) sit at the
training mean in normalized space.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, resample, to_mono
from .errors import (
    BadMagicError,
    ClipTooShortError,
    EmptyCollectionError,
    InvalidConfigError,
    ShapeMismatchError,
    TruncatedFileError,
    UnsupportedVersionError,
)

STD_FLOOR = 1e-8


@dataclass
class FeatureConfig:
    sample_rate: int = 16000
    preemphasis: float = 0.97
    frame_length: int = 400   # 25 ms at 16 kHz
    hop: int = 160            # 10 ms
    nfft: int = 512
    n_mels: int = 26
    fmin: float = 0.0
    fmax: float = 8000.0
    n_ceps: int = 13
    delta_window: int = 2
    target_frames: int = 199
    log_floor: float = 1e-10

    @property
    def n_features(self) -> int:
        return 3 * self.n_ceps

    def validate(self) -> None:
        if self.nfft < self.frame_length:
            raise InvalidConfigError(f"nfft {self.nfft} < frame_length {self.frame_length}")
        if self.fmax > self.sample_rate / 2:
            raise InvalidConfigError(f"fmax {self.fmax} above Nyquist {self.sample_rate / 2}")
        if self.n_ceps > self.n_mels:
            raise InvalidConfigError(f"n_ceps {self.n_ceps} > n_mels {self.n_mels}")
        if self.target_frames < 1:
            raise InvalidConfigError("target_frames must be >= 1")
        if self.sample_rate <= 0 or self.hop <= 0 or self.frame_length <= 0:
            raise InvalidConfigError("rate, hop, and frame_length must be positive")


@dataclass
class FeatureMatrix:
    """Fixed-size feature matrix plus the frame count before length fixing."""

    values: np.ndarray
    frame_count_raw: int


@dataclass
class NormalizerStats:
    """Per-column mean and std over all training frames (std floored)."""

    mean: np.ndarray
    std: np.ndarray


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank_matrix(cfg: FeatureConfig) -> np.ndarray:
    """Triangular mel filterbank, shape n_mels x (nfft/2 + 1).

    Filter centers are equally spaced on the mel scale between fmin and
    fmax; each triangle peaks at 1.0 and is evaluated at the FFT bin
    frequencies, so every filter is nonzero on a contiguous bin range.
    """
    cfg.validate()
    mel_points = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(cfg.nfft // 2 + 1) * (cfg.sample_rate / cfg.nfft)

    bank = np.zeros((cfg.n_mels, cfg.nfft // 2 + 1))
    for j in range(cfg.n_mels):
        left, center, right = hz_points[j], hz_points[j + 1], hz_points[j + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        bank[j] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def filter_center_frequencies(cfg: FeatureConfig) -> np.ndarray:
    """Center frequency (Hz) of each mel filter."""
    mel_points = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    return mel_to_hz(mel_points[1:-1])


def _dct_matrix(n_ceps: int, n_mels: int) -> np.ndarray:
    # orthonormal DCT-II rows: Gram matrix is the identity
    n = np.arange(n_mels)
    mat = np.cos(np.pi * np.outer(np.arange(n_ceps), 2 * n + 1) / (2 * n_mels))
    mat *= np.sqrt(2.0 / n_mels)
    mat[0] *= np.sqrt(0.5)
    return mat


def frame_signal(samples: np.ndarray, frame_length: int, hop: int) -> np.ndarray:
    """Slice a signal into overlapping frames, shape T x frame_length."""
    n = len(samples)
    if n < frame_length:
        raise ClipTooShortError(f"clip of {n} samples shorter than one {frame_length}-sample frame")
    count = 1 + (n - frame_length) // hop
    starts = np.arange(count) * hop
    return samples[starts[:, None] + np.arange(frame_length)[None, :]]


def power_spectrum(frames: np.ndarray, nfft: int) -> np.ndarray:
    """|DFT|^2 of zero-padded frames on bins 0..nfft/2."""
    return np.abs(np.fft.rfft(frames, n=nfft, axis=-1)) ** 2


def extract_static_mfcc(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    """Static cepstral coefficients c0..c{n_ceps-1}, shape T x n_ceps."""
    cfg.validate()
    if clip.sample_rate != cfg.sample_rate:
        raise InvalidConfigError(
            f"clip at {clip.sample_rate} Hz, config expects {cfg.sample_rate} Hz"
        )
    x = np.asarray(clip.samples, dtype=np.float64)
    emphasized = np.empty_like(x)
    emphasized[0] = x[0]
    emphasized[1:] = x[1:] - cfg.preemphasis * x[:-1]

    frames = frame_signal(emphasized, cfg.frame_length, cfg.hop)
    window = 0.54 - 0.46 * np.cos(
        2.0 * np.pi * np.arange(cfg.frame_length) / (cfg.frame_length - 1)
    )
    spec = power_spectrum(frames * window, cfg.nfft)
    mel_energy = spec @ mel_filterbank_matrix(cfg).T
    log_mel = np.log(np.maximum(mel_energy, cfg.log_floor))
    return log_mel @ _dct_matrix(cfg.n_ceps, cfg.n_mels).T


def append_deltas(static: np.ndarray, window: int = 2) -> np.ndarray:
    """Append regression delta and delta-delta columns: T x 3*n_ceps.

    d_t = sum_n n * (c_{t+n} - c_{t-n}) / (2 * sum_n n^2) with
    replicate-edge padding, the standard delta regression.
    """
    if static.ndim != 2 or len(static) < 1:
        raise ShapeMismatchError("static features must be a nonempty T x n matrix")

    def delta(feat: np.ndarray) -> np.ndarray:
        padded = np.concatenate([
            np.repeat(feat[:1], window, axis=0), feat, np.repeat(feat[-1:], window, axis=0)
        ])
        t = len(feat)
        num = np.zeros_like(feat)
        for n in range(1, window + 1):
            num += n * (padded[window + n : window + n + t] - padded[window - n : window - n + t])
        return num / (2.0 * sum(n * n for n in range(1, window + 1)))

    d1 = delta(static)
    d2 = delta(d1)
    return np.concatenate([static, d1, d2], axis=1)


def fix_length(feat: np.ndarray, target: int) -> np.ndarray:
    """Pad with trailing zero rows or center-crop to exactly `target` rows."""
    t = len(feat)
    if t == target:
        return feat
    if t < target:
        pad = np.zeros((target - t, feat.shape[1]), dtype=feat.dtype)
        return np.concatenate([feat, pad])
    start = (t - target) // 2
    return feat[start : start + target]


def fit_normalizer(train_feats) -> NormalizerStats:
    """Per-column mean/std over all frames of all training matrices.

    Takes the raw (pre-normalization, pre-length-fixing) T x width
    matrices of the training split.  Std is floored at 1e-8 so constant
    columns normalize to zero.
    """
    mats = [np.asarray(m, dtype=np.float64) for m in train_feats]
    if not mats:
        raise EmptyCollectionError("cannot fit a normalizer on an empty collection")
    stacked = np.concatenate(mats, axis=0)
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    return NormalizerStats(mean=mean, std=std)


def apply_normalizer(feat: np.ndarray, stats: NormalizerStats) -> np.ndarray:
    """Column-wise (x - mean) / std."""
    feat = np.asarray(feat, dtype=np.float64)
    if feat.shape[1] != len(stats.mean):
        raise ShapeMismatchError(
            f"feature width {feat.shape[1]} != normalizer width {len(stats.mean)}"
        )
    return (feat - stats.mean) / stats.std


def raw_feature_matrix(clip: AudioClip, cfg: FeatureConfig) -> np.ndarray:
    """Un-normalized, un-fixed T x 3*n_ceps matrix for one clip.

    Resamples (and mixes down) to the working rate first, so callers can
    hand over clips at any source rate.
    """
    clip = to_mono(clip)
    clip = resample(clip, cfg.sample_rate)
    static = extract_static_mfcc(clip, cfg)
    return append_deltas(static, cfg.delta_window)


def finalize_features(
    raw: np.ndarray, cfg: FeatureConfig, stats: NormalizerStats | None = None
) -> FeatureMatrix:
    """Normalize (when stats given) and fix length; final values are float32."""
    feat = apply_normalizer(raw, stats) if stats is not None else np.asarray(raw, dtype=np.float64)
    fixed = fix_length(feat, cfg.target_frames)
    return FeatureMatrix(values=fixed.astype(np.float32), frame_count_raw=len(raw))


def extract_features(
    clip: AudioClip, cfg: FeatureConfig, stats: NormalizerStats | None = None
) -> FeatureMatrix:
    """Full per-clip pipeline: resample, MFCC, deltas, normalize, fix length."""
    return finalize_features(raw_feature_matrix(clip, cfg), cfg, stats)


# --- feature cache files: magic "EMOF", version 1, little-endian ---

_CACHE_MAGIC = b"EMOF"
_CACHE_VERSION = 1


def save_feature_cache(path: str | Path, matrix: np.ndarray) -> None:
    """Write one clip's matrix as EMOF v1: u32 rows, u32 cols, f32 row-major."""
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    if mat.ndim != 2:
        raise ShapeMismatchError("feature cache stores 2-d matrices")
    blob = _CACHE_MAGIC + struct.pack("<III", _CACHE_VERSION, mat.shape[0], mat.shape[1])
    Path(path).write_bytes(blob + mat.tobytes())


def load_feature_cache(path: str | Path) -> np.ndarray:
    """Read an EMOF v1 file back into a float32 matrix."""
    blob = Path(path).read_bytes()
    if len(blob) < 16:
        raise TruncatedFileError(f"{path}: shorter than the EMOF header")
    if blob[:4] != _CACHE_MAGIC:
        raise BadMagicError(f"{path}: bad magic {blob[:4]!r}")
    version, rows, cols = struct.unpack("<III", blob[4:16])
    if version != _CACHE_VERSION:
        raise UnsupportedVersionError(f"{path}: EMOF version {version}")
    need = rows * cols * 4
    if len(blob) - 16 < need:
        raise TruncatedFileError(f"{path}: expected {need} payload bytes, got {len(blob) - 16}")
    return np.frombuffer(blob[16 : 16 + need], dtype="<f4").reshape(rows, cols).copy()
