import math

import numpy as np
import pytest

from emostress.audio import AudioClip
from emostress.errors import (
    BadMagicError,
    ClipTooShortError,
    EmptyCollectionError,
    InvalidConfigError,
    ShapeMismatchError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from emostress.features import (
    FeatureConfig,
    append_deltas,
    apply_normalizer,
    extract_features,
    extract_static_mfcc,
    filter_center_frequencies,
    fit_normalizer,
    fix_length,
    frame_signal,
    hz_to_mel,
    load_feature_cache,
    mel_filterbank_matrix,
    mel_to_hz,
    power_spectrum,
    raw_feature_matrix,
    save_feature_cache,
    _dct_matrix,
)


def direct_dft_power(frames: np.ndarray, nfft: int) -> np.ndarray:
    """O(n^2) DFT power spectrum, independent of any FFT routine."""
    frames = np.asarray(frames, dtype=np.float64)
    padded = np.zeros((len(frames), nfft))
    padded[:, : frames.shape[1]] = frames
    n = np.arange(nfft)
    bins = nfft // 2 + 1
    out = np.zeros((len(frames), bins))
    for k in range(bins):
        re = np.cos(-2.0 * math.pi * k * n / nfft)
        im = np.sin(-2.0 * math.pi * k * n / nfft)
        out[:, k] = (padded @ re) ** 2 + (padded @ im) ** 2
    return out


def reference_static_mfcc(samples: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    """From-first-principles recomputation with loops and a direct DFT."""
    x = np.asarray(samples, dtype=np.float64)
    emph = np.concatenate([[x[0]], x[1:] - cfg.preemphasis * x[:-1]])
    frames = []
    start = 0
    while start + cfg.frame_length <= len(emph):
        frames.append(emph[start : start + cfg.frame_length])
        start += cfg.hop
    n = cfg.frame_length
    window = np.array(
        [0.54 - 0.46 * math.cos(2.0 * math.pi * i / (n - 1)) for i in range(n)]
    )
    spec = direct_dft_power(np.array(frames) * window, cfg.nfft)

    def mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def imel(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    lo, hi = mel(cfg.fmin), mel(cfg.fmax)
    edges = [imel(lo + (hi - lo) * j / (cfg.n_mels + 1)) for j in range(cfg.n_mels + 2)]
    bins = cfg.nfft // 2 + 1
    bin_freq = [k * cfg.sample_rate / cfg.nfft for k in range(bins)]
    bank = np.zeros((cfg.n_mels, bins))
    for m in range(cfg.n_mels):
        left, center, right = edges[m], edges[m + 1], edges[m + 2]
        for k in range(bins):
            f = bin_freq[k]
            if left <= f <= center:
                bank[m, k] = (f - left) / (center - left)
            elif center < f <= right:
                bank[m, k] = (right - f) / (right - center)
    logmel = np.log(np.maximum(spec @ bank.T, cfg.log_floor))
    out = np.zeros((len(frames), cfg.n_ceps))
    for c in range(cfg.n_ceps):
        scale = math.sqrt(1.0 / cfg.n_mels) if c == 0 else math.sqrt(2.0 / cfg.n_mels)
        for m in range(cfg.n_mels):
            out[:, c] += logmel[:, m] * math.cos(math.pi * c * (2 * m + 1) / (2 * cfg.n_mels))
        out[:, c] *= scale
    return out


def test_mel_scale_inverse_and_anchor():
    f = np.linspace(0, 8000, 64)
    assert np.allclose(mel_to_hz(hz_to_mel(f)), f, atol=1e-9)
    assert abs(float(hz_to_mel(1000.0)) - 1000.0) < 0.1
    m = hz_to_mel(f)
    assert np.all(np.diff(m) > 0)


def test_filterbank_geometry():
    cfg = FeatureConfig()
    bank = mel_filterbank_matrix(cfg)
    assert bank.shape == (26, 257)
    assert bank.min() >= 0.0
    centers = filter_center_frequencies(cfg)
    bin_freqs = np.arange(257) * cfg.sample_rate / cfg.nfft
    for j in range(26):
        assert bank[j].max() > 0.0
        peak_freq = bin_freqs[np.argmax(bank[j])]
        # peak sits within one bin of the analytic center
        assert abs(peak_freq - centers[j]) <= cfg.sample_rate / cfg.nfft + 1e-9


def test_dct_rows_are_orthonormal():
    mat = _dct_matrix(13, 26)
    assert np.allclose(mat @ mat.T, np.eye(13), atol=1e-12)


def test_frame_counts():
    assert frame_signal(np.zeros(32000), 400, 160).shape == (198, 400)
    assert frame_signal(np.zeros(16000), 400, 160).shape == (98, 400)
    assert frame_signal(np.zeros(400), 400, 160).shape == (1, 400)
    with pytest.raises(ClipTooShortError):
        frame_signal(np.zeros(399), 400, 160)


def test_power_spectrum_matches_direct_dft():
    rng = np.random.default_rng(4)
    frames = rng.normal(size=(6, 100))
    got = power_spectrum(frames, 128)
    want = direct_dft_power(frames, 128)
    denom = np.maximum(np.abs(want), 1e-8)
    assert (np.abs(got - want) / denom).max() < 1e-10


def test_static_mfcc_matches_reference_pipeline():
    cfg = FeatureConfig()
    rng = np.random.default_rng(9)
    samples = rng.uniform(-0.5, 0.5, size=960)  # 4 frames
    clip = AudioClip(samples=samples, sample_rate=16000)
    got = extract_static_mfcc(clip, cfg)
    want = reference_static_mfcc(samples, cfg)
    assert got.shape == (4, 13)
    assert np.abs(got - want).max() < 1e-8


def test_all_zero_clip_hits_the_log_floor():
    cfg = FeatureConfig()
    clip = AudioClip(samples=np.zeros(16000), sample_rate=16000)
    static = extract_static_mfcc(clip, cfg)
    c0_expected = math.sqrt(26.0) * math.log(1e-10)
    assert np.allclose(static[:, 0], c0_expected, atol=1e-9)
    assert np.abs(static[:, 1:]).max() < 1e-9
    full = append_deltas(static)
    assert np.abs(full[:, 13:]).max() < 1e-9


def test_sine_peaks_in_the_right_mel_filter():
    cfg = FeatureConfig()
    t = np.arange(16000) / 16000.0
    clip = AudioClip(samples=0.5 * np.sin(2 * np.pi * 1000.0 * t), sample_rate=16000)
    frames = frame_signal(clip.samples, cfg.frame_length, cfg.hop)
    window = 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(cfg.frame_length) / (cfg.frame_length - 1))
    energies = (power_spectrum(frames * window, cfg.nfft) @ mel_filterbank_matrix(cfg).T).mean(axis=0)
    centers = filter_center_frequencies(cfg)
    expected = int(np.argmin(np.abs(centers - 1000.0)))
    assert int(np.argmax(energies)) in (expected - 1, expected, expected + 1)


def test_delta_of_ramp():
    t = np.arange(12, dtype=np.float64)
    static = np.stack([t, 2.0 * t], axis=1)
    full = append_deltas(static, window=2)
    assert full.shape == (12, 6)
    d1 = full[:, 2:4]
    # replicate padding: (1*(x1-x0) + 2*(x2-x0))/10 at the first row
    assert np.allclose(d1[0], [0.5, 1.0])
    assert np.allclose(d1[1], [0.8, 1.6])
    assert np.allclose(d1[2:-2, 0], 1.0)
    assert np.allclose(d1[2:-2, 1], 2.0)
    assert np.allclose(d1[-1], [0.5, 1.0])
    # delta-delta vanishes deep inside a linear ramp
    assert np.abs(full[4:-4, 4:]).max() < 1e-12


def test_delta_of_constant_is_zero():
    static = np.full((30, 13), 3.25)
    full = append_deltas(static)
    assert np.abs(full[:, 13:]).max() == 0.0


def test_fix_length_pads_with_trailing_zeros():
    feat = np.arange(10.0).reshape(5, 2)
    fixed = fix_length(feat, 8)
    assert fixed.shape == (8, 2)
    assert np.array_equal(fixed[:5], feat)
    assert np.abs(fixed[5:]).max() == 0.0


def test_fix_length_center_crops():
    feat = np.arange(250.0)[:, None] * np.ones((1, 3))
    fixed = fix_length(feat, 199)
    assert fixed.shape == (199, 3)
    assert np.array_equal(fixed, feat[25:224])


def test_fix_length_identity():
    feat = np.ones((199, 39))
    assert np.array_equal(fix_length(feat, 199), feat)


def test_normalizer_zero_mean_unit_std():
    rng = np.random.default_rng(2)
    mats = [rng.normal(loc=3.0, scale=2.0, size=(t, 5)) for t in (50, 80, 20)]
    stats = fit_normalizer(mats)
    normalized = np.concatenate([apply_normalizer(m, stats) for m in mats])
    assert np.abs(normalized.mean(axis=0)).max() < 1e-12
    assert np.abs(normalized.std(axis=0) - 1.0).max() < 1e-12


def test_normalizer_floors_constant_columns():
    mats = [np.ones((40, 3)) * 7.0]
    stats = fit_normalizer(mats)
    out = apply_normalizer(mats[0], stats)
    assert np.abs(out).max() == 0.0


def test_normalizer_validation():
    with pytest.raises(EmptyCollectionError):
        fit_normalizer([])
    stats = fit_normalizer([np.zeros((4, 5))])
    with pytest.raises(ShapeMismatchError):
        apply_normalizer(np.zeros((4, 6)), stats)


def test_extract_features_shape_and_dtype():
    cfg = FeatureConfig()
    rng = np.random.default_rng(1)
    for seconds in (0.5, 2.0, 4.0):
        clip = AudioClip(samples=rng.uniform(-0.3, 0.3, int(16000 * seconds)), sample_rate=16000)
        feat = extract_features(clip, cfg)
        assert feat.values.shape == (199, 39)
        assert feat.values.dtype == np.float32
    # 2.0 s yields 198 raw frames, one short of the target
    clip = AudioClip(samples=rng.uniform(-0.3, 0.3, 32000), sample_rate=16000)
    feat = extract_features(clip, cfg)
    assert feat.frame_count_raw == 198
    assert np.abs(feat.values[-1]).max() == 0.0  # pad row


def test_extract_features_resamples_other_rates():
    cfg = FeatureConfig()
    rng = np.random.default_rng(6)
    clip = AudioClip(samples=rng.uniform(-0.3, 0.3, 16000), sample_rate=8000)
    feat = extract_features(clip, cfg)
    assert feat.values.shape == (199, 39)
    assert np.isfinite(feat.values).all()


def test_raw_feature_matrix_mixes_down_stereo():
    rng = np.random.default_rng(7)
    mono = rng.uniform(-0.3, 0.3, 8000)
    stereo = np.empty(16000)
    stereo[0::2] = mono
    stereo[1::2] = mono
    a = raw_feature_matrix(AudioClip(samples=stereo, sample_rate=16000, channels=2), FeatureConfig())
    b = raw_feature_matrix(AudioClip(samples=mono, sample_rate=16000), FeatureConfig())
    assert np.allclose(a, b, atol=1e-12)


def test_static_mfcc_requires_matching_rate():
    clip = AudioClip(samples=np.zeros(22050), sample_rate=22050)
    with pytest.raises(InvalidConfigError):
        extract_static_mfcc(clip, FeatureConfig())


def test_config_validation():
    with pytest.raises(InvalidConfigError):
        FeatureConfig(nfft=256).validate()          # nfft < frame_length
    with pytest.raises(InvalidConfigError):
        FeatureConfig(fmax=9000.0).validate()       # above Nyquist
    with pytest.raises(InvalidConfigError):
        FeatureConfig(n_ceps=27).validate()         # more ceps than filters
    with pytest.raises(InvalidConfigError):
        FeatureConfig(hop=0).validate()
    FeatureConfig().validate()


def test_feature_cache_roundtrip(tmp_path):
    mat = np.random.default_rng(3).normal(size=(199, 39)).astype(np.float32)
    path = tmp_path / "clip.emof"
    save_feature_cache(path, mat)
    back = load_feature_cache(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, mat)


def test_feature_cache_errors(tmp_path):
    path = tmp_path / "bad.emof"
    path.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(BadMagicError):
        load_feature_cache(path)
    import struct

    path.write_bytes(b"EMOF" + struct.pack("<III", 2, 1, 1) + b"\x00" * 4)
    with pytest.raises(UnsupportedVersionError):
        load_feature_cache(path)
    path.write_bytes(b"EMOF" + struct.pack("<III", 1, 10, 10) + b"\x00" * 8)
    with pytest.raises(TruncatedFileError):
        load_feature_cache(path)
    path.write_bytes(b"EMOF")
    with pytest.raises(TruncatedFileError):
        load_feature_cache(path)
    with pytest.raises(ShapeMismatchError):
        save_feature_cache(tmp_path / "x.emof", np.zeros(5))
