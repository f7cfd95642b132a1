"""WAV decoding, channel mixdown, and linear resampling.

Decodes RIFF/WAVE files with PCM (8/16/24/32-bit integer) or IEEE
float-32 samples into float buffers scaled to [-1, 1].  Everything here
is pure given the file bytes; clips can be processed concurrently.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ChannelMismatchError,
    CorruptHeaderError,
    InvalidRateError,
    UnsupportedFormatError,
)

_FMT_PCM = 0x0001
_FMT_FLOAT = 0x0003
_FMT_EXTENSIBLE = 0xFFFE


@dataclass
class AudioClip:
    """Decoded audio: interleaved samples in [-1, 1] plus rate metadata."""

    samples: np.ndarray
    sample_rate: int
    channels: int = 1
    source_path: str = ""

    @property
    def frame_count(self) -> int:
        return len(self.samples) // self.channels

    @property
    def duration(self) -> float:
        return self.frame_count / self.sample_rate


def _scale_pcm(raw: bytes, bits: int) -> np.ndarray:
    """Scale integer PCM to [-1, 1]: signed v -> v / 2^(bits-1),
    unsigned 8-bit v -> (v - 128) / 128."""
    if bits == 8:
        data = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
        return (data - 128.0) / 128.0
    if bits == 16:
        return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if bits == 24:
        n = len(raw) // 3
        b = np.frombuffer(raw[: n * 3], dtype=np.uint8).reshape(n, 3).astype(np.uint32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = v.astype(np.int32)
        v[v >= 1 << 23] -= 1 << 24
        return v.astype(np.float64) / float(1 << 23)
    if bits == 32:
        return np.frombuffer(raw, dtype="<i4").astype(np.float64) / float(1 << 31)
    raise UnsupportedFormatError(f"unsupported PCM bit depth: {bits}")


def read_wav(path: str | Path) -> AudioClip:
    """Decode a RIFF/WAVE file into an AudioClip.

    Multi-channel data stays interleaved; run to_mono before feature
    extraction.  Raises FileNotFoundError, UnsupportedFormatError for
    compressed/non-PCM codecs, CorruptHeaderError for bad chunk layout.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack("<I", blob[pos + 4 : pos + 8])
        body = blob[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise CorruptHeaderError(f"{path}: chunk {cid!r} truncated")
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise CorruptHeaderError(f"{path}: missing fmt or data chunk")
    if len(fmt) < 16:
        raise CorruptHeaderError(f"{path}: fmt chunk too small")

    code, channels, rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
    if code == _FMT_EXTENSIBLE:
        if len(fmt) < 26:
            raise CorruptHeaderError(f"{path}: extensible fmt chunk too small")
        (code,) = struct.unpack("<H", fmt[24:26])  # first bytes of SubFormat GUID
    if channels < 1 or rate < 1:
        raise CorruptHeaderError(f"{path}: bad channel count or rate")

    if code == _FMT_PCM:
        samples = _scale_pcm(data, bits)
    elif code == _FMT_FLOAT:
        if bits != 32:
            raise UnsupportedFormatError(f"{path}: float WAV must be 32-bit, got {bits}")
        samples = np.clip(np.frombuffer(data, dtype="<f4").astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedFormatError(f"{path}: non-PCM format code 0x{code:04X}")

    if len(samples) == 0:
        raise CorruptHeaderError(f"{path}: empty data chunk")
    return AudioClip(samples=samples, sample_rate=int(rate), channels=int(channels),
                     source_path=str(path))


def to_mono(clip: AudioClip) -> AudioClip:
    """Mix interleaved channels down to mono by per-frame arithmetic mean."""
    if clip.channels == 1:
        return clip
    if len(clip.samples) % clip.channels != 0:
        raise ChannelMismatchError(
            f"{clip.source_path}: {len(clip.samples)} samples not divisible "
            f"by {clip.channels} channels"
        )
    mono = clip.samples.reshape(-1, clip.channels).mean(axis=1)
    return AudioClip(samples=mono, sample_rate=clip.sample_rate, channels=1,
                     source_path=clip.source_path)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Linear-interpolation resample of a mono clip.

    Output length is round(len * target/source); edge positions clamp to
    the last sample.  Identity when the rates already match.
    """
    if target_rate <= 0:
        raise InvalidRateError(f"target rate must be positive, got {target_rate}")
    if clip.channels != 1:
        raise ChannelMismatchError("resample expects a mono clip; run to_mono first")
    if clip.sample_rate == target_rate:
        return clip
    src_len = len(clip.samples)
    out_len = int(round(src_len * target_rate / clip.sample_rate))
    positions = np.arange(out_len) * (clip.sample_rate / target_rate)
    out = np.interp(positions, np.arange(src_len), clip.samples)
    return AudioClip(samples=out, sample_rate=int(target_rate), channels=1,
                     source_path=clip.source_path)


def write_wav_pcm16(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write a mono 16-bit PCM WAV; inverse of the 16-bit decode scaling."""
    ints = np.clip(np.round(np.asarray(samples, dtype=np.float64) * 32768.0),
                   -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, _FMT_PCM, 1, sample_rate,
                                    sample_rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)
