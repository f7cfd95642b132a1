"""Shared fixtures and raw WAV byte builders.

The WAV builders assemble RIFF bytes by hand so decoder tests never rely
on the package's own writer.
"""

import struct

import numpy as np
import pytest

from emostress.synth import generate_corpus


def riff(chunks) -> bytes:
    """RIFF/WAVE container from (chunk id, body) pairs, word-aligned."""
    payload = b""
    for cid, body in chunks:
        payload += cid + struct.pack("<I", len(body)) + body
        if len(body) & 1:
            payload += b"\x00"
    return b"RIFF" + struct.pack("<I", 4 + len(payload)) + b"WAVE" + payload


def fmt_body(code, channels, rate, bits, extension=b"") -> bytes:
    block_align = max(channels * bits // 8, 1)
    return struct.pack(
        "<HHIIHH", code, channels, rate, rate * block_align, block_align, bits
    ) + extension


def build_wav(data, *, code=1, channels=1, rate=16000, bits=16,
              extension=b"", pre_chunks=(), post_chunks=()) -> bytes:
    chunks = list(pre_chunks) + [(b"fmt ", fmt_body(code, channels, rate, bits, extension))]
    chunks += [(b"data", data)] + list(post_chunks)
    return riff(chunks)


def extensible_extension(sub_code, bits) -> bytes:
    guid_tail = b"\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"
    return struct.pack("<HHI", 22, bits, 0) + struct.pack("<H", sub_code) + b"\x00\x00" + guid_tail


def pcm8_bytes(values) -> bytes:
    return np.asarray(values, dtype=np.uint8).tobytes()


def pcm16_bytes(values) -> bytes:
    return np.asarray(values, dtype="<i2").tobytes()


def pcm24_bytes(values) -> bytes:
    out = bytearray()
    for v in values:
        out += (int(v) & 0xFFFFFF).to_bytes(3, "little")
    return bytes(out)


def pcm32_bytes(values) -> bytes:
    return np.asarray(values, dtype="<i4").tobytes()


def float32_bytes(values) -> bytes:
    return np.asarray(values, dtype="<f4").tobytes()


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """3 clips per class: enough for split, training smoke, and the CLI."""
    root = tmp_path_factory.mktemp("synth_small")
    generate_corpus(root, clips_per_class=3, seed=101)
    return root


@pytest.fixture(scope="session")
def full_corpus(tmp_path_factory):
    """30 clips per class (210 total), the end-to-end corpus size."""
    root = tmp_path_factory.mktemp("synth_full")
    generate_corpus(root, clips_per_class=30, seed=2024)
    return root
