"""Binary checkpoint container and the full-pipeline bundle on top of it.

Container layout (all integers little-endian):

    magic "EMOC" | u32 version | u32 config-JSON length | config JSON
    | u32 tensor count | tensors | u32 CRC-32

Each tensor is: u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
then float32 row-major payload.  The CRC (zlib.crc32) covers every byte
after the magic.  Tensors are written sorted by name and the config JSON
with sorted keys, so identical contents produce identical files.  Writes
go through a temp file and os.replace, so a crash cannot leave a partial
checkpoint at the destination.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .cube import CubeCalibration
from .errors import (
    BadMagicError,
    ChecksumMismatchError,
    CheckpointError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .features import FeatureConfig, NormalizerStats
from .model import EmotionCNN, ModelConfig
from .pca import PcaModel

MAGIC = b"EMOC"
VERSION = 1


def save_tensors(path: str | Path, config: dict, tensors: dict[str, np.ndarray]) -> None:
    body = bytearray()
    body += struct.pack("<I", VERSION)
    config_bytes = json.dumps(config, sort_keys=True).encode("utf-8")
    body += struct.pack("<I", len(config_bytes))
    body += config_bytes
    body += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        name_bytes = name.encode("utf-8")
        if len(name_bytes) > 0xFFFF or arr.ndim > 0xFF:
            raise CheckpointError(f"tensor {name!r} exceeds container limits")
        body += struct.pack("<H", len(name_bytes))
        body += name_bytes
        body += struct.pack("<B", arr.ndim)
        for dim in arr.shape:
            body += struct.pack("<I", dim)
        body += arr.tobytes()
    crc = zlib.crc32(bytes(body)) & 0xFFFFFFFF
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(MAGIC + bytes(body) + struct.pack("<I", crc))
    os.replace(tmp, path)


def load_tensors(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 8:
        raise TruncatedFileError(f"{path}: too short to hold a checkpoint header")
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}")
    body = data[4:-4]
    version = struct.unpack_from("<I", body, 0)[0]
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported version {version}")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise ChecksumMismatchError(f"{path}: CRC mismatch")

    offset = 4

    def take(n: int, what: str) -> bytes:
        nonlocal offset
        if offset + n > len(body):
            raise TruncatedFileError(f"{path}: truncated while reading {what}")
        chunk = body[offset : offset + n]
        offset += n
        return chunk

    config_len = struct.unpack("<I", take(4, "config length"))[0]
    try:
        config = json.loads(take(config_len, "config").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: bad config JSON ({exc})") from None
    count = struct.unpack("<I", take(4, "tensor count"))[0]
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_len = struct.unpack("<H", take(2, "tensor name length"))[0]
        name = take(name_len, "tensor name").decode("utf-8")
        rank = take(1, "tensor rank")[0]
        dims = tuple(struct.unpack("<I", take(4, "tensor dim"))[0] for _ in range(rank))
        n_elems = 1
        for d in dims:
            n_elems *= d
        payload = take(4 * n_elems, f"tensor {name!r} payload")
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    if offset != len(body):
        raise CheckpointError(f"{path}: {len(body) - offset} unexpected trailing bytes")
    return config, tensors


BUNDLE_FORMAT = "emostress-bundle"


@dataclass
class PipelineBundle:
    """Everything a trained run needs at inference time."""

    feature_config: FeatureConfig
    model: EmotionCNN
    normalizer: NormalizerStats | None = None
    pca: PcaModel | None = None
    calibration: CubeCalibration | None = None


def _expected_param_names(cfg: ModelConfig) -> list[str]:
    names = []
    for i in range(len(cfg.conv_channels)):
        names += [f"conv{i}.kernels", f"conv{i}.bias"]
    return names + ["embed.weight", "embed.bias", "logits.weight", "logits.bias"]


def save_bundle(path: str | Path, bundle: PipelineBundle) -> None:
    config = {
        "format": BUNDLE_FORMAT,
        "feature": asdict(bundle.feature_config),
        "model": bundle.model.cfg.to_dict(),
    }
    tensors = dict(bundle.model.params)
    if bundle.normalizer is not None:
        tensors["norm.mean"] = bundle.normalizer.mean
        tensors["norm.std"] = bundle.normalizer.std
    if bundle.pca is not None:
        tensors["pca.mean"] = bundle.pca.mean
        tensors["pca.components"] = bundle.pca.components
        tensors["pca.eigenvalues"] = bundle.pca.eigenvalues
        tensors["pca.total_variance"] = np.array([bundle.pca.total_variance])
    if bundle.calibration is not None:
        tensors["cube.permutation"] = np.asarray(bundle.calibration.permutation, dtype=np.float64)
        tensors["cube.signs"] = np.asarray(bundle.calibration.signs, dtype=np.float64)
        tensors["cube.scale"] = np.array([bundle.calibration.scale])
        tensors["cube.residual"] = np.array([bundle.calibration.residual])
    save_tensors(path, config, tensors)


def _group(path, tensors: dict, names: tuple[str, ...]) -> dict[str, np.ndarray] | None:
    present = [n for n in names if n in tensors]
    if not present:
        return None
    if len(present) != len(names):
        missing = sorted(set(names) - set(present))
        raise CheckpointError(f"{path}: bundle group incomplete, missing {missing}")
    return {n: tensors[n] for n in names}


def load_bundle(path: str | Path) -> PipelineBundle:
    config, tensors = load_tensors(path)
    if config.get("format") != BUNDLE_FORMAT:
        raise CheckpointError(f"{path}: not a pipeline bundle")
    feature_fields = FeatureConfig.__dataclass_fields__
    feature_config = FeatureConfig(
        **{k: v for k, v in config.get("feature", {}).items() if k in feature_fields}
    )
    model_cfg = ModelConfig.from_dict(config.get("model", {}))
    params = {}
    for name in _expected_param_names(model_cfg):
        if name not in tensors:
            raise CheckpointError(f"{path}: bundle missing tensor {name!r}")
        params[name] = tensors[name]
    bundle = PipelineBundle(feature_config=feature_config, model=EmotionCNN(model_cfg, params))

    norm = _group(path, tensors, ("norm.mean", "norm.std"))
    if norm is not None:
        bundle.normalizer = NormalizerStats(
            mean=norm["norm.mean"].astype(np.float64),
            std=norm["norm.std"].astype(np.float64),
        )
    pca = _group(path, tensors, ("pca.mean", "pca.components", "pca.eigenvalues", "pca.total_variance"))
    if pca is not None:
        bundle.pca = PcaModel(
            mean=pca["pca.mean"].astype(np.float64),
            components=pca["pca.components"].astype(np.float64),
            eigenvalues=pca["pca.eigenvalues"].astype(np.float64),
            total_variance=float(pca["pca.total_variance"][0]),
        )
    cube = _group(path, tensors, ("cube.permutation", "cube.signs", "cube.scale", "cube.residual"))
    if cube is not None:
        bundle.calibration = CubeCalibration(
            permutation=tuple(int(v) for v in cube["cube.permutation"]),
            signs=tuple(int(v) for v in cube["cube.signs"]),
            scale=float(cube["cube.scale"][0]),
            residual=float(cube["cube.residual"][0]),
        )
    return bundle
