"""End-to-end run: corpus -> features -> CNN -> embeddings -> cube -> stress.

A run is driven by one RunConfig (JSON-loadable, with dotted-path
overrides) and a single root seed.  Stage seeds are derived from the root
by label, so changing one stage's stream never shifts another's.  All
numeric outputs are deterministic functions of (config, data): two runs
with the same inputs write byte-identical metrics.json and checkpoint
files.

Outputs under out_dir: manifest.csv, train_report.csv, metrics.json,
embeddings.csv, cube_points.csv, model.emoc.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import cube as cube_mod
from .audio import read_wav
from .checkpoint import PipelineBundle, save_bundle
from .cube import CubeCalibration, CubeEmotion, assess_stress, calibrate, map_to_cube, nearest_corner
from .datasets import Manifest, build_manifest, split_manifest, write_manifest_csv
from .errors import InvalidConfigError, MissingEmotionError
from .features import FeatureConfig, finalize_features, fit_normalizer, raw_feature_matrix
from .labels import class_code
from .model import (
    EmotionCNN,
    Metrics,
    ModelConfig,
    TrainReport,
    build_model,
    evaluate,
    predict_batch,
    train,
)
from .pca import PcaModel, fit_pca, project
from .rng import Rng, derive_seed

DEFAULT_LABEL_TO_CORNER = {e: c.name for e, c in cube_mod.DEFAULT_LABEL_TO_CORNER.items()}


@dataclass
class RunConfig:
    dataset_root: str = ""
    dataset_kind: str = "synth"
    out_dir: str = "run_out"
    seed: int = 0
    train_count: int | None = None
    train_fraction: float = 0.8
    stratify: bool = True
    eval_each_epoch: bool = False
    tau: float = 1.0
    theta: float | None = None
    label_to_corner: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_LABEL_TO_CORNER))
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    def to_dict(self) -> dict:
        from dataclasses import asdict

        data = asdict(self)
        data["model"] = self.model.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise InvalidConfigError(f"unknown config keys: {sorted(extra)}")
        plain = {k: v for k, v in data.items() if k not in ("feature", "model")}
        cfg = cls(**plain)
        if "feature" in data:
            feature_fields = FeatureConfig.__dataclass_fields__
            bad = set(data["feature"]) - set(feature_fields)
            if bad:
                raise InvalidConfigError(f"unknown feature config keys: {sorted(bad)}")
            cfg = replace(cfg, feature=FeatureConfig(**data["feature"]))
        if "model" in data:
            bad = set(data["model"]) - set(ModelConfig.__dataclass_fields__)
            if bad:
                raise InvalidConfigError(f"unknown model config keys: {sorted(bad)}")
            cfg = replace(cfg, model=ModelConfig.from_dict(data["model"]))
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InvalidConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def corner_map(self) -> dict[str, CubeEmotion]:
        out = {}
        for emotion, corner_name in self.label_to_corner.items():
            try:
                out[emotion] = CubeEmotion[str(corner_name).upper()]
            except KeyError:
                raise InvalidConfigError(
                    f"unknown cube corner {corner_name!r} for emotion {emotion!r}"
                ) from None
        return out


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.path=json_value`` strings to a config dict in place."""
    for item in overrides:
        key, sep, raw_value = item.partition("=")
        if not sep or not key:
            raise InvalidConfigError(f"override {item!r} must look like path=value")
        try:
            value = json.loads(raw_value)
        except json.JSONDecodeError:
            value = raw_value
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise InvalidConfigError(f"override {item!r} descends into a non-object")
        node[parts[-1]] = value
    return data


@dataclass
class PipelineReport:
    out_dir: Path
    n_train: int
    n_test: int
    train_report: TrainReport
    test_metrics: Metrics
    variance_ratios: np.ndarray | None
    calibration: CubeCalibration | None
    stress_by_emotion: dict[str, dict]
    files: dict[str, Path]


def _float_csv(v: float) -> str:
    return repr(float(v))


def run_pipeline(cfg: RunConfig, with_cube: bool = True) -> PipelineReport:
    cfg.feature.validate()
    cfg.model.validate()
    if cfg.tau <= 0:
        raise InvalidConfigError(f"tau must be positive, got {cfg.tau}")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root = Path(cfg.dataset_root)

    manifest = build_manifest(root, cfg.dataset_kind)
    manifest = split_manifest(
        manifest,
        seed=derive_seed(cfg.seed, "split"),
        train_count=cfg.train_count,
        train_fraction=cfg.train_fraction,
        stratify=cfg.stratify,
    )
    files = {"manifest": out_dir / "manifest.csv"}
    write_manifest_csv(files["manifest"], manifest)

    corner_map = cfg.corner_map()
    if with_cube:
        # fail before the expensive stages if calibration cannot proceed
        train_emotions = {r.emotion for r in manifest.records if r.split == "train"}
        for emotion in sorted(corner_map):
            if emotion not in train_emotions:
                raise MissingEmotionError(
                    f"calibration emotion {emotion!r} has no training clips"
                )

    raws = [raw_feature_matrix(read_wav(root / r.path), cfg.feature) for r in manifest.records]
    train_idx = [i for i, r in enumerate(manifest.records) if r.split == "train"]
    test_idx = [i for i, r in enumerate(manifest.records) if r.split == "test"]
    stats = fit_normalizer([raws[i] for i in train_idx])
    feats = [finalize_features(raw, cfg.feature, stats) for raw in raws]
    labels = [class_code(r.emotion, cfg.dataset_kind) for r in manifest.records]

    model_cfg = replace(cfg.model, seed=derive_seed(cfg.seed, "train"))
    model = build_model(model_cfg, Rng(derive_seed(cfg.seed, "init")))
    train_set = [(feats[i], labels[i]) for i in train_idx]
    test_set = [(feats[i], labels[i]) for i in test_idx]
    report = train(model, train_set, holdout=test_set if cfg.eval_each_epoch else None)
    files["train_report"] = out_dir / "train_report.csv"
    files["train_report"].write_text("\n".join(report.csv_lines()) + "\n")

    test_metrics = evaluate(model, test_set)
    train_metrics = evaluate(model, train_set)

    if not with_cube:
        files["checkpoint"] = out_dir / "model.emoc"
        save_bundle(
            files["checkpoint"],
            PipelineBundle(feature_config=cfg.feature, model=model, normalizer=stats),
        )
        metrics_doc = {
            "n_train": len(train_idx),
            "n_test": len(test_idx),
            "train": train_metrics.to_dict(),
            "test": test_metrics.to_dict(),
        }
        files["metrics"] = out_dir / "metrics.json"
        files["metrics"].write_text(json.dumps(metrics_doc, sort_keys=True, indent=2) + "\n")
        return PipelineReport(
            out_dir=out_dir,
            n_train=len(train_idx),
            n_test=len(test_idx),
            train_report=report,
            test_metrics=test_metrics,
            variance_ratios=None,
            calibration=None,
            stress_by_emotion={},
            files=files,
        )

    _, embeddings = predict_batch(model, feats)
    embeddings = embeddings.astype(np.float64)
    pca = fit_pca(embeddings[train_idx], n_components=3)
    projected = project(pca, embeddings)

    centroids: dict[CubeEmotion, np.ndarray] = {}
    for emotion, corner in sorted(corner_map.items()):
        members = [i for i in train_idx if manifest.records[i].emotion == emotion]
        if not members:
            raise MissingEmotionError(
                f"calibration emotion {emotion!r} has no training clips"
            )
        centroids[corner] = projected[members].mean(axis=0)
    calibration = calibrate(centroids)
    mapped = map_to_cube(calibration, projected)

    files["embeddings"] = out_dir / "embeddings.csv"
    with open(files["embeddings"], "w") as fh:
        dims = embeddings.shape[1]
        fh.write("path,emotion,split," + ",".join(f"e{j:02d}" for j in range(dims)) + "\n")
        for i, r in enumerate(manifest.records):
            row = ",".join(_float_csv(v) for v in embeddings[i])
            fh.write(f"{r.path},{r.emotion},{r.split},{row}\n")

    files["cube_points"] = out_dir / "cube_points.csv"
    per_emotion_points: dict[str, list[np.ndarray]] = {}
    per_emotion_scores: dict[str, list[float]] = {}
    per_emotion_stressed: dict[str, int] = {}
    with open(files["cube_points"], "w") as fh:
        fh.write(
            "path,emotion,split,dopamine,noradrenaline,serotonin,"
            "nearest,distance_to_distress,stress_score,is_stressed\n"
        )
        for i, r in enumerate(manifest.records):
            res = assess_stress(mapped[i], tau=cfg.tau, theta=cfg.theta)
            coords = ",".join(_float_csv(v) for v in mapped[i])
            fh.write(
                f"{r.path},{r.emotion},{r.split},{coords},{res.nearest.name},"
                f"{_float_csv(res.distance_to_distress)},{_float_csv(res.score)},"
                f"{int(res.is_stressed)}\n"
            )
            per_emotion_points.setdefault(r.emotion, []).append(mapped[i])
            per_emotion_scores.setdefault(r.emotion, []).append(res.score)
            per_emotion_stressed[r.emotion] = per_emotion_stressed.get(r.emotion, 0) + int(
                res.is_stressed
            )

    stress_by_emotion = {}
    for emotion in sorted(per_emotion_points):
        points = np.stack(per_emotion_points[emotion])
        mean_point = points.mean(axis=0)
        mean_nearest, _, _ = nearest_corner(mean_point)
        stress_by_emotion[emotion] = {
            "n": len(points),
            "mean_point": [float(v) for v in mean_point],
            "mean_nearest": mean_nearest.name,
            "mean_score": float(np.mean(per_emotion_scores[emotion])),
            "stressed_fraction": per_emotion_stressed[emotion] / len(points),
        }

    files["checkpoint"] = out_dir / "model.emoc"
    save_bundle(
        files["checkpoint"],
        PipelineBundle(
            feature_config=cfg.feature,
            model=model,
            normalizer=stats,
            pca=pca,
            calibration=calibration,
        ),
    )

    variance_ratios = pca.explained_variance_ratios()
    metrics_doc = {
        "n_train": len(train_idx),
        "n_test": len(test_idx),
        "train": train_metrics.to_dict(),
        "test": test_metrics.to_dict(),
        "pca": {
            "explained_variance_ratios": [float(v) for v in variance_ratios],
            "eigenvalues": [float(v) for v in pca.eigenvalues],
        },
        "cube": {
            "permutation": list(calibration.permutation),
            "signs": list(calibration.signs),
            "scale": calibration.scale,
            "residual": calibration.residual,
            "tau": cfg.tau,
            "theta": cfg.theta,
        },
        "stress_by_emotion": stress_by_emotion,
    }
    files["metrics"] = out_dir / "metrics.json"
    files["metrics"].write_text(json.dumps(metrics_doc, sort_keys=True, indent=2) + "\n")

    return PipelineReport(
        out_dir=out_dir,
        n_train=len(train_idx),
        n_test=len(test_idx),
        train_report=report,
        test_metrics=test_metrics,
        variance_ratios=variance_ratios,
        calibration=calibration,
        stress_by_emotion=stress_by_emotion,
        files=files,
    )


def emit_report(report: PipelineReport) -> str:
    lines = [
        f"clips: {report.n_train} train / {report.n_test} test",
        f"final train accuracy: {report.train_report.final_train_accuracy():.4f}",
        f"test accuracy: {report.test_metrics.categorical_accuracy:.4f}",
    ]
    if report.variance_ratios is not None:
        lines.append(
            "explained variance ratios: "
            + ", ".join(f"{v:.4f}" for v in report.variance_ratios)
        )
    if report.calibration is not None:
        lines.append(
            f"calibration: perm={report.calibration.permutation} "
            f"signs={report.calibration.signs} residual={report.calibration.residual:.4f}"
        )
    for emotion, row in report.stress_by_emotion.items():
        lines.append(
            f"  {emotion}: mean_score={row['mean_score']:.4f} "
            f"stressed={row['stressed_fraction']:.2f} nearest(mean)={row['mean_nearest']}"
        )
    lines.append(f"outputs in {report.out_dir}")
    return "\n".join(lines)
