"""Command-line front end.

Subcommands cover the full run (``pipeline``) plus the individual stages:
``synth`` writes a synthetic corpus, ``features`` extracts feature
matrices, ``train`` fits the CNN only, ``eval`` scores a checkpoint on a
corpus, ``embed`` prints clip embeddings, ``cube-fit`` recalibrates the
cube mapping of an existing checkpoint, and ``stress`` scores wav files.

Exit codes: 0 success, 1 internal error, 2 usage or config error,
3 dataset error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .audio import read_wav
from .checkpoint import PipelineBundle, load_bundle, save_bundle
from .cube import CubeEmotion, assess_stress, calibrate, map_to_cube
from .datasets import build_manifest, read_manifest_csv
from .errors import (
    ConfigError,
    DatasetError,
    EmoStressError,
    InvalidConfigError,
    MissingEmotionError,
)
from .features import extract_features, save_feature_cache
from .labels import class_code
from .model import evaluate, forward_with_embedding, predict_batch
from .pca import project
from .pipeline import (
    DEFAULT_LABEL_TO_CORNER,
    RunConfig,
    apply_overrides,
    emit_report,
    run_pipeline,
)
from .synth import generate_corpus


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run config JSON file")
    parser.add_argument("--dataset-root", help="corpus directory")
    parser.add_argument("--dataset-kind", choices=("emodb", "savee", "synth"))
    parser.add_argument("--out", help="output directory for run artifacts")
    parser.add_argument("--seed", type=int, help="root seed")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="dotted config override, e.g. model.epochs=40 (repeatable)",
    )


def _run_config(args) -> RunConfig:
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InvalidConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InvalidConfigError(f"{args.config}: config must be a JSON object")
    else:
        data = {}
    if args.dataset_root:
        data["dataset_root"] = args.dataset_root
    if args.dataset_kind:
        data["dataset_kind"] = args.dataset_kind
    if args.out:
        data["out_dir"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    apply_overrides(data, args.set)
    if not data.get("dataset_root"):
        raise InvalidConfigError("dataset_root is required (--dataset-root or config file)")
    return RunConfig.from_dict(data)


def _load_inference_bundle(path: str, need_cube: bool) -> PipelineBundle:
    bundle = load_bundle(path)
    if bundle.normalizer is None:
        raise InvalidConfigError(f"{path}: checkpoint has no feature normalizer")
    if need_cube and (bundle.pca is None or bundle.calibration is None):
        raise InvalidConfigError(
            f"{path}: checkpoint lacks PCA or cube calibration; run the full pipeline"
        )
    return bundle


def _cmd_pipeline(args) -> int:
    report = run_pipeline(_run_config(args))
    print(emit_report(report))
    return 0


def _cmd_train(args) -> int:
    report = run_pipeline(_run_config(args), with_cube=False)
    print(emit_report(report))
    return 0


def _cmd_synth(args) -> int:
    paths = generate_corpus(args.out, clips_per_class=args.clips_per_class, seed=args.seed)
    print(f"wrote {len(paths)} clips under {args.out}")
    return 0


def _cmd_features(args) -> int:
    if args.checkpoint:
        bundle = _load_inference_bundle(args.checkpoint, need_cube=False)
        cfg, stats = bundle.feature_config, bundle.normalizer
    else:
        from .features import FeatureConfig

        cfg, stats = FeatureConfig(), None
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for wav in args.inputs:
        feat = extract_features(read_wav(wav), cfg, stats)
        out = out_dir / (Path(wav).stem + ".emof")
        save_feature_cache(out, feat.values)
        rows, cols = feat.values.shape
        print(f"{wav} -> {out} ({rows}x{cols})")
    return 0


def _manifest_for_eval(args):
    if args.manifest:
        manifest = read_manifest_csv(args.manifest)
        records = manifest.subset(args.split) if args.split != "all" else manifest.records
        if not records:
            raise DatasetError(f"{args.manifest}: no clips in split {args.split!r}")
        return manifest.kind, records
    if not args.dataset_root or not args.dataset_kind:
        raise InvalidConfigError("need --manifest or both --dataset-root and --dataset-kind")
    manifest = build_manifest(args.dataset_root, args.dataset_kind)
    return manifest.kind, manifest.records


def _cmd_eval(args) -> int:
    bundle = _load_inference_bundle(args.checkpoint, need_cube=False)
    kind, records = _manifest_for_eval(args)
    root = Path(args.dataset_root) if args.dataset_root else Path(".")
    pairs = []
    for r in records:
        feat = extract_features(read_wav(root / r.path), bundle.feature_config, bundle.normalizer)
        pairs.append((feat, class_code(r.emotion, kind)))
    metrics = evaluate(bundle.model, pairs)
    print(f"clips: {len(pairs)}")
    print(f"accuracy: {metrics.categorical_accuracy:.4f}")
    print(f"mean loss: {metrics.loss:.4f}")
    for code, (p, r_) in enumerate(zip(metrics.precision, metrics.recall)):
        print(f"class {code}: precision={p:.4f} recall={r_:.4f}")
    return 0


def _cmd_embed(args) -> int:
    bundle = _load_inference_bundle(args.checkpoint, need_cube=False)
    rows = []
    for wav in args.inputs:
        feat = extract_features(read_wav(wav), bundle.feature_config, bundle.normalizer)
        _, emb = forward_with_embedding(bundle.model, feat)
        rows.append((wav, emb))
    dims = len(rows[0][1])
    lines = ["path," + ",".join(f"e{j:02d}" for j in range(dims))]
    lines += [f"{wav}," + ",".join(repr(float(v)) for v in emb) for wav, emb in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(rows)} embeddings to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _parse_corner_map(items: list[str]) -> dict[str, str]:
    if not items:
        return dict(DEFAULT_LABEL_TO_CORNER)
    mapping = {}
    for item in items:
        emotion, sep, corner = item.partition("=")
        if not sep or not emotion or not corner:
            raise InvalidConfigError(f"--map {item!r} must look like emotion=CORNER")
        mapping[emotion] = corner
    return mapping


def _cmd_cube_fit(args) -> int:
    bundle = _load_inference_bundle(args.checkpoint, need_cube=False)
    if bundle.pca is None:
        raise InvalidConfigError(f"{args.checkpoint}: checkpoint has no PCA section")
    manifest = build_manifest(args.dataset_root, args.dataset_kind)
    mapping = _parse_corner_map(args.map)
    corner_map = {}
    for emotion, corner_name in mapping.items():
        try:
            corner_map[emotion] = CubeEmotion[corner_name.upper()]
        except KeyError:
            raise InvalidConfigError(f"unknown cube corner {corner_name!r}") from None

    root = Path(args.dataset_root)
    feats_by_emotion: dict[str, list] = {e: [] for e in corner_map}
    for r in manifest.records:
        if r.emotion in feats_by_emotion:
            feats_by_emotion[r.emotion].append(
                extract_features(read_wav(root / r.path), bundle.feature_config, bundle.normalizer)
            )
    centroids = {}
    for emotion, corner in sorted(corner_map.items()):
        feats = feats_by_emotion[emotion]
        if not feats:
            raise MissingEmotionError(f"calibration emotion {emotion!r} has no clips")
        _, embs = predict_batch(bundle.model, feats)
        centroids[corner] = project(bundle.pca, embs.astype(np.float64)).mean(axis=0)
    bundle.calibration = calibrate(centroids)
    out = args.out or args.checkpoint
    save_bundle(out, bundle)
    cal = bundle.calibration
    print(
        f"calibration: perm={cal.permutation} signs={cal.signs} "
        f"residual={cal.residual:.6f} -> {out}"
    )
    return 0


def _cmd_stress(args) -> int:
    bundle = _load_inference_bundle(args.checkpoint, need_cube=True)
    for wav in args.inputs:
        feat = extract_features(read_wav(wav), bundle.feature_config, bundle.normalizer)
        _, emb = forward_with_embedding(bundle.model, feat)
        point = map_to_cube(bundle.calibration, project(bundle.pca, emb.astype(np.float64)))
        res = assess_stress(point, tau=args.tau, theta=args.theta)
        print(
            f"{wav}\tstress_score={res.score:.6f}"
            f"\tis_stressed={'yes' if res.is_stressed else 'no'}"
            f"\tnearest={res.nearest.name}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emostress",
        description="Speech emotion embeddings and cube-based stress scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="full run: features, training, cube, stress")
    _add_run_options(p)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("train", help="train the CNN and save a model checkpoint")
    _add_run_options(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("synth", help="generate the synthetic 7-class corpus")
    p.add_argument("--out", required=True, help="corpus root to create")
    p.add_argument("--clips-per-class", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("features", help="extract feature matrices from wav files")
    p.add_argument("inputs", nargs="+", metavar="WAV")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--checkpoint", help="use this checkpoint's feature config and normalizer")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset-root")
    p.add_argument("--dataset-kind", choices=("emodb", "savee", "synth"))
    p.add_argument("--manifest", help="manifest CSV with split assignments")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("embed", help="print clip embeddings as CSV")
    p.add_argument("inputs", nargs="+", metavar="WAV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("cube-fit", help="recalibrate the cube mapping of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset-root", required=True)
    p.add_argument("--dataset-kind", required=True, choices=("emodb", "savee", "synth"))
    p.add_argument(
        "--map",
        action="append",
        default=[],
        metavar="EMOTION=CORNER",
        help="calibration pair, e.g. angry=ANGER (repeatable)",
    )
    p.add_argument("--out", help="write the updated checkpoint here")
    p.set_defaults(func=_cmd_cube_fit)

    p = sub.add_parser("stress", help="score wav files for stress")
    p.add_argument("inputs", nargs="+", metavar="WAV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=None)
    p.set_defaults(func=_cmd_stress)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EmoStressError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
