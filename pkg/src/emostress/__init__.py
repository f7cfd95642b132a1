"""Speech emotion embeddings and cube-based stress scoring.

The pipeline decodes WAV clips, extracts 39-dimensional MFCC feature
frames fixed to 199 rows, trains a small from-scratch CNN on 7 emotion
classes, reduces its 64-d embeddings to 3 principal components, aligns
those to the 8-corner emotion cube, and scores stress as softmin
proximity to the Distress corner, with no stress labels involved.
"""

from .audio import AudioClip, read_wav, resample, to_mono, write_wav_pcm16
from .checkpoint import PipelineBundle, load_bundle, load_tensors, save_bundle, save_tensors
from .cube import (
    CORNERS,
    CubeCalibration,
    CubeEmotion,
    NeurotransmitterLevels,
    StressResult,
    assess_stress,
    calibrate,
    corner_coordinates,
    corner_weights,
    map_to_cube,
    nearest_corner,
    stress_score,
)
from .datasets import (
    ClipRecord,
    Manifest,
    build_manifest,
    read_manifest_csv,
    split_manifest,
    write_manifest_csv,
)
from .errors import ConfigError, DatasetError, EmoStressError
from .features import (
    FeatureConfig,
    FeatureMatrix,
    NormalizerStats,
    apply_normalizer,
    extract_features,
    fit_normalizer,
    load_feature_cache,
    save_feature_cache,
)
from .labels import CLASS_NAMES, EmotionLabel, class_code, class_names_for
from .model import (
    EmotionCNN,
    Metrics,
    ModelConfig,
    TrainReport,
    build_model,
    evaluate,
    forward_with_embedding,
    predict_batch,
    train,
)
from .pca import PcaModel, fit_pca, project
from .pipeline import PipelineReport, RunConfig, emit_report, run_pipeline
from .rng import Rng, derive_seed
from .synth import generate_corpus

__version__ = "1.0.0"

__all__ = [
    "AudioClip",
    "CLASS_NAMES",
    "CORNERS",
    "ClipRecord",
    "ConfigError",
    "CubeCalibration",
    "CubeEmotion",
    "DatasetError",
    "EmoStressError",
    "EmotionCNN",
    "EmotionLabel",
    "FeatureConfig",
    "FeatureMatrix",
    "Manifest",
    "Metrics",
    "ModelConfig",
    "NeurotransmitterLevels",
    "NormalizerStats",
    "PcaModel",
    "PipelineBundle",
    "PipelineReport",
    "Rng",
    "RunConfig",
    "StressResult",
    "TrainReport",
    "apply_normalizer",
    "assess_stress",
    "build_manifest",
    "build_model",
    "calibrate",
    "class_code",
    "class_names_for",
    "corner_coordinates",
    "corner_weights",
    "derive_seed",
    "emit_report",
    "evaluate",
    "extract_features",
    "fit_normalizer",
    "fit_pca",
    "forward_with_embedding",
    "generate_corpus",
    "load_bundle",
    "load_feature_cache",
    "load_tensors",
    "map_to_cube",
    "nearest_corner",
    "predict_batch",
    "project",
    "read_manifest_csv",
    "read_wav",
    "resample",
    "run_pipeline",
    "save_bundle",
    "save_feature_cache",
    "save_tensors",
    "split_manifest",
    "stress_score",
    "to_mono",
    "train",
    "write_manifest_csv",
    "write_wav_pcm16",
    "__version__",
]
