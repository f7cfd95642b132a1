"""The 7-class emotion CNN: assembly, training, and evaluation.

Layer plan: conv 3x3 same-padding + ReLU + 2x2 max pool per conv block,
then flatten, inverted dropout (training only), a dense embedding layer
with ReLU whose post-activation output is the clip embedding, and a final
dense layer producing class logits.  With the default 1x199x39 input and
16/32/32 channels the flatten width is 3072 and the network has 211,175
parameters.

Training is plain mini-batch Adam on mean cross-entropy with a seeded
shuffle per epoch; identical seed, data, and config reproduce the loss
trajectory bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import (
    EmptyDatasetError,
    InvalidConfigError,
    LabelOutOfRangeError,
    ShapeMismatchError,
)
from .features import FeatureMatrix
from .kernels import AdamState
from .rng import Rng


@dataclass
class ModelConfig:
    in_channels: int = 1
    input_height: int = 199
    input_width: int = 39
    conv_channels: tuple = (16, 32, 32)
    embedding_dim: int = 64
    n_classes: int = 7
    dropout: float = 0.3
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    # holdout-accuracy early stop; stays off for reproducible default runs
    early_stop_patience: int | None = None

    def validate(self) -> None:
        if not self.conv_channels:
            raise InvalidConfigError("at least one conv block is required")
        if self.embedding_dim < 1 or self.n_classes < 2:
            raise InvalidConfigError("embedding_dim >= 1 and n_classes >= 2 required")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidConfigError("dropout must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0 or self.lr <= 0:
            raise InvalidConfigError("batch_size >= 1, epochs >= 0, lr > 0 required")

    def spatial_plan(self) -> list[tuple[int, int]]:
        """(H, W) after each conv+pool block; validates pooling feasibility."""
        h, w = self.input_height, self.input_width
        plan = []
        for i in range(len(self.conv_channels)):
            if h < 2 or w < 2:
                raise InvalidConfigError(f"spatial size {h}x{w} too small to pool at block {i}")
            h, w = h // 2, w // 2
            plan.append((h, w))
        return plan

    @property
    def flatten_width(self) -> int:
        h, w = self.spatial_plan()[-1]
        return self.conv_channels[-1] * h * w

    def to_dict(self) -> dict:
        return {
            "in_channels": self.in_channels,
            "input_height": self.input_height,
            "input_width": self.input_width,
            "conv_channels": list(self.conv_channels),
            "embedding_dim": self.embedding_dim,
            "n_classes": self.n_classes,
            "dropout": self.dropout,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "early_stop_patience": self.early_stop_patience,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        cfg = cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})
        return replace(cfg, conv_channels=tuple(cfg.conv_channels))


class EmotionCNN:
    """Parameter container plus forward/backward over the layer stack."""

    def __init__(self, cfg: ModelConfig, params: dict[str, np.ndarray]):
        self.cfg = cfg
        self.params = params

    def parameter_names(self) -> list[str]:
        return list(self.params.keys())

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def forward_batch(self, x: np.ndarray, dropout_mask: np.ndarray | None = None):
        """x (N,C,H,W) -> (logits (N,K), embeddings (N,E), cache)."""
        caches = []
        for i in range(len(self.cfg.conv_channels)):
            x, conv_cache = kernels.conv2d_batch(
                x, self.params[f"conv{i}.kernels"], self.params[f"conv{i}.bias"], "same"
            )
            x, relu_cache = kernels.relu(x)
            x, pool_cache = kernels.maxpool2x2_batch(x)
            caches.append((conv_cache, relu_cache, pool_cache))

        flat_shape = x.shape
        flat = x.reshape(len(x), -1)
        if dropout_mask is not None:
            flat = flat * dropout_mask

        pre_emb, emb_dense_cache = kernels.dense_batch(
            flat, self.params["embed.weight"], self.params["embed.bias"]
        )
        emb, emb_relu_cache = kernels.relu(pre_emb)
        logits, logits_cache = kernels.dense_batch(
            emb, self.params["logits.weight"], self.params["logits.bias"]
        )
        cache = (caches, flat_shape, dropout_mask, emb_dense_cache, emb_relu_cache, logits_cache)
        return logits, emb, cache

    def backward_batch(self, dlogits: np.ndarray, cache, return_input_grad: bool = False):
        caches, flat_shape, dropout_mask, emb_dense_cache, emb_relu_cache, logits_cache = cache
        grads: dict[str, np.ndarray] = {}

        demb, grads["logits.weight"], grads["logits.bias"] = kernels.dense_batch_backward(
            dlogits, logits_cache
        )
        dpre_emb = kernels.relu_backward(demb, emb_relu_cache)
        dflat, grads["embed.weight"], grads["embed.bias"] = kernels.dense_batch_backward(
            dpre_emb, emb_dense_cache
        )
        if dropout_mask is not None:
            dflat = dflat * dropout_mask
        dx = dflat.reshape(flat_shape)

        for i in reversed(range(len(self.cfg.conv_channels))):
            conv_cache, relu_cache, pool_cache = caches[i]
            dx = kernels.maxpool2x2_batch_backward(dx, pool_cache)
            dx = kernels.relu_backward(dx, relu_cache)
            dx, grads[f"conv{i}.kernels"], grads[f"conv{i}.bias"] = kernels.conv2d_batch_backward(
                dx, conv_cache
            )
        if return_input_grad:
            return grads, dx
        return grads


def build_model(cfg: ModelConfig, rng: Rng, dtype=np.float32) -> EmotionCNN:
    """He-initialized model; biases start at zero."""
    cfg.validate()
    cfg.spatial_plan()
    params: dict[str, np.ndarray] = {}
    in_ch = cfg.in_channels
    for i, out_ch in enumerate(cfg.conv_channels):
        shape = (out_ch, in_ch, kernels.KERNEL_SIZE, kernels.KERNEL_SIZE)
        params[f"conv{i}.kernels"] = kernels.he_init(shape, rng).astype(dtype)
        params[f"conv{i}.bias"] = np.zeros(out_ch, dtype=dtype)
        in_ch = out_ch
    params["embed.weight"] = kernels.he_init((cfg.embedding_dim, cfg.flatten_width), rng).astype(dtype)
    params["embed.bias"] = np.zeros(cfg.embedding_dim, dtype=dtype)
    params["logits.weight"] = kernels.he_init((cfg.n_classes, cfg.embedding_dim), rng).astype(dtype)
    params["logits.bias"] = np.zeros(cfg.n_classes, dtype=dtype)
    return EmotionCNN(cfg, params)


def _feature_values(feat) -> np.ndarray:
    return feat.values if isinstance(feat, FeatureMatrix) else np.asarray(feat)


def forward_with_embedding(model: EmotionCNN, feat) -> tuple[np.ndarray, np.ndarray]:
    """Logits and the post-ReLU embedding for one feature matrix."""
    values = _feature_values(feat)
    cfg = model.cfg
    if values.shape != (cfg.input_height, cfg.input_width):
        raise ShapeMismatchError(
            f"feature shape {values.shape} != expected {(cfg.input_height, cfg.input_width)}"
        )
    dtype = model.params["embed.weight"].dtype
    x = values.astype(dtype)[None, None]
    logits, emb, _ = model.forward_batch(x)
    return logits[0], emb[0]


def _stack_dataset(model: EmotionCNN, labelled_set) -> tuple[np.ndarray, np.ndarray]:
    cfg = model.cfg
    dtype = model.params["embed.weight"].dtype
    xs, ys = [], []
    for feat, label in labelled_set:
        values = _feature_values(feat)
        if values.shape != (cfg.input_height, cfg.input_width):
            raise ShapeMismatchError(f"feature shape {values.shape} unexpected")
        xs.append(values.astype(dtype))
        ys.append(int(label))
    if not xs:
        raise EmptyDatasetError("training set is empty")
    x = np.stack(xs)[:, None]
    y = np.asarray(ys, dtype=np.int64)
    if y.min() < 0 or y.max() >= cfg.n_classes:
        raise LabelOutOfRangeError(f"labels must lie in [0, {cfg.n_classes})")
    return x, y


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    holdout_acc: float | None = None


@dataclass
class TrainReport:
    """Per-epoch stats; loss/accuracy come from the training forward passes
    (dropout active), so they lag a clean evaluation slightly."""

    rows: list[EpochStats] = field(default_factory=list)

    def final_train_accuracy(self) -> float:
        return self.rows[-1].train_acc if self.rows else 0.0

    def csv_lines(self) -> list[str]:
        with_holdout = any(r.holdout_acc is not None for r in self.rows)
        header = "epoch,train_loss,train_acc" + (",holdout_acc" if with_holdout else "")
        lines = [header]
        for r in self.rows:
            line = f"{r.epoch},{r.train_loss!r},{r.train_acc!r}"
            if with_holdout:
                line += f",{'' if r.holdout_acc is None else repr(r.holdout_acc)}"
            lines.append(line)
        return lines


def train(model: EmotionCNN, train_set, cfg: ModelConfig | None = None, holdout=None) -> TrainReport:
    """Mini-batch Adam training; deterministic given (seed, data, config).

    The last partial batch is kept.  When `holdout` is given its accuracy
    is reported per epoch, and with cfg.early_stop_patience set, training
    stops after that many epochs without improvement.
    """
    cfg = cfg or model.cfg
    cfg.validate()
    x_all, y_all = _stack_dataset(model, train_set)
    if len(x_all) == 0:
        raise EmptyDatasetError("training set is empty")

    rng = Rng(cfg.seed)
    states = {name: AdamState.for_param(p) for name, p in model.params.items()}
    report = TrainReport()
    best_holdout, since_best = -1.0, 0

    n = len(x_all)
    for epoch in range(cfg.epochs):
        order = list(range(n))
        rng.shuffle(order)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_all[idx], y_all[idx]
            mask = None
            if cfg.dropout > 0.0:
                keep = 1.0 - cfg.dropout
                draws = rng.uniform(len(idx) * cfg.flatten_width)
                mask = (draws < keep).reshape(len(idx), cfg.flatten_width)
                mask = (mask / keep).astype(xb.dtype)
            logits, _, cache = model.forward_batch(xb, dropout_mask=mask)
            losses, dlogits = kernels.softmax_cross_entropy_batch(logits, yb)
            loss_sum += float(losses.sum())
            correct += int((logits.argmax(axis=1) == yb).sum())
            grads = model.backward_batch(dlogits / len(idx), cache)
            for name in model.params:
                kernels.adam_step(model.params[name], grads[name], states[name], lr=cfg.lr)

        stats = EpochStats(epoch=epoch, train_loss=loss_sum / n, train_acc=correct / n)
        if holdout is not None:
            stats.holdout_acc = evaluate(model, holdout).categorical_accuracy
            if cfg.early_stop_patience is not None:
                if stats.holdout_acc > best_holdout:
                    best_holdout, since_best = stats.holdout_acc, 0
                else:
                    since_best += 1
        report.rows.append(stats)
        if cfg.early_stop_patience is not None and since_best >= cfg.early_stop_patience:
            break
    return report


@dataclass
class Metrics:
    categorical_accuracy: float
    confusion: np.ndarray      # rows = true class, cols = predicted
    precision: np.ndarray
    recall: np.ndarray
    loss: float

    def to_dict(self) -> dict:
        return {
            "categorical_accuracy": self.categorical_accuracy,
            "confusion": self.confusion.tolist(),
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "loss": self.loss,
        }


def predict_batch(model: EmotionCNN, feats, chunk: int = 128):
    """Logits and embeddings for a sequence of feature matrices."""
    dtype = model.params["embed.weight"].dtype
    xs = np.stack([_feature_values(f).astype(dtype) for f in feats])[:, None]
    logits_parts, emb_parts = [], []
    for start in range(0, len(xs), chunk):
        logits, emb, _ = model.forward_batch(xs[start : start + chunk])
        logits_parts.append(logits)
        emb_parts.append(emb)
    return np.concatenate(logits_parts), np.concatenate(emb_parts)


def evaluate(model: EmotionCNN, labelled_set) -> Metrics:
    """Argmax evaluation (prediction ties resolve to the lower class code)."""
    pairs = list(labelled_set)
    if not pairs:
        raise EmptyDatasetError("evaluation set is empty")
    logits, _ = predict_batch(model, [f for f, _ in pairs])
    labels = np.asarray([int(y) for _, y in pairs], dtype=np.int64)
    k = model.cfg.n_classes
    if labels.min() < 0 or labels.max() >= k:
        raise LabelOutOfRangeError(f"labels must lie in [0, {k})")

    losses, _ = kernels.softmax_cross_entropy_batch(logits.astype(np.float64), labels)
    preds = logits.argmax(axis=1)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)
    diag = np.diag(confusion).astype(np.float64)
    col_sums = confusion.sum(axis=0).astype(np.float64)
    row_sums = confusion.sum(axis=1).astype(np.float64)
    precision = np.divide(diag, col_sums, out=np.zeros(k), where=col_sums > 0)
    recall = np.divide(diag, row_sums, out=np.zeros(k), where=row_sums > 0)
    return Metrics(
        categorical_accuracy=float((preds == labels).mean()),
        confusion=confusion,
        precision=precision,
        recall=recall,
        loss=float(losses.mean()),
    )
