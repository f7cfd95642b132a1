"""Tensor kernels for the emotion CNN: forward passes with exact gradients.

Everything is a pure function over numpy arrays.  The public single-sample
functions wrap batched internals (leading N axis) that the model uses for
speed; both paths share one implementation so they cannot drift apart.
Convolution uses the cross-correlation convention (no kernel flip), stride
1, 3x3 kernels.  Dtype follows the input: float32 for training, float64
for gradient checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputTooSmallError, LabelOutOfRangeError, ShapeMismatchError
from .rng import Rng

KERNEL_SIZE = 3


# --- convolution ---

def _im2col(padded: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Patch matrix (N*out_h*out_w, C*9) with (c, dy, dx) column order."""
    n, c = padded.shape[:2]
    cols = np.empty((n, c, KERNEL_SIZE, KERNEL_SIZE, out_h, out_w), dtype=padded.dtype)
    for dy in range(KERNEL_SIZE):
        for dx in range(KERNEL_SIZE):
            cols[:, :, dy, dx] = padded[:, :, dy : dy + out_h, dx : dx + out_w]
    return cols.transpose(0, 4, 5, 1, 2, 3).reshape(n * out_h * out_w, c * KERNEL_SIZE**2)


def conv2d_batch(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray, padding: str = "same"):
    """Batched conv forward: x (N,C,H,W) -> (out (N,O,oH,oW), cache)."""
    if x.ndim != 4 or kernels.ndim != 4:
        raise ShapeMismatchError("conv2d expects x (N,C,H,W) and kernels (O,C,3,3)")
    n, c, h, w = x.shape
    out_ch, kc, kh, kw = kernels.shape
    if kc != c or kh != KERNEL_SIZE or kw != KERNEL_SIZE or bias.shape != (out_ch,):
        raise ShapeMismatchError(
            f"kernels {kernels.shape} / bias {bias.shape} do not match input channels {c}"
        )
    if padding == "same":
        pad = 1
    elif padding == "valid":
        pad = 0
    else:
        raise ShapeMismatchError(f"unknown padding {padding!r}")
    out_h, out_w = h + 2 * pad - 2, w + 2 * pad - 2
    if out_h < 1 or out_w < 1:
        raise ShapeMismatchError(f"input {h}x{w} too small for valid 3x3 convolution")

    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(padded, out_h, out_w)
    kmat = kernels.reshape(out_ch, -1)
    out = cols @ kmat.T + bias
    out = out.reshape(n, out_h, out_w, out_ch).transpose(0, 3, 1, 2)
    cache = (cols, kernels, x.shape, pad, out_h, out_w)
    return out, cache


def conv2d_batch_backward(dout: np.ndarray, cache):
    """Gradients for conv2d_batch: returns (dx, dkernels, dbias)."""
    cols, kernels, x_shape, pad, out_h, out_w = cache
    n, c, h, w = x_shape
    out_ch = kernels.shape[0]
    dflat = dout.transpose(0, 2, 3, 1).reshape(-1, out_ch)

    dbias = dflat.sum(axis=0)
    dkernels = (dflat.T @ cols).reshape(kernels.shape)

    dcols = (dflat @ kernels.reshape(out_ch, -1)).reshape(n, out_h, out_w, c, KERNEL_SIZE, KERNEL_SIZE)
    dcols = dcols.transpose(0, 3, 4, 5, 1, 2)
    dpadded = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dout.dtype)
    for dy in range(KERNEL_SIZE):
        for dx in range(KERNEL_SIZE):
            dpadded[:, :, dy : dy + out_h, dx : dx + out_w] += dcols[:, :, dy, dx]
    dx = dpadded[:, :, pad : pad + h, pad : pad + w] if pad else dpadded
    return dx, dkernels, dbias


def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray, padding: str = "same"):
    """Single-sample conv: x (C,H,W) -> (out (O,oH,oW), cache)."""
    out, cache = conv2d_batch(x[None], kernels, bias, padding)
    return out[0], cache


def conv2d_backward(dout: np.ndarray, cache):
    dx, dk, db = conv2d_batch_backward(dout[None], cache)
    return dx[0], dk, db


# --- max pooling ---

def maxpool2x2_batch(x: np.ndarray):
    """Non-overlapping 2x2 max pool; trailing odd row/column dropped.

    Ties go to the first element in row-major window order.
    """
    n, c, h, w = x.shape
    if h < 2 or w < 2:
        raise InputTooSmallError(f"maxpool2x2 needs H,W >= 2, got {h}x{w}")
    oh, ow = h // 2, w // 2
    windows = x[:, :, : oh * 2, : ow * 2].reshape(n, c, oh, 2, ow, 2)
    windows = windows.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh, ow, 4)
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    return out, (argmax, x.shape)


def maxpool2x2_batch_backward(dout: np.ndarray, cache):
    argmax, x_shape = cache
    n, c, h, w = x_shape
    oh, ow = h // 2, w // 2
    dwindows = np.zeros((n, c, oh, ow, 4), dtype=dout.dtype)
    np.put_along_axis(dwindows, argmax[..., None], dout[..., None], axis=-1)
    dx = np.zeros(x_shape, dtype=dout.dtype)
    dx[:, :, : oh * 2, : ow * 2] = (
        dwindows.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, oh * 2, ow * 2)
    )
    return dx


def maxpool2x2(x: np.ndarray):
    out, cache = maxpool2x2_batch(x[None])
    argmax, shape = cache
    return out[0], (argmax, shape)


def maxpool2x2_backward(dout: np.ndarray, cache):
    return maxpool2x2_batch_backward(dout[None], cache)[0]


# --- activations / dense / loss ---

def relu(x: np.ndarray):
    out = np.maximum(x, 0)
    return out, x


def relu_backward(dout: np.ndarray, cache):
    # subgradient at exactly 0 is 0
    return dout * (cache > 0)


def dense_batch(x: np.ndarray, weight: np.ndarray, bias: np.ndarray):
    """Batched affine map: x (N,n) @ weight (m,n)^T + bias (m,)."""
    if x.shape[1] != weight.shape[1] or bias.shape != (weight.shape[0],):
        raise ShapeMismatchError(
            f"dense shapes disagree: x {x.shape}, W {weight.shape}, b {bias.shape}"
        )
    return x @ weight.T + bias, (x, weight)


def dense_batch_backward(dout: np.ndarray, cache):
    x, weight = cache
    dx = dout @ weight
    dweight = dout.T @ x
    dbias = dout.sum(axis=0)
    return dx, dweight, dbias


def dense(x: np.ndarray, weight: np.ndarray, bias: np.ndarray):
    """Single-vector affine map y = W x + b."""
    out, cache = dense_batch(x[None], weight, bias)
    return out[0], cache


def dense_backward(dout: np.ndarray, cache):
    dx, dw, db = dense_batch_backward(dout[None], cache)
    return dx[0], dw, db


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy_batch(logits: np.ndarray, labels: np.ndarray):
    """Per-sample losses and dloss/dlogits for integer labels (N,)."""
    labels = np.asarray(labels)
    k = logits.shape[-1]
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= k:
        raise LabelOutOfRangeError(f"labels must lie in [0, {k})")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=-1))
    rows = np.arange(len(labels))
    losses = logsumexp - shifted[rows, labels]
    grads = softmax(logits)
    grads[rows, labels] -= 1.0
    return losses, grads


def softmax_cross_entropy(logits: np.ndarray, label: int):
    """Numerically stable loss = logsumexp(z) - z[label]; grad = p - onehot."""
    losses, grads = softmax_cross_entropy_batch(logits[None], np.array([label]))
    return float(losses[0]), grads[0]


# --- optimizer / init ---

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_param(cls, param: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param))


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """One Adam update with bias correction; mutates param and state in place."""
    if param.shape != grad.shape or param.shape != state.m.shape:
        raise ShapeMismatchError("param, grad, and state shapes must agree")
    state.t += 1
    state.m += (1.0 - beta1) * (grad - state.m)
    state.v += (1.0 - beta2) * (grad * grad - state.v)
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return param, state


def he_fan_in(shape: tuple) -> int:
    """Fan-in: C_in*kh*kw for conv kernels, input width for dense weights."""
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    if len(shape) == 2:
        return shape[1]
    if len(shape) == 1:
        return shape[0]
    raise ShapeMismatchError(f"no fan-in rule for shape {shape}")


def he_init(shape: tuple, rng: Rng) -> np.ndarray:
    """He-normal init: i.i.d. normal(0, 2/fan_in) from the package Rng."""
    scale = np.sqrt(2.0 / he_fan_in(shape))
    return (rng.normal(int(np.prod(shape))) * scale).reshape(shape)
