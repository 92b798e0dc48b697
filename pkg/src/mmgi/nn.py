"""Composition MLP, LSTM recurrence, dropout, and parameter initialization."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ShapeError

__all__ = [
    "glorot_uniform",
    "mlp_compose",
    "lstm_forward",
    "dropout",
    "l2_normalize",
]

NORM_EPS = 1e-8


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...],
                   fan_in: int | None = None, fan_out: int | None = None) -> np.ndarray:
    """uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    if fan_in is None:
        fan_in = shape[0]
    if fan_out is None:
        fan_out = shape[-1] if len(shape) > 1 else shape[0]
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def mlp_compose(left: Tensor, right: Tensor, w1: Tensor, b1: Tensor,
                w2: Tensor, b2: Tensor, *, dropout_rate: float = 0.0,
                rng: np.random.Generator | None = None,
                training: bool = False) -> Tensor:
    """Two-layer MLP over the concatenation of two span vectors.

    Accepts single vectors (d,) or batches (K, d); the concatenation happens
    along the last axis, so weights are (2d, hidden) and (hidden, d).
    """
    if left.data.shape != right.data.shape:
        raise ShapeError(
            f"compose inputs must share a shape, got {left.shape} vs {right.shape}"
        )
    if left.data.shape[-1] != w1.data.shape[0] // 2:
        raise ShapeError(
            f"compose input dim {left.data.shape[-1]} does not match weights "
            f"{w1.data.shape}"
        )
    x = ad.concat([left, right], axis=-1)
    h = ad.tanh(ad.matmul(x, w1) + b1)
    if training and dropout_rate > 0.0:
        h = dropout(h, dropout_rate, rng)
    return ad.matmul(h, w2) + b2


def lstm_forward(inputs: Tensor, w_x: Tensor, w_h: Tensor, b: Tensor) -> Tensor:
    """Single-layer unidirectional LSTM over a (T, d) sequence, zero initial state.

    Gate layout along the 4d axis: input, forget, cell, output. Returns the
    (T, d) sequence of hidden states.
    """
    if inputs.data.ndim != 2 or inputs.data.shape[0] == 0:
        raise ValueError(f"lstm_forward needs a nonempty (T, d) sequence, got {inputs.shape}")
    d = inputs.data.shape[1]
    if w_x.data.shape != (d, 4 * d):
        raise ShapeError(f"lstm weight shape {w_x.data.shape} does not match input dim {d}")
    h = ad.constant(np.zeros(d))
    c = ad.constant(np.zeros(d))
    outs = []
    for t in range(inputs.data.shape[0]):
        x_t = ad.reshape(ad.slice_axis0(inputs, t, t + 1), (d,))
        z = ad.matmul(x_t, w_x) + ad.matmul(h, w_h) + b  # (4d,)
        gi = ad.sigmoid(ad.slice_axis0(z, 0, d))
        gf = ad.sigmoid(ad.slice_axis0(z, d, 2 * d))
        gc = ad.tanh(ad.slice_axis0(z, 2 * d, 3 * d))
        go = ad.sigmoid(ad.slice_axis0(z, 3 * d, 4 * d))
        c = gf * c + gi * gc
        h = go * ad.tanh(c)
        outs.append(h)
    return ad.stack(outs, axis=0)


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout with a constant mask drawn from `rng`."""
    if rng is None:
        raise ValueError("dropout in training mode requires an rng")
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return ad.mul(x, ad.constant(keep))


def l2_normalize(v: Tensor) -> Tensor:
    """v / ||v||_2 with an epsilon-guarded norm."""
    norm = ad.sqrt(ad.tensor_sum(v * v) + NORM_EPS ** 2)
    return ad.div(v, norm)
