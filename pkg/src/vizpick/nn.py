"""Convolution/dense layer primitives with explicit forward and backward passes.

Layers are stateless with respect to activations: forward returns (output,
cache) and backward takes the cache, so concurrent inference never races.
Batches use NCHW layout.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided


def _conv_windows(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """(B, C, OH, OW, k, k) sliding view over a NCHW batch, valid padding."""
    b, c, h, w = x.shape
    oh = (h - kernel) // stride + 1
    ow = (w - kernel) // stride + 1
    sb, sc, sh, sw = x.strides
    return as_strided(
        x,
        shape=(b, c, oh, ow, kernel, kernel),
        strides=(sb, sc, sh * stride, sw * stride, sh, sw),
        writeable=False,
    )


class Conv2d:
    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.weight = np.zeros((out_channels, in_channels, kernel, kernel), dtype=dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)

    def init_params(self, rng: np.random.Generator) -> None:
        fan_in = self.in_channels * self.kernel * self.kernel
        scale = np.sqrt(2.0 / fan_in)
        self.weight = (rng.standard_normal(self.weight.shape) * scale).astype(self.weight.dtype)
        self.bias = np.zeros_like(self.bias)

    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def out_shape(self, in_shape: tuple[int, int, int]) -> tuple[int, int, int]:
        _, h, w = in_shape
        return (
            self.out_channels,
            (h - self.kernel) // self.stride + 1,
            (w - self.kernel) // self.stride + 1,
        )

    def forward(self, x: np.ndarray):
        b = x.shape[0]
        win = _conv_windows(x, self.kernel, self.stride)
        _, _, oh, ow, _, _ = win.shape
        cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(b * oh * ow, -1)
        wmat = self.weight.reshape(self.out_channels, -1)
        out = cols @ wmat.T + self.bias
        out = out.reshape(b, oh, ow, self.out_channels).transpose(0, 3, 1, 2)
        return out, (x.shape, cols)

    def backward(self, cache, dout: np.ndarray):
        x_shape, cols = cache
        b, _, oh, ow = dout.shape
        dmat = np.ascontiguousarray(dout.transpose(0, 2, 3, 1)).reshape(-1, self.out_channels)
        dweight = (dmat.T @ cols).reshape(self.weight.shape)
        dbias = dmat.sum(axis=0)
        dcols = (dmat @ self.weight.reshape(self.out_channels, -1)).reshape(
            b, oh, ow, self.in_channels, self.kernel, self.kernel
        )
        dx = np.zeros(x_shape, dtype=dout.dtype)
        s = self.stride
        for kh in range(self.kernel):
            for kw in range(self.kernel):
                dx[:, :, kh : kh + s * oh : s, kw : kw + s * ow : s] += dcols[
                    :, :, :, :, kh, kw
                ].transpose(0, 3, 1, 2)
        return dx, [dweight, dbias]


class Dense:
    def __init__(self, in_features: int, out_features: int, dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = np.zeros((out_features, in_features), dtype=dtype)
        self.bias = np.zeros(out_features, dtype=dtype)

    def init_params(self, rng: np.random.Generator) -> None:
        scale = np.sqrt(2.0 / self.in_features)
        self.weight = (rng.standard_normal(self.weight.shape) * scale).astype(self.weight.dtype)
        self.bias = np.zeros_like(self.bias)

    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray):
        return x @ self.weight.T + self.bias, x

    def backward(self, cache, dout: np.ndarray):
        x = cache
        dweight = dout.T @ x
        dbias = dout.sum(axis=0)
        dx = dout @ self.weight
        return dx, [dweight, dbias]


class ReLU:
    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def params(self) -> list[np.ndarray]:
        return []

    def forward(self, x: np.ndarray):
        return np.maximum(x, 0), x

    def backward(self, cache, dout: np.ndarray):
        return dout * (cache > 0), []


class Flatten:
    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def params(self) -> list[np.ndarray]:
        return []

    def forward(self, x: np.ndarray):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache, dout: np.ndarray):
        return dout.reshape(cache), []


def clip_gradients(grads: list[np.ndarray], max_norm: float) -> None:
    """In-place global-norm gradient clipping; no-op when under the bound."""
    total = 0.0
    for g in grads:
        total += float((g.astype(np.float64) ** 2).sum())
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale


def sgd_momentum_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    velocities: list[np.ndarray],
    learning_rate: float,
    momentum: float,
) -> None:
    """In-place heavy-ball update: v = mu*v - lr*g; p += v."""
    for p, g, v in zip(params, grads, velocities):
        v *= momentum
        v -= learning_rate * g.astype(p.dtype)
        p += v
