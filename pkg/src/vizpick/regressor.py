"""Compact convolutional image-to-statistics regressor built on the nn primitives.

The default architecture maps a 1x64x64 chart image to the 26-value feature
schema: conv(8,5x5,s2) - conv(16,3x3,s2) - conv(32,3x3,s2), each with ReLU,
then dense(128)+ReLU and a linear dense(26) head (~157k parameters).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyEnsemble, ShapeMismatch
from .features import N_FEATURES
from .nn import Conv2d, Dense, Flatten, ReLU
from .render import PlotImage

ArchSpec = tuple[dict, ...]


def default_architecture(height: int = 64, width: int = 64) -> ArchSpec:
    return (
        {"kind": "input", "channels": 1, "height": height, "width": width},
        {"kind": "conv", "out_channels": 8, "kernel": 5, "stride": 2},
        {"kind": "relu"},
        {"kind": "conv", "out_channels": 16, "kernel": 3, "stride": 2},
        {"kind": "relu"},
        {"kind": "conv", "out_channels": 32, "kernel": 3, "stride": 2},
        {"kind": "relu"},
        {"kind": "flatten"},
        {"kind": "dense", "out_features": 128},
        {"kind": "relu"},
        {"kind": "dense", "out_features": N_FEATURES},
    )


def reduced_architecture(height: int = 12, width: int = 12) -> ArchSpec:
    """Small variant used by gradient checks, where every parameter is perturbed."""
    return (
        {"kind": "input", "channels": 1, "height": height, "width": width},
        {"kind": "conv", "out_channels": 4, "kernel": 3, "stride": 2},
        {"kind": "relu"},
        {"kind": "conv", "out_channels": 6, "kernel": 3, "stride": 2},
        {"kind": "relu"},
        {"kind": "flatten"},
        {"kind": "dense", "out_features": 16},
        {"kind": "relu"},
        {"kind": "dense", "out_features": N_FEATURES},
    )


class ConvRegressor:
    """Feed-forward conv net with explicit backprop; output is always 26-wide."""

    def __init__(self, architecture: Iterable[dict], dtype=np.float32):
        self.architecture: ArchSpec = tuple(dict(spec) for spec in architecture)
        self.dtype = np.dtype(dtype)
        if not self.architecture or self.architecture[0].get("kind") != "input":
            raise ShapeMismatch("architecture must start with an input spec")
        inp = self.architecture[0]
        self.input_shape = (int(inp["channels"]), int(inp["height"]), int(inp["width"]))

        self.layers = []
        shape = self.input_shape  # (C, H, W) or (features,) after flatten
        for spec in self.architecture[1:]:
            kind = spec["kind"]
            if kind == "conv":
                layer = Conv2d(shape[0], int(spec["out_channels"]), int(spec["kernel"]),
                               int(spec["stride"]), dtype=self.dtype)
                shape = layer.out_shape(shape)
                if shape[1] < 1 or shape[2] < 1:
                    raise ShapeMismatch(f"conv layer shrinks the map below 1x1: {shape}")
            elif kind == "relu":
                layer = ReLU()
            elif kind == "flatten":
                layer = Flatten()
                shape = (int(np.prod(shape)),)
            elif kind == "dense":
                layer = Dense(shape[0], int(spec["out_features"]), dtype=self.dtype)
                shape = (layer.out_features,)
            else:
                raise ShapeMismatch(f"unknown layer kind {kind!r}")
            self.layers.append(layer)
        if shape != (N_FEATURES,):
            raise ShapeMismatch(f"architecture output is {shape}, must be ({N_FEATURES},)")

    def initialize(self, rng: np.random.Generator) -> None:
        for layer in self.layers:
            layer.init_params(rng)

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def astype(self, dtype) -> "ConvRegressor":
        other = ConvRegressor(self.architecture, dtype=dtype)
        for mine, theirs in zip(self.parameters(), other.parameters()):
            theirs[...] = mine.astype(dtype)
        return other

    def copy(self) -> "ConvRegressor":
        return self.astype(self.dtype)

    def _check_batch(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise ShapeMismatch(f"batch shape {x.shape} != (B, {self.input_shape})")
        return np.ascontiguousarray(x, dtype=self.dtype)

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        out = self._check_batch(x)
        for layer in self.layers:
            out, _ = layer.forward(out)
        return out

    def forward_with_caches(self, x: np.ndarray):
        out = self._check_batch(x)
        caches = []
        for layer in self.layers:
            out, cache = layer.forward(out)
            caches.append(cache)
        return out, caches

    def backward(self, caches, dout: np.ndarray) -> list[np.ndarray]:
        """Parameter gradients in parameters() order."""
        grads: list[np.ndarray] = []
        grad = dout
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            grad, layer_grads = layer.backward(cache, grad)
            grads = layer_grads + grads
        return grads

    def forward(self, img: "PlotImage | np.ndarray") -> np.ndarray:
        """Predict the 26 features of one image; returns float64."""
        return self.forward_batch(image_batch([img], self.dtype))[0].astype(np.float64)


def image_batch(images: Sequence["PlotImage | np.ndarray"], dtype=np.float32) -> np.ndarray:
    """Stack images into an (B, 1, H, W) array."""
    planes = [img.pixels if isinstance(img, PlotImage) else np.asarray(img) for img in images]
    return np.stack(planes).astype(dtype)[:, None, :, :]


def init_model(seed: int, architecture: Iterable[dict] | None = None, dtype=np.float32) -> ConvRegressor:
    """He fan-in initialization from a seeded PRNG; same seed, same parameters."""
    model = ConvRegressor(architecture or default_architecture(), dtype=dtype)
    model.initialize(np.random.default_rng(seed))
    return model


def feature_weights(t_bar: np.ndarray, eps: float = 1e-3) -> np.ndarray:
    """Per-feature loss weights 1 / max(|t_bar|, eps)."""
    return 1.0 / np.maximum(np.abs(np.asarray(t_bar, dtype=np.float64)), eps)


def loss_smooth_l1_weighted(
    y_pred: np.ndarray,
    y_true: np.ndarray,
    t_bar: np.ndarray,
    beta: float = 1.0,
    eps: float = 1e-3,
) -> tuple[float, np.ndarray]:
    """Weighted smooth-L1 loss of one prediction and its analytic gradient wrt y_pred."""
    pred = np.asarray(y_pred, dtype=np.float64)
    true = np.asarray(y_true, dtype=np.float64)
    weights = feature_weights(t_bar, eps)
    d = pred - true
    absd = np.abs(d)
    quad = absd < beta
    per = np.where(quad, 0.5 * d * d / beta, absd - 0.5 * beta)
    grad = weights * np.where(quad, d / beta, np.sign(d))
    return float((weights * per).sum()), grad


def batch_smooth_l1(
    pred: np.ndarray, target: np.ndarray, weights: np.ndarray, beta: float
) -> tuple[float, np.ndarray]:
    """Mean weighted smooth-L1 over a batch, plus gradient wrt pred."""
    w = weights.astype(pred.dtype)
    d = pred - target
    absd = np.abs(d)
    quad = absd < beta
    per = np.where(quad, 0.5 * d * d / beta, absd - 0.5 * beta)
    loss = float((per * w).sum(axis=1).mean())
    grad = (w * np.where(quad, d / beta, np.sign(d))) / pred.shape[0]
    return loss, grad.astype(pred.dtype)


def predict_ensemble(models: Sequence[ConvRegressor], img: "PlotImage | np.ndarray") -> np.ndarray:
    """Unweighted mean of the member predictions."""
    if not models:
        raise EmptyEnsemble("ensemble has no member models")
    preds = np.stack([m.forward(img) for m in models])
    return preds.mean(axis=0)


def grad_check(
    m: ConvRegressor,
    img: "PlotImage | np.ndarray",
    y: np.ndarray,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-finite-difference gradients.

    Runs in double precision with uniform feature weights; perturbs every
    parameter, so only use with a reduced architecture.
    """
    model = m.astype(np.float64)
    x = image_batch([img], np.float64)
    target = np.asarray(y, dtype=np.float64).reshape(1, -1)
    ones = np.ones(target.shape[1], dtype=np.float64)

    pred, caches = model.forward_with_caches(x)
    _, dpred = batch_smooth_l1(pred, target, ones, beta=1.0)
    grads = model.backward(caches, dpred)

    def loss_at_current() -> float:
        out = model.forward_batch(x)
        return batch_smooth_l1(out, target, ones, beta=1.0)[0]

    worst = 0.0
    for param, grad in zip(model.parameters(), grads):
        flat_p = param.ravel()
        flat_g = grad.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            lo_hi = loss_at_current()
            flat_p[i] = orig - step
            lo_lo = loss_at_current()
            flat_p[i] = orig
            fd = (lo_hi - lo_lo) / (2.0 * step)
            denom = max(abs(flat_g[i]), abs(fd))
            if denom < 1e-8:
                continue
            worst = max(worst, abs(flat_g[i] - fd) / denom)
    return worst
