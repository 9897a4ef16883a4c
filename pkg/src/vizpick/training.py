"""Per-plot-type training loop, the deployable model bundle, and its file format."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import CorruptBundle, EmptyTrainingSet, IoFailure, VersionMismatch
from .features import N_FEATURES
from .nn import clip_gradients, sgd_momentum_step
from .regressor import (
    ConvRegressor,
    batch_smooth_l1,
    feature_weights,
    image_batch,
    init_model,
)
from .render import PlotImage
from .tables import CANONICAL_PLOT_ORDER, PlotType

BUNDLE_VERSION = 1

TrainPair = tuple[PlotImage, np.ndarray]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    smooth_l1_beta: float = 1.0
    weight_epsilon: float = 1e-3
    grad_clip: float = 10.0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("learning_rate and batch_size must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.smooth_l1_beta <= 0 or self.weight_epsilon <= 0:
            raise ValueError("smooth_l1_beta and weight_epsilon must be positive")
        if self.grad_clip <= 0:
            raise ValueError("grad_clip must be positive")


@dataclass
class ModelBundle:
    """One trained regressor per plot type plus the training-mean loss normalizer."""

    models: dict[PlotType, ConvRegressor]
    t_bar: np.ndarray
    metadata: dict = field(default_factory=dict)
    version: int = BUNDLE_VERSION

    def __post_init__(self) -> None:
        if set(self.models) != set(PlotType):
            raise EmptyTrainingSet(
                f"bundle must hold exactly one model per plot type, got {sorted(m.value for m in self.models)}"
            )
        t_bar = np.asarray(self.t_bar, dtype=np.float64).copy()
        if t_bar.shape != (N_FEATURES,):
            raise CorruptBundle(f"t_bar must have {N_FEATURES} entries, got {t_bar.shape}")
        t_bar.flags.writeable = False
        self.t_bar = t_bar


def type_seed(seed: int, plot_type: PlotType, stream: int = 0) -> int:
    """Deterministic per-type seed so retraining one type never touches the others."""
    ss = np.random.SeedSequence([seed, plot_type.canonical_index, stream])
    return int(ss.generate_state(1)[0])


def fit_regressor(
    model: ConvRegressor,
    images: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    cfg: TrainConfig,
    shuffle_rng: np.random.Generator,
    val_images: np.ndarray | None = None,
    val_targets: np.ndarray | None = None,
) -> dict:
    """Seeded mini-batch SGD with momentum; mutates model, returns the loss history."""
    n = images.shape[0]
    params = model.parameters()
    velocities = [np.zeros_like(p) for p in params]

    def eval_loss(x: np.ndarray, y: np.ndarray) -> float:
        total = 0.0
        for start in range(0, x.shape[0], 256):
            xb = x[start : start + 256]
            yb = y[start : start + 256]
            loss, _ = batch_smooth_l1(model.forward_batch(xb), yb, weights, cfg.smooth_l1_beta)
            total += loss * xb.shape[0]
        return total / x.shape[0]

    has_val = val_images is not None and val_images.shape[0] > 0
    history: dict = {
        "initial_train_loss": eval_loss(images, targets),
        "initial_val_loss": eval_loss(val_images, val_targets) if has_val else None,
        "train_loss": [],
        "val_loss": [],
    }

    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        epoch_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb = images[idx]
            yb = targets[idx]
            pred, caches = model.forward_with_caches(xb)
            loss, dpred = batch_smooth_l1(pred, yb, weights, cfg.smooth_l1_beta)
            grads = model.backward(caches, dpred)
            clip_gradients(grads, cfg.grad_clip)
            sgd_momentum_step(params, grads, velocities, cfg.learning_rate, cfg.momentum)
            epoch_sum += loss * xb.shape[0]
        history["train_loss"].append(epoch_sum / n)
        history["val_loss"].append(eval_loss(val_images, val_targets) if has_val else None)

    history["final_train_loss"] = history["train_loss"][-1] if cfg.epochs else history["initial_train_loss"]
    history["final_val_loss"] = history["val_loss"][-1] if cfg.epochs else history["initial_val_loss"]
    return history


def _stack_pairs(pairs: Sequence[TrainPair], dtype) -> tuple[np.ndarray, np.ndarray]:
    images = image_batch([img for img, _ in pairs], dtype)
    targets = np.stack([np.asarray(t, dtype=np.float64) for _, t in pairs]).astype(dtype)
    return images, targets


def train(
    train_data: Mapping[PlotType, Sequence[TrainPair]],
    cfg: TrainConfig,
    val_data: Mapping[PlotType, Sequence[TrainPair]] | None = None,
) -> ModelBundle:
    """Train one regressor per plot type, independently and deterministically.

    t_bar is the mean true feature vector over all training pairs pooled
    across plot types; it doubles as the loss normalizer downstream.
    """
    for pt in PlotType:
        if not train_data.get(pt):
            raise EmptyTrainingSet(f"no training pairs for plot type {pt.value!r}")
    val_data = val_data or {}

    all_targets = np.stack(
        [np.asarray(t, dtype=np.float64) for pt in CANONICAL_PLOT_ORDER for _, t in train_data[pt]]
    )
    t_bar = all_targets.mean(axis=0)
    weights = feature_weights(t_bar, cfg.weight_epsilon)

    models: dict[PlotType, ConvRegressor] = {}
    per_type: dict[str, dict] = {}
    for pt in CANONICAL_PLOT_ORDER:
        model = init_model(type_seed(cfg.seed, pt, stream=0))
        images, targets = _stack_pairs(train_data[pt], model.dtype)
        val_images = val_targets = None
        if val_data.get(pt):
            val_images, val_targets = _stack_pairs(val_data[pt], model.dtype)
        shuffle_rng = np.random.default_rng(type_seed(cfg.seed, pt, stream=1))
        history = fit_regressor(
            model, images, targets, weights, cfg, shuffle_rng, val_images, val_targets
        )
        models[pt] = model
        per_type[pt.value] = history

    metadata = {
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "learning_rate": cfg.learning_rate,
        "momentum": cfg.momentum,
        "batch_size": cfg.batch_size,
        "smooth_l1_beta": cfg.smooth_l1_beta,
        "weight_epsilon": cfg.weight_epsilon,
        "grad_clip": cfg.grad_clip,
        "per_type": per_type,
    }
    return ModelBundle(models=models, t_bar=t_bar, metadata=metadata)


def bundles_equal(a: ModelBundle, b: ModelBundle) -> bool:
    """Bit-exact comparison of parameters, t_bar, and metadata."""
    if a.version != b.version or a.metadata != b.metadata:
        return False
    if not np.array_equal(a.t_bar, b.t_bar):
        return False
    for pt in PlotType:
        ma, mb = a.models[pt], b.models[pt]
        if ma.architecture != mb.architecture:
            return False
        if any(not np.array_equal(pa, pb) for pa, pb in zip(ma.parameters(), mb.parameters())):
            return False
    return True


def _payload(b: ModelBundle) -> dict:
    archs = {pt: b.models[pt].architecture for pt in PlotType}
    arch = archs[PlotType.SCATTER]
    if any(a != arch for a in archs.values()):
        raise CorruptBundle("bundle models disagree on architecture")
    return {
        "version": b.version,
        "architecture": [dict(spec) for spec in arch],
        "dtype": str(b.models[PlotType.SCATTER].dtype),
        "t_bar": [float(v) for v in b.t_bar],
        "metadata": b.metadata,
        "models": {
            pt.value: [[float(v) for v in p.ravel()] for p in b.models[pt].parameters()]
            for pt in CANONICAL_PLOT_ORDER
        },
    }


def _checksum(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_bundle(b: ModelBundle, path) -> None:
    payload = _payload(b)
    payload["checksum"] = _checksum({k: v for k, v in payload.items() if k != "checksum"})
    try:
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write bundle to {path}: {exc}") from exc


def load_bundle(path) -> ModelBundle:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read bundle from {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except ValueError as exc:
        raise CorruptBundle(f"bundle is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise CorruptBundle("bundle envelope is missing the version field")
    if payload["version"] != BUNDLE_VERSION:
        raise VersionMismatch(f"bundle version {payload['version']} != {BUNDLE_VERSION}")

    stored = payload.get("checksum")
    body = {k: v for k, v in payload.items() if k != "checksum"}
    if stored != _checksum(body):
        raise CorruptBundle("bundle checksum mismatch")

    try:
        arch = tuple(payload["architecture"])
        dtype = np.dtype(payload["dtype"])
        models: dict[PlotType, ConvRegressor] = {}
        for pt in PlotType:
            model = ConvRegressor(arch, dtype=dtype)
            stored_params = payload["models"][pt.value]
            params = model.parameters()
            if len(stored_params) != len(params):
                raise CorruptBundle("parameter tensor count mismatch")
            for param, flat in zip(params, stored_params):
                arr = np.asarray(flat, dtype=dtype)
                if arr.size != param.size:
                    raise CorruptBundle("parameter tensor size mismatch")
                param[...] = arr.reshape(param.shape)
            models[pt] = model
        return ModelBundle(
            models=models,
            t_bar=np.asarray(payload["t_bar"], dtype=np.float64),
            metadata=payload["metadata"],
            version=payload["version"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptBundle(f"bundle payload is malformed: {exc}") from exc
