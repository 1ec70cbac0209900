"""The learnable fusor: standardized meta-features -> softmax model weights.

A single linear map (24 x k) plus per-model bias, trained with Adam to
minimize the Huber loss of the fused forecast against the truth. Training
starts from zero parameters, i.e. from the uniform mean ensemble, and
checkpoints on an internal validation split so the returned model is never
worse than that baseline on the monitored loss.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import JointMetaDataset, MetaShard, batch_iterator, build_joint_dataset
from .errors import EmptyDataset, NonFiniteLoss, ShapeMismatch
from .features import FEATURE_NAMES, N_FEATURES

EPS_STD = 1e-8
CLAMP = 10.0

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8

_VAL_FRACTION = 0.1


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    huber_delta: float = 1.0

    def __post_init__(self) -> None:
        if not self.learning_rate > 0 or self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("learning_rate > 0, batch_size >= 1, max_epochs >= 0 required")
        if self.patience < 0 or not self.huber_delta > 0:
            raise ValueError("patience >= 0 and huber_delta > 0 required")


@dataclass
class FusorModel:
    theta: np.ndarray
    bias: np.ndarray
    feature_means: np.ndarray
    feature_stds: np.ndarray
    roster: tuple[str, ...]
    huber_delta: float = 1.0
    selected_epoch: int = field(default=-1, compare=False)

    def __post_init__(self) -> None:
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        self.feature_means = np.asarray(self.feature_means, dtype=np.float64)
        self.feature_stds = np.asarray(self.feature_stds, dtype=np.float64)
        self.roster = tuple(self.roster)
        k = len(self.roster)
        if self.theta.shape != (N_FEATURES, k):
            raise ShapeMismatch(f"theta must be ({N_FEATURES}, {k}), got {self.theta.shape}")
        if self.bias.shape != (k,):
            raise ShapeMismatch(f"bias must be ({k},), got {self.bias.shape}")
        if self.feature_means.shape != (N_FEATURES,) or self.feature_stds.shape != (N_FEATURES,):
            raise ShapeMismatch("feature statistics must have one entry per feature")

    @property
    def k(self) -> int:
        return len(self.roster)

    @classmethod
    def zero_initialized(
        cls,
        roster: Sequence[str],
        feature_means: np.ndarray | None = None,
        feature_stds: np.ndarray | None = None,
        huber_delta: float = 1.0,
    ) -> "FusorModel":
        """Uniform-ensemble starting point (all parameters zero)."""
        k = len(tuple(roster))
        return cls(
            np.zeros((N_FEATURES, k)),
            np.zeros(k),
            np.zeros(N_FEATURES) if feature_means is None else feature_means,
            np.ones(N_FEATURES) if feature_stds is None else feature_stds,
            tuple(roster),
            huber_delta,
        )


def standardize_features(
    means: np.ndarray, stds: np.ndarray, raw: np.ndarray
) -> np.ndarray:
    """Z-score with clamped denominators, outputs clipped to +-CLAMP."""
    z = (np.asarray(raw, dtype=np.float64) - means) / np.maximum(stds, EPS_STD)
    return np.clip(z, -CLAMP, CLAMP)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def predict_weights(model: FusorModel, features: np.ndarray) -> np.ndarray:
    """Softmax fusion weights for one feature vector (shape ``(k,)``)."""
    z = standardize_features(model.feature_means, model.feature_stds, features)
    return _softmax(z @ model.theta + model.bias)


def predict_weights_batch(model: FusorModel, features: np.ndarray) -> np.ndarray:
    """Fusion weights for a feature matrix (shape ``(n, k)``)."""
    z = standardize_features(model.feature_means, model.feature_stds, features)
    return _softmax(z @ model.theta + model.bias)


def fuse(weights: np.ndarray, predictions: np.ndarray) -> np.ndarray:
    """Convex combination of the k prediction slices.

    ``predictions`` is ``(k, t_out, d)``; ``weights`` must be a simplex
    vector (nonnegative, summing to 1), e.g. softmax output or one-hot.
    """
    w = np.asarray(weights, dtype=np.float64)
    p = np.asarray(predictions, dtype=np.float64)
    if w.ndim != 1 or p.ndim != 3 or w.shape[0] != p.shape[0]:
        raise ShapeMismatch(f"weights {w.shape} vs predictions {p.shape}")
    if np.any(w < -1e-12) or abs(float(np.sum(w)) - 1.0) > 1e-6:
        raise ValueError("weights must be nonnegative and sum to 1")
    return np.tensordot(w, p, axes=1)


def huber_loss(prediction: np.ndarray, truth: np.ndarray, delta: float) -> float:
    """Mean over all elements of the Huber penalty of ``prediction - truth``."""
    pred = np.asarray(prediction, dtype=np.float64)
    true = np.asarray(truth, dtype=np.float64)
    if pred.shape != true.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs truth {true.shape}")
    r = pred - true
    a = np.abs(r)
    quad = 0.5 * r**2
    lin = delta * (a - 0.5 * delta)
    return float(np.mean(np.where(a <= delta, quad, lin)))


def _huber_grad(residual: np.ndarray, delta: float) -> np.ndarray:
    return np.clip(residual, -delta, delta)


def _forward(
    theta: np.ndarray,
    bias: np.ndarray,
    z: np.ndarray,
    predictions: np.ndarray,
    truths: np.ndarray,
    delta: float,
):
    """Batch loss plus everything the backward pass needs."""
    weights = _softmax(z @ theta + bias)
    fused = np.einsum("bk,bktd->btd", weights, predictions)
    residual = fused - truths
    a = np.abs(residual)
    per_elem = np.where(a <= delta, 0.5 * residual**2, delta * (a - 0.5 * delta))
    per_sample = per_elem.mean(axis=(1, 2))
    return float(per_sample.mean()), weights, residual


def _backward(
    z: np.ndarray,
    predictions: np.ndarray,
    weights: np.ndarray,
    residual: np.ndarray,
    delta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the batch loss w.r.t. theta and bias."""
    b, _, t_out, d = predictions.shape
    g_elem = _huber_grad(residual, delta) / (t_out * d)
    g_w = np.einsum("btd,bktd->bk", g_elem, predictions)
    g_logits = weights * (g_w - np.sum(weights * g_w, axis=1, keepdims=True))
    return z.T @ g_logits / b, g_logits.mean(axis=0)


def _sample_losses(model: FusorModel, shard_like, delta: float) -> np.ndarray:
    """Per-sample fused Huber losses for a shard or array triple."""
    features, predictions, truths = shard_like
    z = standardize_features(model.feature_means, model.feature_stds, features)
    weights = _softmax(z @ model.theta + model.bias)
    fused = np.einsum("bk,bktd->btd", weights, predictions)
    r = fused - truths
    a = np.abs(r)
    per_elem = np.where(a <= delta, 0.5 * r**2, delta * (a - 0.5 * delta))
    return per_elem.mean(axis=(1, 2))


def _as_float64(shard: MetaShard) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        shard.features.astype(np.float64),
        shard.predictions.astype(np.float64),
        shard.truths.astype(np.float64),
    )


def train_fusor(
    joint: JointMetaDataset,
    config: TrainConfig,
    on_epoch: Callable[[int, float, float], None] | None = None,
) -> FusorModel:
    """Train on the joint dataset, early-stopping on an internal val split.

    Carves a seeded 10% validation slice from every task, standardizes
    features with the remaining training statistics, and runs Adam over
    round-robin task batches. Returns the parameters of the best validation
    epoch; with ``max_epochs=0`` that is the uniform-ensemble zero model.
    """
    if sum(s.n_samples for s in joint.shards) == 0:
        raise EmptyDataset("joint dataset has no samples")

    train_shards: list[MetaShard] = []
    val_parts: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for i, shard in enumerate(joint.shards):
        n = shard.n_samples
        n_val = max(1, round(_VAL_FRACTION * n)) if n >= 2 else 0
        rng = np.random.default_rng([config.seed & 0x7FFFFFFFFFFFFFFF, i, 0x7A11])
        order = rng.permutation(n)
        val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
        if n_val:
            val_parts.append(_as_float64(shard.subset(val_idx, split="meta_val")))
        train_shards.append(shard.subset(train_idx) if n_val else shard)

    features_train = np.concatenate([s.features for s in train_shards]).astype(np.float64)
    means = features_train.mean(axis=0)
    stds = features_train.std(axis=0)

    model = FusorModel.zero_initialized(
        joint.roster, means, stds, huber_delta=config.huber_delta
    )
    delta = config.huber_delta
    inner = build_joint_dataset(train_shards, config.seed)

    # all-singleton shards leave no room for a val split; monitor train loss
    monitor_parts = val_parts if val_parts else [_as_float64(s) for s in train_shards]

    def validation_loss(m: FusorModel) -> float:
        losses = np.concatenate([_sample_losses(m, p, delta) for p in monitor_parts])
        return float(losses.mean())

    theta = model.theta.copy()
    bias = model.bias.copy()
    m_theta = np.zeros_like(theta)
    v_theta = np.zeros_like(theta)
    m_bias = np.zeros_like(bias)
    v_bias = np.zeros_like(bias)
    step = 0

    best_loss = validation_loss(model)
    best_theta, best_bias, best_epoch = theta.copy(), bias.copy(), -1
    wait = 0

    for epoch in range(config.max_epochs):
        epoch_losses = []
        for batch in batch_iterator(inner, config.batch_size, epoch_seed=epoch):
            z = standardize_features(means, stds, batch.features)
            loss, weights, residual = _forward(
                theta, bias, z, batch.predictions, batch.truths, delta
            )
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became non-finite at epoch {epoch}, step {step} "
                    f"(task {batch.task_id!r})"
                )
            epoch_losses.append(loss)
            g_theta, g_bias = _backward(z, batch.predictions, weights, residual, delta)

            step += 1
            correction1 = 1.0 - _ADAM_BETA1**step
            correction2 = 1.0 - _ADAM_BETA2**step
            for params, grad, m_st, v_st in (
                (theta, g_theta, m_theta, v_theta),
                (bias, g_bias, m_bias, v_bias),
            ):
                m_st *= _ADAM_BETA1
                m_st += (1.0 - _ADAM_BETA1) * grad
                v_st *= _ADAM_BETA2
                v_st += (1.0 - _ADAM_BETA2) * grad**2
                params -= config.learning_rate * (m_st / correction1) / (
                    np.sqrt(v_st / correction2) + _ADAM_EPS
                )

        candidate = FusorModel(theta, bias, means, stds, joint.roster, delta)
        val_loss = validation_loss(candidate)
        if on_epoch is not None:
            on_epoch(epoch, float(np.mean(epoch_losses)), val_loss)
        if val_loss < best_loss:
            best_loss = val_loss
            best_theta, best_bias, best_epoch = theta.copy(), bias.copy(), epoch
            wait = 0
        else:
            wait += 1
            if wait >= config.patience:
                break

    result = FusorModel(best_theta, best_bias, means, stds, joint.roster, delta)
    result.selected_epoch = best_epoch
    return result


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_model(model: FusorModel, path: str | os.PathLike) -> None:
    """Write the model as JSON with floats at 17 significant digits."""
    def arr(values) -> str:
        return "[" + ",".join(_fmt(v) for v in values) + "]"

    parts = [
        '"format_version":1',
        '"roster":' + json.dumps(list(model.roster), separators=(",", ":")),
        '"huber_delta":' + _fmt(model.huber_delta),
        '"feature_order":' + json.dumps(list(FEATURE_NAMES), separators=(",", ":")),
        '"feature_means":' + arr(model.feature_means),
        '"feature_stds":' + arr(model.feature_stds),
        '"theta":[' + ",".join(arr(row) for row in model.theta) + "]",
        '"bias":' + arr(model.bias),
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("{" + ",".join(parts) + "}\n")


def load_model(path: str | os.PathLike) -> FusorModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != 1:
        raise ValueError(f"{path}: unsupported model format_version")
    if doc.get("feature_order") != list(FEATURE_NAMES):
        raise ValueError(f"{path}: unexpected feature_order")
    return FusorModel(
        np.array(doc["theta"], dtype=np.float64),
        np.array(doc["bias"], dtype=np.float64),
        np.array(doc["feature_means"], dtype=np.float64),
        np.array(doc["feature_stds"], dtype=np.float64),
        tuple(doc["roster"]),
        float(doc["huber_delta"]),
    )


def export_theta(
    model: FusorModel,
    path: str | os.PathLike,
    shards: Sequence[MetaShard] | None = None,
    weights_path: str | os.PathLike | None = None,
) -> None:
    """Write the parameter matrix as CSV (feature rows x model columns).

    With ``shards``, also writes per-task mean/std of the predicted weights
    to ``weights_path`` (default: ``<path>`` with a ``_weights`` suffix).
    """
    lines = ["feature," + ",".join(model.roster)]
    for name, row in zip(FEATURE_NAMES, model.theta):
        lines.append(name + "," + ",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    if shards is None:
        return
    if weights_path is None:
        base, ext = os.path.splitext(os.fspath(path))
        weights_path = base + "_weights" + (ext or ".csv")
    header = "task," + ",".join(
        f"{name}_{stat}" for name in model.roster for stat in ("mean", "std")
    )
    rows = [header]
    for shard in shards:
        weights = predict_weights_batch(model, shard.features.astype(np.float64))
        cells = []
        for i in range(model.k):
            cells.append(_fmt(weights[:, i].mean()))
            cells.append(_fmt(weights[:, i].std()))
        rows.append(shard.task_id + "," + ",".join(cells))
    with open(weights_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
