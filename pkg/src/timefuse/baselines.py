"""Static-ensemble and selection baselines, plus a classical synthetic zoo.

The zoo methods (`naive_last`, `seasonal_naive:P`, `moving_average:W`,
`ar_p:N`) are cheap stand-ins for trained forecasting models, good enough to
exercise the whole fusion pipeline end to end at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import MetaShard, PredictionTensor
from .errors import (
    EmptySubset,
    InvalidOrder,
    InvalidPeriod,
    InvalidWidth,
    KOutOfRange,
)
from .features import TimeSeriesWindow
from .fusor import EPS_STD, FusorModel, predict_weights_batch


@dataclass
class ValidationScoreTable:
    """Per-model scalar loss on a designated shard (lower is better)."""

    roster: tuple[str, ...]
    losses: np.ndarray

    def __post_init__(self) -> None:
        self.roster = tuple(self.roster)
        self.losses = np.asarray(self.losses, dtype=np.float64)
        if self.losses.shape != (len(self.roster),):
            raise ValueError("one loss per roster entry required")
        if not np.all(np.isfinite(self.losses)):
            raise ValueError("validation losses must be finite")


def validation_scores(shard: MetaShard) -> ValidationScoreTable:
    """Global-element MSE of each zoo model on a shard."""
    preds = shard.predictions.astype(np.float64)
    truths = shard.truths.astype(np.float64)[:, None]
    losses = np.mean((preds - truths) ** 2, axis=(0, 2, 3))
    return ValidationScoreTable(shard.roster, losses)


def topk_select(scores: ValidationScoreTable, k_sel: int) -> list[str]:
    """The ``k_sel`` lowest-loss models; ties broken by roster order."""
    k = len(scores.roster)
    if not 1 <= k_sel <= k:
        raise KOutOfRange(f"k_sel={k_sel} outside [1, {k}]")
    order = np.argsort(scores.losses, kind="stable")
    return [scores.roster[i] for i in order[:k_sel]]


def _subset_indices(roster: Sequence[str], subset: Sequence[str | int]) -> np.ndarray:
    if len(subset) == 0:
        raise EmptySubset("ensemble over an empty model subset")
    index = {name: i for i, name in enumerate(roster)}
    return np.array([s if isinstance(s, (int, np.integer)) else index[s] for s in subset])


def mean_ensemble(predictions: PredictionTensor | np.ndarray, subset: Sequence[str | int]) -> np.ndarray:
    """Elementwise mean over the selected slices (repeats allowed)."""
    values, roster = _tensor_and_roster(predictions)
    return values[_subset_indices(roster, subset)].mean(axis=0)


def median_ensemble(predictions: PredictionTensor | np.ndarray, subset: Sequence[str | int]) -> np.ndarray:
    """Elementwise median over the selected slices (even counts average)."""
    values, roster = _tensor_and_roster(predictions)
    return np.median(values[_subset_indices(roster, subset)], axis=0)


def _tensor_and_roster(predictions) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(predictions, PredictionTensor):
        return predictions.values, predictions.model_roster
    values = np.asarray(predictions, dtype=np.float64)
    return values, tuple(range(values.shape[0]))


def forward_selection_ensemble(
    shard: MetaShard, max_members: int
) -> tuple[list[int], np.ndarray]:
    """Greedy with-replacement selection minimizing shard MSE.

    Sequentially adds the model whose inclusion in the running uniform
    average lowers the MSE the most; stops at ``max_members`` or when no
    addition improves. Returns the member index multiset and the implied
    per-model weights.
    """
    preds = shard.predictions.astype(np.float64)
    truths = shard.truths.astype(np.float64)
    k = shard.k

    members: list[int] = []
    running_sum = np.zeros_like(truths)
    best_loss = np.inf
    while len(members) < max_members:
        cand_losses = np.array([
            np.mean(((running_sum + preds[:, j]) / (len(members) + 1) - truths) ** 2)
            for j in range(k)
        ])
        j = int(np.argmin(cand_losses))
        if cand_losses[j] >= best_loss:
            break
        best_loss = float(cand_losses[j])
        members.append(j)
        running_sum += preds[:, j]

    weights = np.bincount(members, minlength=k).astype(np.float64)
    weights /= weights.sum()
    return members, weights


def zeroshot_similarity_ensemble(
    train_shards: Sequence[MetaShard],
    query_features: np.ndarray,
    temperature: float | None = None,
) -> np.ndarray:
    """Similarity-weighted mixture of per-task best-model indicators.

    Task centroids are the mean feature vectors of the training shards,
    standardized across tasks; the query is softmax-weighted by negative
    Euclidean distance. The default temperature is the median pairwise
    centroid distance, so the sharpness is scale-free. A (near-)zero
    temperature degenerates to picking the nearest task (ties split evenly).
    """
    if not train_shards:
        raise EmptySubset("need at least one training shard")
    roster = train_shards[0].roster
    k = len(roster)

    centroids = np.stack([s.features.astype(np.float64).mean(axis=0) for s in train_shards])
    indicators = np.zeros((len(train_shards), k))
    for i, shard in enumerate(train_shards):
        indicators[i, int(np.argmin(validation_scores(shard).losses))] = 1.0

    if len(train_shards) == 1:
        return indicators[0]

    mu = centroids.mean(axis=0)
    sigma = np.maximum(centroids.std(axis=0), EPS_STD)
    z_centroids = (centroids - mu) / sigma
    z_query = (np.asarray(query_features, dtype=np.float64) - mu) / sigma
    dist = np.sqrt(np.sum((z_centroids - z_query) ** 2, axis=1))

    if temperature is None:
        iu = np.triu_indices(len(train_shards), k=1)
        pairwise = np.sqrt(
            np.sum((z_centroids[:, None] - z_centroids[None, :]) ** 2, axis=2)
        )[iu]
        temperature = float(np.median(pairwise))
    if temperature <= EPS_STD:
        nearest = dist == dist.min()
        mix = nearest / nearest.sum()
    else:
        logits = -dist / temperature
        e = np.exp(logits - logits.max())
        mix = e / e.sum()
    return mix @ indicators


def _parse_zoo_method(method: str) -> tuple[str, int | None]:
    name, _, arg = method.partition(":")
    return name, int(arg) if arg else None


def synthetic_zoo_forecast(
    window: TimeSeriesWindow | np.ndarray, method: str, t_out: int
) -> np.ndarray:
    """Forecast ``t_out`` steps with one classical method.

    ``method`` is ``naive_last``, ``seasonal_naive:P``, ``moving_average:W``,
    or ``ar_p:N`` (the string doubles as the zoo roster name).
    """
    if not isinstance(window, TimeSeriesWindow):
        window = TimeSeriesWindow(window)
    x = window.values
    t_in = window.t_in
    name, arg = _parse_zoo_method(method)

    if name == "naive_last":
        return np.tile(x[-1], (t_out, 1))
    if name == "seasonal_naive":
        if arg is None or not 1 <= arg <= t_in:
            raise InvalidPeriod(f"period {arg} invalid for window of {t_in} steps")
        steps = t_in - arg + np.arange(t_out) % arg
        return x[steps].copy()
    if name == "moving_average":
        if arg is None or not 1 <= arg <= t_in:
            raise InvalidWidth(f"width {arg} invalid for window of {t_in} steps")
        return np.tile(x[-arg:].mean(axis=0), (t_out, 1))
    if name == "ar_p":
        if arg is None or arg < 1 or t_in - arg < arg + 1:
            raise InvalidOrder(f"order {arg} invalid for window of {t_in} steps")
        return _ar_forecast(x, arg, t_out)
    raise ValueError(f"unknown zoo method {method!r}")


def _ar_forecast(x: np.ndarray, order: int, t_out: int) -> np.ndarray:
    """Per-variable least-squares AR(order) with intercept, rolled forward."""
    t_in, d = x.shape
    out = np.empty((t_out, d))
    rows = t_in - order
    for j in range(d):
        col = x[:, j]
        design = np.empty((rows, order + 1))
        design[:, 0] = 1.0
        for lag in range(1, order + 1):
            design[:, lag] = col[order - lag : t_in - lag]
        coef, *_ = np.linalg.lstsq(design, col[order:], rcond=None)
        history = list(col[-order:])
        for step in range(t_out):
            nxt = coef[0] + sum(coef[lag] * history[-lag] for lag in range(1, order + 1))
            out[step, j] = nxt
            history.append(nxt)
    return out


def zoo_prediction_tensor(
    window: TimeSeriesWindow | np.ndarray, methods: Sequence[str], t_out: int
) -> PredictionTensor:
    """Stack the zoo's forecasts for one window into a prediction tensor."""
    slices = [synthetic_zoo_forecast(window, m, t_out) for m in methods]
    return PredictionTensor(np.stack(slices), tuple(methods))


@dataclass
class RankFirstReport:
    roster: tuple[str, ...]
    fractions: np.ndarray
    n_samples: int
    fused_beats_best: float | None = None
    best_individual: str | None = None


def rank_first_analysis(
    shards: Sequence[MetaShard], model: FusorModel | None = None
) -> RankFirstReport:
    """Per-model share of samples with the lowest per-sample MSE.

    Exact ties split their credit equally, so the fractions always sum to 1.
    With a fusor, also reports the fraction of samples where the fused
    prediction strictly beats the overall best individual model.
    """
    shards = list(shards)
    if not shards:
        raise EmptySubset("rank-first analysis needs at least one shard")
    roster = shards[0].roster
    k = len(roster)

    credits = np.zeros(k)
    per_sample_losses = []
    fused_losses = []
    for shard in shards:
        preds = shard.predictions.astype(np.float64)
        truths = shard.truths.astype(np.float64)
        losses = np.mean((preds - truths[:, None]) ** 2, axis=(2, 3))
        per_sample_losses.append(losses)
        mins = losses.min(axis=1, keepdims=True)
        ties = losses == mins
        credits += (ties / ties.sum(axis=1, keepdims=True)).sum(axis=0)
        if model is not None:
            weights = predict_weights_batch(model, shard.features.astype(np.float64))
            fused = np.einsum("bk,bktd->btd", weights, preds)
            fused_losses.append(np.mean((fused - truths) ** 2, axis=(1, 2)))

    all_losses = np.concatenate(per_sample_losses)
    n = all_losses.shape[0]
    report = RankFirstReport(roster, credits / n, n)
    best = int(np.argmin(all_losses.mean(axis=0)))
    report.best_individual = roster[best]
    if model is not None:
        fused_all = np.concatenate(fused_losses)
        report.fused_beats_best = float(np.mean(fused_all < all_losses[:, best]))
    return report
