"""Forecast metrics and experiment reports.

MSE/MAE are global element means over all samples, RMSE = sqrt(MSE), and
MAPE is a percentage over elements whose truth is meaningfully nonzero.
The leaderboard compares fusion against the static baselines per task, and
the zero-shot protocol retrains the fusor with one task left out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import baselines
from .dataset import MetaShard, build_joint_dataset
from .errors import (
    InsufficientTasks,
    RosterMismatch,
    ShapeMismatch,
    UnknownMethod,
    UnknownTask,
)
from .fusor import FusorModel, TrainConfig, predict_weights_batch, train_fusor

# elements with |truth| at or below this never enter the MAPE sum
MAPE_EPS = 1e-8

METRIC_NAMES = ("mse", "mae", "rmse", "mape")


@dataclass
class Metrics:
    mse: float
    mae: float
    rmse: float
    mape: float | None
    sample_count: int
    mape_retained: int

    def as_dict(self) -> dict[str, float | None]:
        return {"mse": self.mse, "mae": self.mae, "rmse": self.rmse, "mape": self.mape}


def compute_metrics(
    predictions: Sequence[np.ndarray], truths: Sequence[np.ndarray]
) -> Metrics:
    """Aggregate error metrics over aligned prediction/truth pairs."""
    if len(predictions) != len(truths):
        raise ShapeMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    sq_sum = abs_sum = 0.0
    count = 0
    mape_sum = 0.0
    retained = 0
    for pred, true in zip(predictions, truths):
        pred = np.asarray(pred, dtype=np.float64)
        true = np.asarray(true, dtype=np.float64)
        if pred.shape != true.shape:
            raise ShapeMismatch(f"prediction {pred.shape} vs truth {true.shape}")
        resid = pred - true
        sq_sum += float(np.sum(resid**2))
        abs_sum += float(np.sum(np.abs(resid)))
        count += resid.size
        keep = np.abs(true) > MAPE_EPS
        mape_sum += float(np.sum(np.abs(resid[keep]) / np.abs(true[keep])))
        retained += int(np.sum(keep))
    if count == 0:
        raise ShapeMismatch("no elements to score")
    mse = sq_sum / count
    return Metrics(
        mse=mse,
        mae=abs_sum / count,
        rmse=float(np.sqrt(mse)),
        mape=100.0 * mape_sum / retained if retained else None,
        sample_count=len(predictions),
        mape_retained=retained,
    )


def _metrics_from_stack(predictions: np.ndarray, truths: np.ndarray) -> Metrics:
    return compute_metrics(list(predictions), list(truths))


def fused_predictions(model: FusorModel, shard: MetaShard) -> np.ndarray:
    """Per-sample fused forecasts for every sample of a shard."""
    if shard.roster != model.roster:
        raise RosterMismatch(
            f"shard roster {shard.roster} != model roster {model.roster}"
        )
    weights = predict_weights_batch(model, shard.features.astype(np.float64))
    return np.einsum("bk,bktd->btd", weights, shard.predictions.astype(np.float64))


def method_predictions(
    method: str,
    test_shard: MetaShard,
    train_shard: MetaShard | None = None,
    train_shards: Sequence[MetaShard] | None = None,
    model: FusorModel | None = None,
) -> np.ndarray:
    """Predictions of one report method on every sample of ``test_shard``.

    ``train_shard`` is the same task's meta-training shard (validation data
    for model selection); ``train_shards`` are all tasks' meta-training
    shards (for the zero-shot similarity baseline).
    """
    preds = test_shard.predictions.astype(np.float64)
    name, _, arg = method.partition(":")

    if name == "fused":
        if model is None:
            raise UnknownMethod("method 'fused' needs a trained fusor model")
        return fused_predictions(model, test_shard)
    if name == "mean":
        return preds.mean(axis=1)
    if name == "median":
        return np.median(preds, axis=1)
    if name == "topk":
        if not arg:
            raise UnknownMethod("method 'topk' needs a size, e.g. topk:3")
        scores = baselines.validation_scores(_require_train(train_shard, method))
        subset = baselines.topk_select(scores, int(arg))
        idx = [test_shard.roster.index(m) for m in subset]
        return preds[:, idx].mean(axis=1)
    if name == "forward":
        _, weights = baselines.forward_selection_ensemble(
            _require_train(train_shard, method), max_members=5 * test_shard.k
        )
        return np.einsum("k,bktd->btd", weights, preds)
    if name == "zeroshot":
        if not train_shards:
            raise UnknownMethod("method 'zeroshot' needs meta-training shards")
        out = np.empty_like(test_shard.truths, dtype=np.float64)
        feats = test_shard.features.astype(np.float64)
        for i in range(test_shard.n_samples):
            w = baselines.zeroshot_similarity_ensemble(train_shards, feats[i])
            out[i] = np.einsum("k,ktd->td", w, preds[i])
        return out
    if name == "best-individual":
        scores = baselines.validation_scores(_require_train(train_shard, method))
        best = baselines.topk_select(scores, 1)[0]
        return preds[:, test_shard.roster.index(best)]
    raise UnknownMethod(f"unknown report method {method!r}")


def _require_train(shard: MetaShard | None, method: str) -> MetaShard:
    if shard is None:
        raise UnknownTask(f"method {method!r} needs the task's meta_train shard")
    return shard


@dataclass
class ZeroShotReport:
    held_out_task: str
    normal: Metrics
    zero_shot: Metrics
    best_individual: Metrics
    best_individual_name: str


def zero_shot_protocol(
    shards: Sequence[MetaShard], held_out_task: str, config: TrainConfig
) -> ZeroShotReport:
    """Leave-one-task-out fusor evaluation on the held-out test shard.

    Trains one fusor on every task's meta-training shard and one with the
    held-out task excluded, then scores both (plus the validation-best
    individual model) on the held-out task's test shard.
    """
    train = [s for s in shards if s.split == "meta_train"]
    test = {s.task_id: s for s in shards if s.split == "test"}
    tasks = sorted({s.task_id for s in train})
    if held_out_task not in tasks or held_out_task not in test:
        raise UnknownTask(f"task {held_out_task!r} needs meta_train and test shards")
    if len(tasks) < 2:
        raise InsufficientTasks("zero-shot protocol needs at least 2 tasks")

    test_shard = test[held_out_task]
    normal_model = train_fusor(build_joint_dataset(train, config.seed), config)
    rest = [s for s in train if s.task_id != held_out_task]
    zeroshot_model = train_fusor(build_joint_dataset(rest, config.seed), config)

    truths = test_shard.truths.astype(np.float64)
    normal = _metrics_from_stack(fused_predictions(normal_model, test_shard), truths)
    zero = _metrics_from_stack(fused_predictions(zeroshot_model, test_shard), truths)

    holdout_train = next(s for s in train if s.task_id == held_out_task)
    scores = baselines.validation_scores(holdout_train)
    best_name = baselines.topk_select(scores, 1)[0]
    best_preds = test_shard.predictions.astype(np.float64)[
        :, test_shard.roster.index(best_name)
    ]
    best = _metrics_from_stack(best_preds, truths)
    return ZeroShotReport(held_out_task, normal, zero, best, best_name)


def evaluate_methods(
    shards: Sequence[MetaShard],
    methods: Sequence[str],
    model: FusorModel | None = None,
) -> dict[str, dict[str, Metrics]]:
    """Score every method on every task's test shard.

    ``shards`` mixes splits; meta_train shards provide validation data for
    selection-based methods and the zero-shot similarity baseline.
    """
    train_by_task = {s.task_id: s for s in shards if s.split == "meta_train"}
    test_shards = [s for s in shards if s.split == "test"]
    if not test_shards:
        raise UnknownTask("no test shards to evaluate")
    train_shards = [train_by_task[t] for t in sorted(train_by_task)]

    table: dict[str, dict[str, Metrics]] = {}
    for shard in sorted(test_shards, key=lambda s: s.task_id):
        row: dict[str, Metrics] = {}
        for method in methods:
            preds = method_predictions(
                method,
                shard,
                train_shard=train_by_task.get(shard.task_id),
                train_shards=train_shards,
                model=model,
            )
            row[method] = _metrics_from_stack(preds, shard.truths.astype(np.float64))
        table[shard.task_id] = row
    return table


def leaderboard_csv(
    table: Mapping[str, Mapping[str, Metrics]],
    metrics: Sequence[str] = METRIC_NAMES,
) -> str:
    """Render the method table as CSV with per-row best/second-best marks.

    Data columns are ``method:metric``; the trailing ``best:metric`` and
    ``second:metric`` columns name the winning methods per task row.
    """
    tasks = sorted(table)
    methods: list[str] = []
    for task in tasks:
        for m in table[task]:
            if m not in methods:
                methods.append(m)
    header = (
        ["task"]
        + [f"{m}:{metric}" for m in methods for metric in metrics]
        + [f"best:{metric}" for metric in metrics]
        + [f"second:{metric}" for metric in metrics]
    )
    lines = [",".join(header)]
    for task in tasks:
        row = [task]
        for m in methods:
            cell = table[task].get(m)
            for metric in metrics:
                value = getattr(cell, metric) if cell is not None else None
                row.append("" if value is None else format(value, ".10g"))
        bests, seconds = [], []
        for metric in metrics:
            scored = sorted(
                (getattr(table[task][m], metric), i)
                for i, m in enumerate(methods)
                if m in table[task] and getattr(table[task][m], metric) is not None
            )
            bests.append(methods[scored[0][1]] if scored else "")
            seconds.append(methods[scored[1][1]] if len(scored) > 1 else "")
        lines.append(",".join(row + bests + seconds))
    return "\n".join(lines) + "\n"


def rank_first_csv(report: baselines.RankFirstReport) -> str:
    """Render a rank-first analysis as CSV."""
    lines = ["model,rank_first_fraction"]
    for name, frac in zip(report.roster, report.fractions):
        lines.append(f"{name},{format(frac, '.10g')}")
    if report.fused_beats_best is not None:
        lines.append(f"fused_beats_best[{report.best_individual}],{format(report.fused_beats_best, '.10g')}")
    return "\n".join(lines) + "\n"
