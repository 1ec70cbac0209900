"""Meta-training data: triplet collection, task shards, and balanced batching.

A shard holds one task's (meta-features, zoo predictions, truth) triplets for
one split. Joint training oversamples every task to the size of the largest
one and alternates batches between tasks in strict round-robin order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DuplicateModelName, EmptyDataset, RosterMismatch, ShapeMismatch
from .features import N_FEATURES, TimeSeriesWindow, extract_meta_features

SPLITS = ("meta_train", "meta_val", "test")


@dataclass
class PredictionTensor:
    """Stacked zoo outputs for one input: ``k x t_out x d`` plus the roster."""

    values: np.ndarray
    model_roster: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ShapeMismatch(f"prediction tensor must be 3-D, got shape {values.shape}")
        roster = tuple(self.model_roster)
        if len(roster) != len(set(roster)):
            raise DuplicateModelName(f"roster has repeated names: {roster}")
        if values.shape[0] != len(roster):
            raise ShapeMismatch(
                f"tensor has {values.shape[0]} slices but roster names {len(roster)} models"
            )
        if len(roster) < 2:
            raise ShapeMismatch("a model zoo needs at least 2 models")
        if not np.all(np.isfinite(values)):
            raise ShapeMismatch("prediction tensor contains non-finite values")
        self.values = values
        self.model_roster = roster

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass
class MetaSample:
    """One meta-training triplet."""

    meta_features: np.ndarray
    predictions: PredictionTensor
    truth: np.ndarray

    def __post_init__(self) -> None:
        self.meta_features = np.asarray(self.meta_features, dtype=np.float64)
        self.truth = np.asarray(self.truth, dtype=np.float64)
        if self.meta_features.shape != (N_FEATURES,):
            raise ShapeMismatch(
                f"feature vector must have shape ({N_FEATURES},), got {self.meta_features.shape}"
            )
        if self.truth.ndim != 2:
            raise ShapeMismatch(f"truth must be 2-D, got shape {self.truth.shape}")
        if self.predictions.values.shape[1:] != self.truth.shape:
            raise ShapeMismatch(
                f"predictions {self.predictions.values.shape[1:]} vs truth {self.truth.shape}"
            )


def collect_meta_sample(
    window: TimeSeriesWindow | np.ndarray,
    predictions: PredictionTensor,
    truth: np.ndarray,
) -> MetaSample:
    """Extract meta-features from ``window`` and package the triplet."""
    if not isinstance(window, TimeSeriesWindow):
        window = TimeSeriesWindow(window)
    truth = np.asarray(truth, dtype=np.float64)
    if truth.ndim != 2 or truth.shape[1] != window.d:
        raise ShapeMismatch(
            f"truth shape {truth.shape} does not match window with d={window.d}"
        )
    return MetaSample(extract_meta_features(window), predictions, truth)


class MetaShard:
    """All triplets of one task for one split, stored as float32 arrays."""

    def __init__(
        self,
        task_id: str,
        split: str,
        roster: Sequence[str],
        features: np.ndarray,
        predictions: np.ndarray,
        truths: np.ndarray,
    ) -> None:
        if not task_id:
            raise ValueError("task_id must be nonempty")
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        roster = tuple(roster)
        if len(roster) != len(set(roster)):
            raise DuplicateModelName(f"roster has repeated names: {roster}")
        features = np.ascontiguousarray(features, dtype=np.float32)
        predictions = np.ascontiguousarray(predictions, dtype=np.float32)
        truths = np.ascontiguousarray(truths, dtype=np.float32)
        n = features.shape[0]
        if features.ndim != 2 or features.shape[1] != N_FEATURES:
            raise ShapeMismatch(f"features must be (n, {N_FEATURES}), got {features.shape}")
        if predictions.ndim != 4 or predictions.shape[0] != n or predictions.shape[1] != len(roster):
            raise ShapeMismatch(f"predictions must be (n, k, t_out, d), got {predictions.shape}")
        if truths.shape != (n, predictions.shape[2], predictions.shape[3]):
            raise ShapeMismatch(f"truths {truths.shape} vs predictions {predictions.shape}")
        self.task_id = task_id
        self.split = split
        self.roster = roster
        self.features = features
        self.predictions = predictions
        self.truths = truths

    @classmethod
    def from_samples(
        cls, task_id: str, split: str, samples: Sequence[MetaSample]
    ) -> "MetaShard":
        if not samples:
            raise EmptyDataset(f"no samples for task {task_id!r}")
        roster = samples[0].predictions.model_roster
        shape = samples[0].truth.shape
        for s in samples[1:]:
            if s.predictions.model_roster != roster:
                raise RosterMismatch("samples disagree on the model roster")
            if s.truth.shape != shape:
                raise ShapeMismatch("samples disagree on the output shape")
        return cls(
            task_id,
            split,
            roster,
            np.stack([s.meta_features for s in samples]),
            np.stack([s.predictions.values for s in samples]),
            np.stack([s.truth for s in samples]),
        )

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def k(self) -> int:
        return self.predictions.shape[1]

    @property
    def t_out(self) -> int:
        return self.predictions.shape[2]

    @property
    def d(self) -> int:
        return self.predictions.shape[3]

    @property
    def schema(self) -> tuple[int, int, int, tuple[str, ...]]:
        return (self.k, self.t_out, self.d, self.roster)

    @property
    def samples(self) -> list[MetaSample]:
        return [self.sample(i) for i in range(self.n_samples)]

    def sample(self, i: int) -> MetaSample:
        return MetaSample(
            self.features[i].astype(np.float64),
            PredictionTensor(self.predictions[i].astype(np.float64), self.roster),
            self.truths[i].astype(np.float64),
        )

    def subset(self, indices: np.ndarray, split: str | None = None) -> "MetaShard":
        """New shard with the selected sample rows (copying, same task id)."""
        idx = np.asarray(indices, dtype=np.intp)
        return MetaShard(
            self.task_id,
            split or self.split,
            self.roster,
            self.features[idx],
            self.predictions[idx],
            self.truths[idx],
        )


@dataclass
class MetaBatch:
    """One training batch drawn from a single task (float64 views)."""

    task_id: str
    features: np.ndarray
    predictions: np.ndarray
    truths: np.ndarray

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class JointMetaDataset:
    """Task shards balanced to a common epoch size by seeded oversampling."""

    shards: tuple[MetaShard, ...]
    seed: int
    target_size: int = field(init=False)
    oversample_indices: tuple[np.ndarray, ...] = field(init=False)

    def __post_init__(self) -> None:
        self.shards = tuple(self.shards)
        if not self.shards:
            raise EmptyDataset("joint dataset needs at least one shard")
        roster = self.shards[0].roster
        for shard in self.shards[1:]:
            if shard.roster != roster:
                raise RosterMismatch(
                    f"shard {shard.task_id!r} roster {shard.roster} != {roster}"
                )
        self.target_size = max(s.n_samples for s in self.shards)
        self.oversample_indices = tuple(
            _epoch_sequence(s.n_samples, self.target_size, self.seed, i, epoch_seed=0)
            for i, s in enumerate(self.shards)
        )

    @property
    def roster(self) -> tuple[str, ...]:
        return self.shards[0].roster


def _epoch_sequence(n: int, target: int, seed: int, shard_index: int, epoch_seed: int) -> np.ndarray:
    """Repeated seeded permutations of ``range(n)`` truncated to ``target``.

    Every index appears either floor(target/n) or ceil(target/n) times, so
    minority tasks get full coverage each epoch with bounded repetition skew.
    """
    rng = np.random.default_rng(
        [seed & 0x7FFFFFFFFFFFFFFF, shard_index, epoch_seed & 0x7FFFFFFFFFFFFFFF]
    )
    rounds = -(-target // n)
    seq = np.concatenate([rng.permutation(n) for _ in range(rounds)])
    return seq[:target]


def build_joint_dataset(shards: Sequence[MetaShard], seed: int) -> JointMetaDataset:
    """Balance shards to the largest task's size (seeded)."""
    return JointMetaDataset(tuple(shards), seed)


def batch_iterator(
    joint: JointMetaDataset, batch_size: int, epoch_seed: int = 0
) -> Iterator[MetaBatch]:
    """Yield one epoch of batches, alternating tasks in round-robin order.

    All tasks contribute exactly ``target_size`` samples per epoch; the final
    round per task may be short. ``epoch_seed=0`` walks the stored
    ``oversample_indices``; other values regenerate the per-task sequences
    with the same repetition scheme so every epoch sees a fresh ordering.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if epoch_seed == 0:
        sequences = joint.oversample_indices
    else:
        sequences = tuple(
            _epoch_sequence(s.n_samples, joint.target_size, joint.seed, i, epoch_seed)
            for i, s in enumerate(joint.shards)
        )
    n_rounds = -(-joint.target_size // batch_size)
    for r in range(n_rounds):
        lo, hi = r * batch_size, min((r + 1) * batch_size, joint.target_size)
        for shard, seq in zip(joint.shards, sequences):
            idx = seq[lo:hi]
            yield MetaBatch(
                shard.task_id,
                shard.features[idx].astype(np.float64),
                shard.predictions[idx].astype(np.float64),
                shard.truths[idx].astype(np.float64),
            )
