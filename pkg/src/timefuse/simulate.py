"""Synthetic forecasting tasks for desk-scale end-to-end runs.

Three window archetypes with clearly separated temporal character:

- ``periodic``: sinusoid plus noise; a seasonal-copy forecaster excels, and
  the dominant-frequency feature pins the period.
- ``mean_reverting``: stationary AR(1); a fitted AR forecaster excels and
  the unit-root test rejects.
- ``drifting``: random walk; repeating the last value is as good as it
  gets and the unit-root test does not reject.

Tasks mix archetypes in chosen proportions so that the per-sample best zoo
model is predictable from the meta-features alone, which is exactly the
regime where adaptive fusion pays off.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .baselines import zoo_prediction_tensor
from .dataset import MetaShard, collect_meta_sample

DEFAULT_ZOO = ("seasonal_naive:24", "ar_p:1", "naive_last")

ARCHETYPES = ("periodic", "mean_reverting", "drifting")


def _periodic(rng: np.random.Generator, length: int, d: int) -> np.ndarray:
    t = np.arange(length)[:, None]
    phase = rng.uniform(0.0, 2 * np.pi, size=d)
    level = rng.uniform(-2.0, 2.0, size=d)
    wave = 3.0 * np.sin(2 * np.pi * (t / 24.0) + phase)
    return level + wave + rng.normal(0.0, 0.3, size=(length, d))


def _mean_reverting(rng: np.random.Generator, length: int, d: int) -> np.ndarray:
    phi, sigma = 0.6, 1.0
    level = rng.uniform(-2.0, 2.0, size=d)
    stationary_std = sigma / np.sqrt(1.0 - phi**2)
    x = np.empty((length, d))
    x[0] = level + rng.normal(0.0, stationary_std, size=d)
    for t in range(1, length):
        x[t] = level + phi * (x[t - 1] - level) + rng.normal(0.0, sigma, size=d)
    return x


def _drifting(rng: np.random.Generator, length: int, d: int) -> np.ndarray:
    start = rng.uniform(-2.0, 2.0, size=d)
    steps = rng.normal(0.0, 0.5, size=(length - 1, d))
    return np.vstack([start, start + np.cumsum(steps, axis=0)])


_GENERATORS = {
    "periodic": _periodic,
    "mean_reverting": _mean_reverting,
    "drifting": _drifting,
}


def generate_series(
    archetype: str, rng: np.random.Generator, length: int, d: int = 1
) -> np.ndarray:
    if archetype not in _GENERATORS:
        raise ValueError(f"unknown archetype {archetype!r}, pick from {ARCHETYPES}")
    return _GENERATORS[archetype](rng, length, d)


def _archetype_schedule(
    mix: Mapping[str, float], n: int, rng: np.random.Generator
) -> list[str]:
    """Exact per-archetype counts matching the mix, in shuffled order."""
    names = [a for a in ARCHETYPES if mix.get(a, 0.0) > 0]
    weights = np.array([mix[a] for a in names], dtype=np.float64)
    weights /= weights.sum()
    counts = np.floor(weights * n).astype(int)
    while counts.sum() < n:
        counts[int(np.argmax(weights * n - counts))] += 1
    schedule = [name for name, c in zip(names, counts) for _ in range(c)]
    rng.shuffle(schedule)
    return schedule


def make_windows(
    mix: Mapping[str, float],
    n: int,
    t_in: int = 96,
    t_out: int = 24,
    d: int = 1,
    seed: int = 0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Generate ``n`` (window, truth) pairs with the given archetype mix."""
    rng = np.random.default_rng(seed)
    pairs = []
    for archetype in _archetype_schedule(mix, n, rng):
        series = generate_series(archetype, rng, t_in + t_out, d)
        pairs.append((series[:t_in], series[t_in:]))
    return pairs


def make_task_shards(
    task_id: str,
    mix: Mapping[str, float],
    n_train: int,
    n_test: int,
    zoo: Sequence[str] = DEFAULT_ZOO,
    t_in: int = 96,
    t_out: int = 24,
    d: int = 1,
    seed: int = 0,
) -> tuple[MetaShard, MetaShard]:
    """Build (meta_train, test) shards for one synthetic task.

    Every sample carries the zoo's forecasts next to the ground truth, so the
    result feeds straight into fusor training and baseline evaluation.
    """
    def build(n: int, split: str, sub_seed: int) -> MetaShard:
        pairs = make_windows(mix, n, t_in, t_out, d, seed=sub_seed)
        samples = [
            collect_meta_sample(window, zoo_prediction_tensor(window, zoo, t_out), truth)
            for window, truth in pairs
        ]
        return MetaShard.from_samples(task_id, split, samples)

    base = seed & 0x7FFFFFFF
    return build(n_train, "meta_train", base * 2 + 1), build(n_test, "test", base * 2 + 2)
