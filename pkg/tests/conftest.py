import numpy as np
import pytest

from timefuse.baselines import zoo_prediction_tensor
from timefuse.dataset import MetaSample, MetaShard, PredictionTensor


def random_window(rng: np.random.Generator, t: int = 96, d: int = 1) -> np.ndarray:
    """A window whose variables mix qualitatively different processes."""
    cols = []
    for _ in range(d):
        kind = rng.integers(0, 5)
        if kind == 0:  # scaled gaussian noise
            col = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 10.0), size=t)
        elif kind == 1:  # AR(1)
            phi = rng.uniform(-0.9, 0.95)
            col = np.empty(t)
            col[0] = rng.normal()
            for i in range(1, t):
                col[i] = phi * col[i - 1] + rng.normal(0, 1.0)
        elif kind == 2:  # random walk
            col = np.cumsum(rng.normal(0, rng.uniform(0.1, 2.0), size=t))
        elif kind == 3:  # noisy sinusoid
            period = rng.integers(4, t // 2)
            amp = rng.uniform(0.5, 5.0)
            phase = rng.uniform(0, 2 * np.pi)
            col = amp * np.sin(2 * np.pi * np.arange(t) / period + phase)
            col += rng.normal(0, 0.2, size=t)
        else:  # trending
            col = rng.uniform(-1, 1) * np.arange(t) + rng.normal(0, 0.5, size=t)
        cols.append(col)
    return np.column_stack(cols)


def toy_shard(
    rng: np.random.Generator,
    task_id: str = "toy",
    split: str = "meta_train",
    n: int = 8,
    k: int = 3,
    t_out: int = 4,
    d: int = 2,
    roster: tuple[str, ...] | None = None,
) -> MetaShard:
    """A shard with random features/predictions/truths (no zoo involved)."""
    roster = roster or tuple(f"model_{i}" for i in range(k))
    samples = []
    for _ in range(n):
        samples.append(
            MetaSample(
                rng.normal(size=24),
                PredictionTensor(rng.normal(size=(k, t_out, d)), roster),
                rng.normal(size=(t_out, d)),
            )
        )
    return MetaShard.from_samples(task_id, split, samples)


def shard_from_windows(task_id, split, pairs, zoo, t_out):
    """Shard built by running the synthetic zoo over (window, truth) pairs."""
    from timefuse.dataset import collect_meta_sample

    samples = [
        collect_meta_sample(w, zoo_prediction_tensor(w, zoo, t_out), y) for w, y in pairs
    ]
    return MetaShard.from_samples(task_id, split, samples)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
