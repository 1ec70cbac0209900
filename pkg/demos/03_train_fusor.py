"""Training the fusor on two tasks with different archetype mixes.

Training starts from the uniform mean ensemble (all parameters zero) and
minimizes the Huber loss of the fused forecast. Tasks are oversampled to a
common size and batches alternate between them, so the small task cannot be
drowned out by the big one.
"""

import tempfile
from pathlib import Path

import numpy as np

from timefuse import (
    TrainConfig,
    build_joint_dataset,
    export_theta,
    predict_weights,
    train_fusor,
)
from timefuse.simulate import make_task_shards

tasks = {
    "mostly_waves": ({"periodic": 0.6, "mean_reverting": 0.2, "drifting": 0.2}, 240),
    "mostly_drift": ({"periodic": 0.2, "mean_reverting": 0.3, "drifting": 0.5}, 90),
}
train_shards = []
for i, (task, (mix, n)) in enumerate(tasks.items()):
    shard, _ = make_task_shards(task, mix, n_train=n, n_test=10, seed=20 + i)
    train_shards.append(shard)
    print(f"task {task}: {shard.n_samples} samples")

joint = build_joint_dataset(train_shards, seed=0)
print(f"joint dataset: target_size={joint.target_size} per task\n")

model = train_fusor(
    joint,
    TrainConfig(seed=0, max_epochs=30),
    on_epoch=lambda e, tr, va: print(f"  epoch {e:2d}  train={tr:.4f}  val={va:.4f}"),
)
print(f"\nselected epoch: {model.selected_epoch}")

print("\nPredicted weights for one window of each archetype:")
from timefuse import extract_meta_features
from timefuse.simulate import ARCHETYPES, generate_series

rng = np.random.default_rng(5)
for name in ARCHETYPES:
    feats = extract_meta_features(generate_series(name, rng, 96, 1))
    weights = predict_weights(model, feats)
    cells = ", ".join(f"{m}={w:.2f}" for m, w in zip(model.roster, weights))
    print(f"  {name:<15} -> {cells}")

with tempfile.TemporaryDirectory() as tmp:
    csv_path = Path(tmp) / "theta.csv"
    export_theta(model, csv_path, shards=train_shards)
    print(f"\nexported parameter matrix ({csv_path.name}):")
    for line in csv_path.read_text().splitlines()[:4]:
        print("  " + line[:100])
    print("  ...")
