"""Adaptive fusion against the static-ensemble baselines.

Runs mean/median/top-k/forward-selection/zero-shot-similarity baselines and
the trained fusor on two test tasks, prints the leaderboard, and closes
with the rank-first analysis: the share of samples on which each model is
personally the best, plus how often the fused forecast beats the overall
best individual.
"""

from timefuse import (
    TrainConfig,
    build_joint_dataset,
    evaluate_methods,
    leaderboard_csv,
    rank_first_analysis,
    train_fusor,
)
from timefuse.simulate import make_task_shards

mixes = {
    "waves": {"periodic": 0.5, "mean_reverting": 0.25, "drifting": 0.25},
    "drifts": {"periodic": 0.2, "mean_reverting": 0.4, "drifting": 0.4},
}
shards = []
for i, (task, mix) in enumerate(mixes.items()):
    tr, te = make_task_shards(task, mix, n_train=250, n_test=120, seed=100 + i)
    shards.extend([tr, te])

train_shards = [s for s in shards if s.split == "meta_train"]
model = train_fusor(build_joint_dataset(train_shards, 0), TrainConfig(seed=0))

methods = ["fused", "mean", "median", "topk:2", "forward", "zeroshot", "best-individual"]
table = evaluate_methods(shards, methods, model=model)

print("MSE per task and method:")
width = max(len(m) for m in methods) + 2
print(f"{'task':<10}" + "".join(f"{m:>{width}}" for m in methods))
for task, row in sorted(table.items()):
    print(f"{task:<10}" + "".join(f"{row[m].mse:>{width}.4f}" for m in methods))

print("\nfull leaderboard CSV (first 2 lines):")
for line in leaderboard_csv(table).splitlines()[:2]:
    print("  " + line[:120] + ("..." if len(line) > 120 else ""))

test_shards = [s for s in shards if s.split == "test"]
report = rank_first_analysis(test_shards, model=model)
print("\nrank-first fractions (share of samples where each model wins):")
for name, frac in zip(report.roster, report.fractions):
    print(f"  {name:<18} {frac:6.1%}")
print(
    f"\nfused beats the best individual ({report.best_individual}) on "
    f"{report.fused_beats_best:.1%} of test samples"
)
