"""Cross-validation protocols and the bagging-parameter sweep.

Runs leave-one-out and repeated holdout on a synthetic corpus, then sweeps
num_bags to produce plot-ready (num_bags, bag_size, mean_mrr) rows showing
how bagging behaves when labeled sources are scarce.
"""
from semlabel import (
    BagConfig,
    ForestConfig,
    HoldoutConfig,
    RunConfig,
    default_spec,
    generate_synthetic,
    leave_one_out,
    repeated_holdout,
    sweep_bagging,
)
from semlabel.evaluate import sweep_to_csv

corpus = generate_synthetic(
    default_spec(n_sources=8, n_labels=5, unknown_fraction=0.1, rows=(30, 60)),
    seed=5,
)
cfg = RunConfig(
    model="forest",
    features="base",
    bagging=BagConfig(num_bags=10, bag_size=20, seed=5),
    predict_bagging=True,
    seed=5,
    forest=ForestConfig(n_trees=24),
)

print("=== leave one out (plenty of training sources per fold) ===")
loo = leave_one_out(corpus, cfg)
for fold in loo.folds:
    print(f"  {fold.fold_id:<18} MRR={fold.mrr:.3f}  "
          f"train={fold.train_seconds:.1f}s predict={fold.predict_seconds:.1f}s")
print(f"mean MRR: {loo.mean_mrr:.4f}\n")

print("=== repeated holdout (scarce training: p=0.25, n=5) ===")
holdout = HoldoutConfig(p=0.25, n=5, seed=5)
rep = repeated_holdout(corpus, holdout, cfg)
for fold in rep.folds:
    status = "skipped" if fold.skipped else f"MRR={fold.mrr:.3f}"
    print(f"  {fold.fold_id:<12} {status}")
print(f"mean MRR: {rep.mean_mrr:.4f}\n")

print("=== sweep num_bags at fixed bag_size=20 ===")
rows = sweep_bagging(corpus, [1, 5, 10, 20], [20], holdout, cfg)
print(sweep_to_csv(rows))
