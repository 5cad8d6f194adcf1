"""Train a classifier and rank semantic labels for unseen columns.

Generates a synthetic labeled corpus, trains a random forest on every
source but one, and prints the ranked label predictions for the held-out
table, including round-tripping the model through its file format.
"""
import tempfile
from pathlib import Path

from semlabel import (
    BagConfig,
    ForestConfig,
    RunConfig,
    default_spec,
    generate_synthetic,
    load_model,
    predict_attribute,
    save_model,
)
from semlabel.evaluate import build_training, fit_model

corpus = generate_synthetic(
    default_spec(n_sources=6, n_labels=5, unknown_fraction=0.1, rows=(40, 80)),
    seed=11,
)
names = corpus.source_names()
held_out = names[-1]
print(f"corpus: {len(names)} sources, {corpus.n_attributes} columns, "
      f"{len(corpus.known_labels())} known labels; holding out {held_out!r}")

cfg = RunConfig(
    model="forest",
    features="all",
    bagging=BagConfig(num_bags=20, bag_size=30, seed=11),
    predict_bagging=True,
    seed=11,
    forest=ForestConfig(n_trees=32),
)
index, data = build_training(corpus, names[:-1], cfg)
model = fit_model(data, cfg, index)
print(f"trained on {data.n_instances} bag instances "
      f"({model.train_seconds:.1f}s)\n")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.slb"
    save_model(model, path)
    model = load_model(path)  # predictions are bitwise identical after reload

source = next(s for s in corpus.sources if s.name == held_out)
for attr in source.attributes:
    truth = corpus.label_of(held_out, attr.name)
    ranking = predict_attribute(
        model, attr, model.profile_index, cfg.features, cfg.bagging
    )
    top3 = ", ".join(f"{lab.identifier}:{p:.2f}" for lab, p in ranking.ranked[:3])
    mark = "ok " if ranking.top == truth else "MISS"
    print(f"[{mark}] {attr.name:>14}  true={truth.identifier:<16} top3: {top3}")
