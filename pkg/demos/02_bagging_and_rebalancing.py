"""Bagging augmentation and class rebalancing.

A column's meaning does not change with its row count, so many training
instances can be drawn from one labeled column by sampling rows with
replacement. Rebalancing then equalizes per-class instance counts.
"""
from collections import Counter

import numpy as np

from semlabel import (
    BagConfig,
    FeatureVector,
    Rebalance,
    feature_schema,
    make_bags,
    rebalance,
)
from semlabel.corpus import Attribute, SemanticLabel
from semlabel.sampling import train_stream

attr = Attribute(
    name="city",
    values=("Waterloo", "Eveleigh", "Redfern", "Newtown", "Glebe"),
    source_name="personal-info",
)

print("=== bags: sampled replicas of one attribute ===")
cfg = BagConfig(num_bags=4, bag_size=6, seed=7)
bags = make_bags(attr, cfg, train_stream(attr.source_name, attr.name))
for i, bag in enumerate(bags):
    print(f"bag {i}: name={bag.name!r} values={bag.values}")
print(f"-> {cfg.num_bags} instances from a single labeled column")

print()
print("=== rebalancing an imbalanced training set ===")
schema = feature_schema("base")
city = SemanticLabel("City", "name")
person = SemanticLabel("Person", "name")
instances = [
    (FeatureVector("base", np.zeros(101), schema), city) for _ in range(8)
] + [
    (FeatureVector("base", np.zeros(101), schema), person) for _ in range(2)
]

def show(tag, pairs):
    counts = Counter(label.identifier for _, label in pairs)
    print(f"{tag}: {dict(counts)}")

show("before", instances)
show("resample-to-mean", rebalance(instances, Rebalance.MEAN, seed=1))
show("resample-to-max ", rebalance(instances, Rebalance.MAX, seed=1))
