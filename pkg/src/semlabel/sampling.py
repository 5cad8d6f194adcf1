"""Bagging-based instance augmentation and class rebalancing.

A bag is a fixed-size random sample, with replacement, of one attribute's
values; its name is an exact replica of the parent attribute's name. Bags
are drawn both when building training sets and, optionally, at prediction
time; the two phases use distinct RNG streams keyed by the attribute so
draws are reproducible and independent of execution order.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .corpus import Attribute, SemanticLabel
from .errors import SamplingError
from .featurize import FeatureVector
from .streams import rng_for, stream_id


@dataclass(frozen=True)
class BagConfig:
    num_bags: int
    bag_size: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_bags < 1 or self.bag_size < 1:
            raise SamplingError(
                f"num_bags and bag_size must be >= 1 (got {self.num_bags}, {self.bag_size})"
            )


@dataclass(frozen=True)
class Bag:
    """A sampled training/prediction instance of one attribute."""

    parent: tuple[str, str]  # (source_name, attribute_name)
    name: str
    values: tuple[str, ...]


class Rebalance(Enum):
    NONE = "none"
    MEAN = "mean"
    MAX = "max"


def train_stream(source_name: str, attribute_name: str) -> int:
    return stream_id(source_name, attribute_name, "train")


def predict_stream(source_name: str, attribute_name: str) -> int:
    return stream_id(source_name, attribute_name, "predict")


def make_bags(attr: Attribute, cfg: BagConfig, stream: int) -> list[Bag]:
    """Draw cfg.num_bags bags of cfg.bag_size values, with replacement."""
    n = len(attr.values)
    if n == 0:
        raise SamplingError(f"cannot bag empty attribute {attr.name!r}")
    rng = rng_for(cfg.seed, "bag", stream)
    picks = rng.integers(0, n, size=(cfg.num_bags, cfg.bag_size))
    parent = (attr.source_name, attr.name)
    return [
        Bag(parent=parent, name=attr.name, values=tuple(attr.values[i] for i in row))
        for row in picks
    ]


Instance = tuple[FeatureVector, SemanticLabel]


def rebalance_indices(
    targets: Sequence[SemanticLabel],
    strategy: Rebalance,
    seed: int = 0,
) -> list[int]:
    """Instance positions after rebalancing a list with the given labels."""
    if not targets:
        raise SamplingError("cannot rebalance an empty instance list")
    if strategy is Rebalance.NONE:
        return list(range(len(targets)))
    groups: dict[SemanticLabel, list[int]] = {}
    for i, label in enumerate(targets):
        groups.setdefault(label, []).append(i)
    counts = [len(ix) for ix in groups.values()]
    if strategy is Rebalance.MEAN:
        target = round(sum(counts) / len(counts))
    else:
        target = max(counts)
    out: list[int] = []
    for label in sorted(groups, key=lambda l: l.identifier):
        ix = groups[label]
        rng = rng_for(seed, "rebalance", label.identifier)
        if len(ix) > target:
            keep = rng.choice(len(ix), size=target, replace=False)
            out.extend(ix[j] for j in sorted(keep))
        elif len(ix) < target:
            extra = rng.choice(len(ix), size=target - len(ix), replace=True)
            out.extend(ix)
            out.extend(ix[j] for j in extra)
        else:
            out.extend(ix)
    return out


def rebalance(
    instances: Sequence[Instance],
    strategy: Rebalance,
    seed: int = 0,
) -> list[Instance]:
    """Equalize per-class instance counts.

    MEAN sets every class count to round(mean count) (half-to-even), down-
    sampling without replacement and up-sampling by duplicating uniformly
    with replacement. MAX up-samples every class to the maximum count.
    """
    picks = rebalance_indices([label for _, label in instances], strategy, seed)
    return [instances[i] for i in picks]


def aggregate_bag_predictions(per_bag: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise mean of per-bag probability vectors."""
    if len(per_bag) == 0:
        raise SamplingError("no per-bag predictions to aggregate")
    lengths = {len(v) for v in per_bag}
    if len(lengths) != 1:
        raise SamplingError(f"mismatched prediction lengths: {sorted(lengths)}")
    return np.mean(np.stack(per_bag), axis=0)
