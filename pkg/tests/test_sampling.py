import random
from collections import Counter

import numpy as np
import pytest

from semlabel.corpus import SemanticLabel
from semlabel.errors import SamplingError
from semlabel.featurize import FeatureVector, feature_schema
from semlabel.sampling import (
    BagConfig,
    Rebalance,
    aggregate_bag_predictions,
    make_bags,
    rebalance,
    train_stream,
    predict_stream,
)

from conftest import column


def fv(tag: float) -> FeatureVector:
    return FeatureVector(
        feature_set="base",
        values=np.full(101, tag),
        schema=feature_schema("base"),
    )


def label(name: str) -> SemanticLabel:
    return SemanticLabel(name, "p")


class TestMakeBags:
    def test_counts_and_provenance(self):
        attr = column("src", "a", ["x", "y", "z"])
        bags = make_bags(attr, BagConfig(num_bags=5, bag_size=10, seed=1), 0)
        assert len(bags) == 5
        for bag in bags:
            assert len(bag.values) == 10
            assert set(bag.values) <= {"x", "y", "z"}
            assert bag.name == "a"
            assert bag.parent == ("src", "a")

    def test_large_bagging_configuration(self):
        attr = column("src", "big", [str(i) for i in range(50)])
        bags = make_bags(attr, BagConfig(num_bags=100, bag_size=100, seed=0), 7)
        assert len(bags) == 100
        assert all(len(b.values) == 100 for b in bags)

    def test_deterministic_per_stream(self):
        attr = column("src", "a", ["p", "q", "r", "s"])
        cfg = BagConfig(num_bags=3, bag_size=6, seed=9)
        assert make_bags(attr, cfg, 4) == make_bags(attr, cfg, 4)
        assert make_bags(attr, cfg, 4) != make_bags(attr, cfg, 5)

    def test_train_and_predict_streams_differ(self):
        assert train_stream("s", "a") != predict_stream("s", "a")
        assert train_stream("s", "a") == train_stream("s", "a")

    def test_empty_attribute_rejected(self):
        with pytest.raises(SamplingError, match="empty"):
            make_bags(column("s", "e", []), BagConfig(1, 1), 0)

    def test_config_validation(self):
        with pytest.raises(SamplingError):
            BagConfig(num_bags=0, bag_size=5)
        with pytest.raises(SamplingError):
            BagConfig(num_bags=5, bag_size=0)


def counts_of(instances) -> Counter:
    return Counter(lab.identifier for _, lab in instances)


class TestRebalance:
    def test_mean_example(self):
        instances = [(fv(i), label("A")) for i in range(4)] + [
            (fv(i), label("B")) for i in range(2)
        ]
        out = rebalance(instances, Rebalance.MEAN, seed=1)
        assert counts_of(out) == Counter({"A.p": 3, "B.p": 3})

    def test_already_balanced_unchanged_counts(self):
        instances = [(fv(i), label("A")) for i in range(5)] + [
            (fv(i), label("B")) for i in range(5)
        ]
        out = rebalance(instances, Rebalance.MEAN, seed=1)
        assert counts_of(out) == Counter({"A.p": 5, "B.p": 5})

    def test_max_example(self):
        instances = [(fv(i), label("A")) for i in range(4)] + [
            (fv(i), label("B")) for i in range(2)
        ]
        out = rebalance(instances, Rebalance.MAX, seed=1)
        assert counts_of(out) == Counter({"A.p": 4, "B.p": 4})

    def test_none_returns_input(self):
        instances = [(fv(1), label("A")), (fv(2), label("B"))]
        assert rebalance(instances, Rebalance.NONE) == instances

    def test_upsampling_keeps_originals(self):
        originals = [(fv(i), label("B")) for i in range(2)]
        instances = [(fv(10 + i), label("A")) for i in range(8)] + originals
        out = rebalance(instances, Rebalance.MAX, seed=3)
        b_instances = [inst for inst in out if inst[1] == label("B")]
        for original in originals:
            assert original in b_instances

    def test_empty_rejected(self):
        with pytest.raises(SamplingError):
            rebalance([], Rebalance.MEAN)

    def test_deterministic(self):
        instances = [(fv(i), label("A")) for i in range(7)] + [
            (fv(i), label("B")) for i in range(3)
        ]
        one = rebalance(instances, Rebalance.MEAN, seed=5)
        two = rebalance(instances, Rebalance.MEAN, seed=5)
        assert one == two

    def test_exactness_randomized(self):
        rnd = random.Random(17)
        for _ in range(200):
            n_classes = rnd.randrange(1, 6)
            instances = []
            for c in range(n_classes):
                instances.extend(
                    (fv(c), label(f"L{c}")) for _ in range(rnd.randrange(1, 20))
                )
            counts = list(counts_of(instances).values())
            mean_target = round(sum(counts) / len(counts))
            out_mean = rebalance(instances, Rebalance.MEAN, seed=rnd.randrange(100))
            assert set(counts_of(out_mean).values()) == {mean_target}
            out_max = rebalance(instances, Rebalance.MAX, seed=rnd.randrange(100))
            assert set(counts_of(out_max).values()) == {max(counts)}

    def test_half_to_even_rounding(self):
        # counts 2 and 3: mean 2.5 rounds to 2 (banker's rounding)
        instances = [(fv(i), label("A")) for i in range(2)] + [
            (fv(i), label("B")) for i in range(3)
        ]
        out = rebalance(instances, Rebalance.MEAN, seed=0)
        assert set(counts_of(out).values()) == {2}


class TestAggregate:
    def test_single_vector_unchanged(self):
        v = np.array([0.2, 0.8])
        assert np.array_equal(aggregate_bag_predictions([v]), v)

    def test_symmetric_pair(self):
        out = aggregate_bag_predictions([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert np.allclose(out, [0.5, 0.5])

    def test_mean_example(self):
        out = aggregate_bag_predictions(
            [np.array([0.8, 0.2]), np.array([0.6, 0.4]), np.array([0.7, 0.3])]
        )
        assert np.allclose(out, [0.7, 0.3], atol=1e-12)
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(SamplingError, match="mismatched"):
            aggregate_bag_predictions([np.array([0.5, 0.5]), np.array([1.0])])

    def test_empty_rejected(self):
        with pytest.raises(SamplingError):
            aggregate_bag_predictions([])
