import struct

import numpy as np
import pytest

from semlabel.corpus import SemanticLabel, UNKNOWN
from semlabel.errors import ModelFormatError, SchemaMismatchError, TrainingError
from semlabel.featurize import (
    FeatureVector,
    assemble,
    build_class_profiles,
    feature_schema,
)
from semlabel.forest import ForestConfig
from semlabel.mlp import MlpConfig
from semlabel.models import (
    MODEL_MAGIC,
    load_model,
    model_file_json,
    predict_attribute,
    predict_proba,
    rank_probabilities,
    save_model,
    train_forest,
    train_mlp,
    training_set_from_instances,
)
from semlabel.sampling import BagConfig, aggregate_bag_predictions, make_bags, predict_stream
from semlabel.streams import rng_for

from conftest import column

LABEL_A = SemanticLabel("A", "p")
LABEL_B = SemanticLabel("B", "p")


def base_fv(values: np.ndarray) -> FeatureVector:
    return FeatureVector(feature_set="base", values=values, schema=feature_schema("base"))


def toy_training_set(n=16, seed=0):
    rng = rng_for(seed, "toy-models")
    rows = []
    for i in range(n):
        values = np.zeros(101)
        label = LABEL_A if i % 2 == 0 else LABEL_B
        offset = 0 if label == LABEL_A else 10
        values[offset : offset + 5] = 1.0 + rng.normal(scale=0.05, size=5)
        rows.append((base_fv(values), label))
    return training_set_from_instances(rows)


class TestTrainingSet:
    def test_label_order_defaults_to_sorted(self):
        data = toy_training_set()
        assert data.label_order == (LABEL_A, LABEL_B)

    def test_target_outside_label_order_rejected(self):
        fv = base_fv(np.zeros(101))
        with pytest.raises(TrainingError, match="not in label order"):
            training_set_from_instances([(fv, LABEL_A)], label_order=(LABEL_B,))

    def test_mixed_schemas_rejected(self):
        a = base_fv(np.zeros(101))
        b = FeatureVector(feature_set="all", values=np.zeros(10), schema=("x",) * 10)
        with pytest.raises(TrainingError, match="schema"):
            training_set_from_instances([(a, LABEL_A), (b, LABEL_B)])

    def test_empty_rejected(self):
        with pytest.raises(TrainingError, match="empty"):
            training_set_from_instances([])


class TestTrainErrors:
    def test_single_class_rejected(self):
        fv = [(base_fv(np.ones(101) * i), LABEL_A) for i in range(4)]
        data = training_set_from_instances(fv)
        with pytest.raises(TrainingError, match="single class"):
            train_forest(data, ForestConfig(n_trees=2))
        with pytest.raises(TrainingError, match="single class"):
            train_mlp(data, MlpConfig(hidden_layers=(4,), epochs=1))


class TestPredictProba:
    def test_simplex(self):
        data = toy_training_set()
        model = train_forest(data, ForestConfig(n_trees=8, seed=1))
        rng = rng_for(5, "queries")
        for _ in range(100):
            fv = base_fv(rng.normal(size=101))
            probs = predict_proba(model, fv)
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)
            assert (probs >= 0.0).all()

    def test_schema_mismatch_rejected(self):
        data = toy_training_set()
        model = train_forest(data, ForestConfig(n_trees=2, seed=1))
        wrong = FeatureVector(feature_set="all", values=np.zeros(5), schema=("a",) * 5)
        with pytest.raises(SchemaMismatchError):
            predict_proba(model, wrong)


class TestRanking:
    def test_descending_order(self):
        ranked = rank_probabilities((LABEL_A, LABEL_B), np.array([0.1, 0.9]))
        assert ranked[0] == (LABEL_B, 0.9)
        assert ranked[1] == (LABEL_A, 0.1)

    def test_tie_breaks_lexicographically(self):
        ranked = rank_probabilities((LABEL_B, LABEL_A), np.array([0.5, 0.5]))
        assert ranked[0][0] == LABEL_A

    def test_rank_of(self):
        from semlabel.models import PredictionRanking

        ranking = PredictionRanking(
            attribute=("s", "a"),
            ranked=((LABEL_B, 0.9), (LABEL_A, 0.1)),
        )
        assert ranking.rank_of(LABEL_B) == 1
        assert ranking.rank_of(LABEL_A) == 2
        assert ranking.rank_of(UNKNOWN) is None
        assert ranking.top == LABEL_B


def trained_pipeline_model(feature_set="all"):
    train = [
        (column("s1", "name", ["Alice Smith", "Bob Jones", "Eve Brown"]),
         SemanticLabel("Person", "name")),
        (column("s1", "total", ["12", "345", "6789"]),
         SemanticLabel("Stat", "count")),
        (column("s2", "fullname", ["Carol White", "Dan Black"]),
         SemanticLabel("Person", "name")),
        (column("s2", "amount", ["42", "7", "90210"]),
         SemanticLabel("Stat", "count")),
    ]
    index = build_class_profiles(train)
    rows = [(assemble(attr, feature_set, index), label) for attr, label in train]
    data = training_set_from_instances(rows)
    model = train_forest(data, ForestConfig(n_trees=16, seed=3), profile_index=index)
    return model, index


class TestPredictAttribute:
    def test_ranking_covers_all_labels(self):
        model, index = trained_pipeline_model()
        attr = column("t", "person", ["Mallory Green", "Trent Blue"])
        ranking = predict_attribute(model, attr, index, "all")
        assert len(ranking.ranked) == 2
        assert ranking.top == SemanticLabel("Person", "name")
        assert ranking.attribute == ("t", "person")

    def test_empty_attribute_rejected(self):
        model, index = trained_pipeline_model()
        with pytest.raises(SchemaMismatchError, match="empty"):
            predict_attribute(model, column("t", "e", []), index, "all")

    def test_feature_set_mismatch_rejected(self):
        model, index = trained_pipeline_model()
        with pytest.raises(SchemaMismatchError, match="feature set"):
            predict_attribute(model, column("t", "a", ["x"]), index, "base")

    def test_bagged_prediction_equals_external_mean(self):
        model, index = trained_pipeline_model()
        attr = column("t", "person", ["Oscar Gray", "Peggy Gold", "Victor Silver"])
        cfg = BagConfig(num_bags=10, bag_size=5, seed=11)
        ranking = predict_attribute(model, attr, index, "all", predict_bagging=cfg)

        bags = make_bags(attr, cfg, predict_stream(attr.source_name, attr.name))
        per_bag = [
            predict_proba(model, assemble(bag, "all", index)) for bag in bags
        ]
        expected = aggregate_bag_predictions(per_bag)
        by_label = {label: p for label, p in ranking.ranked}
        for i, label in enumerate(model.label_order):
            assert by_label[label] == pytest.approx(expected[i], abs=1e-12)


class TestPersistence:
    def test_forest_round_trip_bitwise(self, tmp_path):
        model, index = trained_pipeline_model()
        path = tmp_path / "m.slb"
        save_model(model, path)
        clone = load_model(path)
        assert clone.kind == "forest"
        assert clone.label_order == model.label_order
        assert clone.feature_schema == model.feature_schema
        rng = rng_for(1, "roundtrip")
        X = rng.random((100, len(model.feature_schema)))
        assert np.array_equal(clone.predict_matrix(X), model.predict_matrix(X))

    def test_mlp_round_trip_bitwise(self, tmp_path):
        data = toy_training_set()
        model = train_mlp(data, MlpConfig(hidden_layers=(8,), epochs=2, seed=1))
        path = tmp_path / "m.slb"
        save_model(model, path)
        clone = load_model(path)
        rng = rng_for(2, "roundtrip")
        X = rng.normal(size=(100, 101))
        assert np.array_equal(clone.predict_matrix(X), model.predict_matrix(X))

    def test_save_is_byte_deterministic(self, tmp_path):
        model, _ = trained_pipeline_model()
        save_model(model, tmp_path / "a.slb")
        save_model(model, tmp_path / "b.slb")
        assert (tmp_path / "a.slb").read_bytes() == (tmp_path / "b.slb").read_bytes()

    def test_truncated_file_checksum_error(self, tmp_path):
        model, _ = trained_pipeline_model()
        path = tmp_path / "m.slb"
        save_model(model, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 7])
        with pytest.raises(ModelFormatError, match="checksum"):
            load_model(path)

    def test_corrupted_payload_checksum_error(self, tmp_path):
        model, _ = trained_pipeline_model()
        path = tmp_path / "m.slb"
        save_model(model, path)
        raw = bytearray(path.read_bytes())
        raw[50] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(ModelFormatError, match="checksum"):
            load_model(path)

    def test_version_mismatch_names_both_versions(self, tmp_path):
        path = tmp_path / "m.slb"
        path.write_bytes(MODEL_MAGIC + struct.pack("<I", 99) + struct.pack("<Q", 0) + b"\0" * 32)
        with pytest.raises(ModelFormatError, match=r"99.*expected 1"):
            load_model(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.slb"
        path.write_bytes(b"NOPE" + b"\0" * 40)
        with pytest.raises(ModelFormatError, match="magic"):
            load_model(path)

    def test_profile_index_survives(self, tmp_path):
        model, index = trained_pipeline_model()
        path = tmp_path / "m.slb"
        save_model(model, path)
        clone = load_model(path)
        assert clone.profile_index is not None
        assert clone.profile_index.labels == index.labels
        attr = column("t", "who", ["Grace Hopper"])
        a = predict_attribute(model, attr, model.profile_index, "all")
        b = predict_attribute(clone, attr, clone.profile_index, "all")
        assert a.ranked == b.ranked

    def test_model_file_json(self, tmp_path):
        model, _ = trained_pipeline_model()
        path = tmp_path / "m.slb"
        save_model(model, path)
        doc = model_file_json(path)
        assert doc["format_version"] == 1
        assert doc["kind"] == "forest"
        assert doc["payload"]["feature_set"] == "all"
