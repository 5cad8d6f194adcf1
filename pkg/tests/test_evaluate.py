import random
from collections import Counter

import numpy as np
import pytest

from semlabel.config import RunConfig
from semlabel.corpus import SemanticLabel, UNKNOWN, build_corpus
from semlabel.errors import ConfigError, EvaluationError
from semlabel.evaluate import (
    EvaluationReport,
    FoldResult,
    HoldoutConfig,
    build_training,
    emit_report,
    leave_one_out,
    load_report,
    mrr,
    repeated_holdout,
    report_from_dict,
    report_to_dict,
    sweep_bagging,
    sweep_to_csv,
)
from semlabel.forest import ForestConfig
from semlabel.models import PredictionRanking
from semlabel.sampling import BagConfig, Rebalance
from semlabel.synth import default_spec, generate_synthetic

from conftest import make_source

LABELS = [SemanticLabel(f"C{i}", "p") for i in range(6)]


def ranking_with_true_at(rank: int, n_labels: int = 6) -> PredictionRanking:
    """True label C0 placed at the given 1-based rank."""
    probs = np.linspace(1.0, 0.1, n_labels)
    order = [LABELS[i] for i in range(1, n_labels)]
    order.insert(rank - 1, LABELS[0])
    return PredictionRanking(
        attribute=("s", "a"),
        ranked=tuple((lab, float(p)) for lab, p in zip(order, probs)),
        true_label=LABELS[0],
    )


def small_run_cfg(**kwargs) -> RunConfig:
    defaults = dict(
        model="forest",
        features="base",
        seed=5,
        forest=ForestConfig(n_trees=8),
    )
    defaults.update(kwargs)
    return RunConfig(**defaults)


def small_corpus(n_sources=6, seed=7):
    spec = default_spec(n_sources, 3, unknown_fraction=0.15, rows=(8, 15),
                        columns_per_source=5)
    return generate_synthetic(spec, seed)


class TestMrr:
    def test_perfect(self):
        assert mrr([ranking_with_true_at(1)] * 4) == 1.0

    def test_mixed_ranks(self):
        rankings = [ranking_with_true_at(r) for r in (1, 2, 4)]
        assert mrr(rankings) == pytest.approx((1 + 0.5 + 0.25) / 3, abs=1e-12)
        assert mrr(rankings) == pytest.approx(0.5833, abs=1e-4)

    def test_absent_true_label_scores_zero(self):
        ranking = PredictionRanking(
            attribute=("s", "a"),
            ranked=((LABELS[1], 0.6), (LABELS[2], 0.4)),
            true_label=SemanticLabel("Unseen", "p"),
        )
        assert mrr([ranking]) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EvaluationError):
            mrr([])

    def test_missing_true_label_rejected(self):
        ranking = PredictionRanking(attribute=("s", "a"), ranked=((LABELS[0], 1.0),))
        with pytest.raises(EvaluationError, match="true label"):
            mrr([ranking])

    def test_oracle_equivalence(self):
        rnd = random.Random(31)
        for _ in range(1000):
            n = rnd.randrange(2, 7)
            true_rank = rnd.randrange(1, n + 1)
            rankings = [ranking_with_true_at(true_rank, n)]
            # brute-force scan oracle
            ranked = rankings[0].ranked
            oracle = 0.0
            for pos, (lab, _) in enumerate(ranked, 1):
                if lab == rankings[0].true_label:
                    oracle = 1.0 / pos
                    break
            assert mrr(rankings) == pytest.approx(oracle, abs=1e-12)


class TestBuildTraining:
    def test_bagging_cardinality(self):
        corpus = small_corpus()
        cfg = small_run_cfg(bagging=BagConfig(4, 6, seed=5))
        names = corpus.source_names()[:4]
        index, data = build_training(corpus, names, cfg)
        n_attrs = sum(
            1 for attr, _ in corpus.labeled_attributes() if attr.source_name in names
        )
        assert data.n_instances == 4 * n_attrs

    def test_no_bagging_cardinality(self):
        corpus = small_corpus()
        names = corpus.source_names()[:4]
        _, data = build_training(corpus, names, small_run_cfg())
        n_attrs = sum(
            1 for attr, _ in corpus.labeled_attributes() if attr.source_name in names
        )
        assert data.n_instances == n_attrs

    def test_provenance_only_training_sources(self):
        corpus = small_corpus()
        names = corpus.source_names()[:3]
        _, data = build_training(corpus, names, small_run_cfg(bagging=BagConfig(2, 4, seed=1)))
        assert {src for src, _ in data.provenance} <= set(names)

    def test_unknown_excluded_from_label_order(self):
        corpus = small_corpus()
        names = corpus.source_names()
        _, with_unknown = build_training(corpus, names, small_run_cfg(include_unknown=True))
        _, without = build_training(corpus, names, small_run_cfg(include_unknown=False))
        assert UNKNOWN in with_unknown.label_order
        assert UNKNOWN not in without.label_order
        assert without.n_instances < with_unknown.n_instances

    def test_unknown_in_training_flag(self):
        corpus = small_corpus()
        names = corpus.source_names()
        cfg = small_run_cfg(include_unknown=False, unknown_in_training=True)
        _, data = build_training(corpus, names, cfg)
        assert UNKNOWN in data.label_order

    def test_rebalance_applied(self):
        corpus = small_corpus()
        cfg = small_run_cfg(rebalance=Rebalance.MAX)
        _, data = build_training(corpus, corpus.source_names(), cfg)
        counts = np.bincount(data.y)
        assert len(set(counts.tolist())) == 1

    def test_attribute_level_rebalance_before_bagging(self):
        corpus = small_corpus()
        names = corpus.source_names()
        labels = [lab for attr, lab in corpus.labeled_attributes()]
        max_count = max(Counter(labels).values())
        n_classes = len(set(labels))
        cfg = small_run_cfg(
            rebalance=Rebalance.MAX,
            rebalance_attributes=True,
            bagging=BagConfig(3, 4, seed=5),
        )
        _, data = build_training(corpus, names, cfg)
        # every class is padded to max_count attributes, each contributing 3 bags
        assert data.n_instances == n_classes * max_count * 3
        counts = np.bincount(data.y)
        assert set(counts.tolist()) == {max_count * 3}


class TestLeaveOneOut:
    def test_fold_count_matches_sources(self):
        corpus = small_corpus(n_sources=6)
        report = leave_one_out(corpus, small_run_cfg())
        assert report.protocol == "leave_one_out"
        assert len(report.folds) == 6
        assert {f.fold_id for f in report.folds} == {
            f"loo:{name}" for name in corpus.source_names()
        }

    def test_29_sources_give_29_folds(self):
        spec = default_spec(29, 3, rows=(4, 6), columns_per_source=3)
        corpus = generate_synthetic(spec, seed=1)
        report = leave_one_out(corpus, small_run_cfg(forest=ForestConfig(n_trees=2)))
        assert len(report.folds) == 29

    def test_needs_two_sources(self):
        corpus = small_corpus(n_sources=6)
        single = build_corpus(
            [corpus.sources[0]],
            {k: v for k, v in corpus.labels.items() if k[0] == corpus.sources[0].name},
        )
        with pytest.raises(EvaluationError, match=">= 2 sources"):
            leave_one_out(single, small_run_cfg())

    def test_degenerate_fold_error_names_fold(self):
        a = make_source("a", {"x": ["1", "2"]})
        b = make_source("b", {"x": ["1", "2"]})
        label = SemanticLabel("Only", "p")
        corpus = build_corpus([a, b], {("a", "x"): label, ("b", "x"): label})
        with pytest.raises(EvaluationError, match="fold loo:"):
            leave_one_out(corpus, small_run_cfg())

    def test_unknown_excluded_from_scoring(self, example_corpus):
        cfg = small_run_cfg(include_unknown=False, forest=ForestConfig(n_trees=8))
        report = leave_one_out(example_corpus, cfg)
        business_fold = next(
            f for f in report.folds if f.fold_id == "loo:businessInfo"
        )
        assert business_fold.n_scored == 3  # founded (unknown) is excluded

    def test_mean_is_mean_of_fold_mrrs(self):
        corpus = small_corpus()
        report = leave_one_out(corpus, small_run_cfg())
        recomputed = np.mean([f.mrr for f in report.folds if not f.skipped])
        assert report.mean_mrr == pytest.approx(recomputed, abs=1e-12)

    def test_threads_do_not_change_results(self):
        corpus = small_corpus()
        one = leave_one_out(corpus, small_run_cfg(threads=1))
        many = leave_one_out(corpus, small_run_cfg(threads=8))
        assert report_to_dict(one, include_timings=False) == report_to_dict(
            many, include_timings=False
        )


class TestMlpPipeline:
    def test_leave_one_out_with_mlp(self):
        from semlabel.mlp import MlpConfig

        corpus = small_corpus(n_sources=4)
        cfg = small_run_cfg(
            model="mlp",
            mlp=MlpConfig(hidden_layers=(16,), epochs=10, batch_size=8),
            bagging=BagConfig(3, 6, seed=5),
        )
        report = leave_one_out(corpus, cfg)
        assert len(report.folds) == 4
        assert 0.0 <= report.mean_mrr <= 1.0
        rerun = leave_one_out(corpus, cfg)
        assert report_to_dict(report, include_timings=False) == report_to_dict(
            rerun, include_timings=False
        )


class TestRepeatedHoldout:
    def test_split_sizes(self):
        corpus = small_corpus(n_sources=10)
        cfg = HoldoutConfig(p=0.2, n=10, seed=3)
        report = repeated_holdout(corpus, cfg, small_run_cfg())
        assert len(report.folds) == 10
        for fold in report.folds:
            assert len(fold.test_sources) == 8

    def test_half_split_on_four_sources(self):
        corpus = small_corpus(n_sources=4)
        cfg = HoldoutConfig(p=0.5, n=3, seed=3)
        report = repeated_holdout(corpus, cfg, small_run_cfg())
        for fold in report.folds:
            assert len(fold.test_sources) == 2

    def test_deterministic(self):
        corpus = small_corpus()
        cfg = HoldoutConfig(p=0.4, n=4, seed=9)
        a = repeated_holdout(corpus, cfg, small_run_cfg())
        b = repeated_holdout(corpus, cfg, small_run_cfg())
        assert report_to_dict(a, include_timings=False) == report_to_dict(
            b, include_timings=False
        )

    def test_degenerate_iterations_skipped_and_recorded(self):
        only = SemanticLabel("Only", "p")
        other = SemanticLabel("Other", "p")
        a = make_source("a", {"x": ["1", "2"]})
        b = make_source("b", {"x": ["3", "4"]})
        c = make_source("c", {"x": ["5", "6"], "y": ["ab", "cd"]})
        corpus = build_corpus(
            [a, b, c],
            {("a", "x"): only, ("b", "x"): only, ("c", "x"): only, ("c", "y"): other},
        )
        cfg = HoldoutConfig(p=0.2, n=8, seed=2)
        report = repeated_holdout(corpus, cfg, small_run_cfg())
        skipped = [f for f in report.folds if f.skipped]
        scored = [f for f in report.folds if not f.skipped]
        assert skipped, "expected at least one degenerate iteration"
        assert all("class" in f.skip_reason for f in skipped)
        assert report.mean_mrr == pytest.approx(
            np.mean([f.mrr for f in scored]), abs=1e-12
        )

    def test_invalid_p_rejected(self):
        with pytest.raises(EvaluationError):
            HoldoutConfig(p=0.0, n=3)
        with pytest.raises(EvaluationError):
            HoldoutConfig(p=1.0, n=3)
        with pytest.raises(EvaluationError):
            HoldoutConfig(p=0.5, n=0)

    def test_degenerate_split_rejected(self):
        corpus = small_corpus(n_sources=2)
        with pytest.raises(EvaluationError, match="degenerate split"):
            repeated_holdout(corpus, HoldoutConfig(p=0.9, n=2, seed=0), small_run_cfg())


class TestSweep:
    def test_grid_rows(self):
        corpus = small_corpus(n_sources=5)
        rows = sweep_bagging(
            corpus,
            [1, 2, 4, 8],
            [5],
            HoldoutConfig(p=0.4, n=2, seed=3),
            small_run_cfg(),
        )
        assert [(nb, bs) for nb, bs, _ in rows] == [(1, 5), (2, 5), (4, 5), (8, 5)]
        assert all(0.0 <= score <= 1.0 for _, _, score in rows)

    def test_empty_grid_rejected(self):
        corpus = small_corpus(n_sources=4)
        with pytest.raises(EvaluationError, match="empty"):
            sweep_bagging(corpus, [], [5], HoldoutConfig(p=0.5, n=1), small_run_cfg())

    def test_csv_shape(self):
        text = sweep_to_csv([(10, 100, 0.5), (50, 100, 0.75)])
        lines = text.strip().split("\n")
        assert lines[0] == "num_bags,bag_size,mean_mrr"
        assert lines[1] == "10,100,0.5"


class TestReports:
    def make_report(self) -> EvaluationReport:
        folds = (
            FoldResult("loo:a", ("a",), 0.75, 4, 40, 1.25, 0.5),
            FoldResult("loo:b", ("b",), 0.5, 4, 40, 1.5, 0.25),
        )
        return EvaluationReport(
            protocol="leave_one_out",
            folds=folds,
            mean_mrr=0.625,
            include_unknown=True,
            config=small_run_cfg().to_dict(),
        )

    def test_json_round_trip(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "report.json"
        emit_report(report, path, fmt="json", include_timings=True)
        assert load_report(path) == report

    def test_round_trip_via_dict(self):
        report = self.make_report()
        assert report_from_dict(report_to_dict(report)) == report

    def test_timings_omitted_by_default(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "report.json"
        emit_report(report, path, fmt="json")
        text = path.read_text()
        assert "train_seconds" not in text
        reloaded = load_report(path)
        assert reloaded.folds[0].train_seconds is None
        assert reloaded.mean_mrr == report.mean_mrr

    def test_markdown_rows(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "report.md"
        emit_report(report, path, fmt="markdown", include_timings=True)
        text = path.read_text()
        assert "| loo:a |" in text
        assert "| loo:b |" in text
        assert "**0.6250**" in text
        assert "- model: forest" in text

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(EvaluationError, match="format"):
            emit_report(self.make_report(), tmp_path / "x", fmt="yaml")

    def test_schema_version_checked(self):
        doc = report_to_dict(self.make_report())
        doc["schema_version"] = 99
        with pytest.raises(EvaluationError, match="version"):
            report_from_dict(doc)

    def test_mean_mrr_example_value(self, tmp_path):
        rankings_mean = (1 + 0.5 + 0.25) / 3
        folds = (FoldResult("f", ("s",), rankings_mean, 3, 3, None, None),)
        report = EvaluationReport(
            protocol="leave_one_out",
            folds=folds,
            mean_mrr=rankings_mean,
            include_unknown=False,
            config={},
        )
        path = tmp_path / "r.json"
        emit_report(report, path)
        assert abs(load_report(path).mean_mrr - 0.5833) < 1e-4


class TestRunConfig:
    def test_predict_bagging_requires_bagging(self):
        with pytest.raises(ConfigError, match="predict_bagging"):
            RunConfig(predict_bagging=True).validate()

    def test_bad_model_kind(self):
        with pytest.raises(ConfigError, match="model kind"):
            RunConfig(model="svm").validate()

    def test_bad_feature_set(self):
        with pytest.raises(ConfigError, match="feature set"):
            RunConfig(features="everything").validate()

    def test_unknown_in_training_needs_exclusion(self):
        with pytest.raises(ConfigError, match="unknown_in_training"):
            RunConfig(unknown_in_training=True).validate()

    def test_rebalance_attributes_needs_strategy(self):
        with pytest.raises(ConfigError, match="rebalance_attributes"):
            RunConfig(rebalance_attributes=True).validate()
