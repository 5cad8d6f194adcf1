"""Benchmark harness: MRR scoring, cross-validation protocols, reports.

Folds are independent: each one builds its class profiles, training set and
model from its own training sources only, with RNG streams keyed by the
fold id, so results do not depend on execution order or thread count.
Wall-clock timings live on the report object; report files include them
only on request so identical runs serialize byte-identically.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import RunConfig
from .corpus import LabeledCorpus
from .errors import EvaluationError
from .featurize import ClassProfileIndex, assemble, build_class_profiles
from .models import (
    PredictionRanking,
    TrainedModel,
    TrainingSet,
    predict_attribute,
    train_forest,
    train_mlp,
    training_set_from_instances,
)
from .sampling import BagConfig, Rebalance, make_bags, rebalance_indices, train_stream
from .streams import rng_for, stream_id

REPORT_SCHEMA_VERSION = 1


class DegenerateFoldError(EvaluationError):
    """A training split with fewer than two classes."""


@dataclass(frozen=True)
class HoldoutConfig:
    p: float  # fraction of sources used for training
    n: int  # iterations
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.p < 1.0):
            raise EvaluationError(f"holdout p must be in (0, 1), got {self.p}")
        if self.n < 1:
            raise EvaluationError(f"holdout n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class FoldResult:
    fold_id: str
    test_sources: tuple[str, ...]
    mrr: float
    n_scored: int
    n_train_instances: int
    train_seconds: float | None
    predict_seconds: float | None
    skipped: bool = False
    skip_reason: str = ""


@dataclass(frozen=True)
class EvaluationReport:
    protocol: str
    folds: tuple[FoldResult, ...]
    mean_mrr: float
    include_unknown: bool
    config: dict

    @property
    def scored_folds(self) -> tuple[FoldResult, ...]:
        return tuple(f for f in self.folds if not f.skipped)


def mrr(rankings: Sequence[PredictionRanking]) -> float:
    """Mean reciprocal rank; an absent true label contributes 0."""
    if not rankings:
        raise EvaluationError("cannot compute MRR of zero rankings")
    total = 0.0
    for ranking in rankings:
        if ranking.true_label is None:
            raise EvaluationError(f"ranking for {ranking.attribute} has no true label")
        rank = ranking.rank_of(ranking.true_label)
        total += 0.0 if rank is None else 1.0 / rank
    return total / len(rankings)


def build_training(
    corpus: LabeledCorpus,
    train_sources: Sequence[str],
    run_cfg: RunConfig,
    fold_id: str = "train",
) -> tuple[ClassProfileIndex, TrainingSet]:
    """Class profiles and training instances from the given sources only."""
    train_set = set(train_sources)
    train_pairs = []
    for attr, label in corpus.labeled_attributes():
        if attr.source_name not in train_set:
            continue
        if label.is_unknown and not run_cfg.include_unknown and not run_cfg.unknown_in_training:
            continue
        train_pairs.append((attr, label))
    distinct = {label for _, label in train_pairs}
    if len(distinct) < 2:
        raise DegenerateFoldError(
            f"fold {fold_id}: training split has {len(distinct)} class(es), need >= 2"
        )
    label_order = tuple(sorted(distinct, key=lambda l: l.identifier))
    index = build_class_profiles(train_pairs)

    # attribute-level rebalancing duplicates/drops whole attributes before
    # bagging; the default rebalances generated instances afterwards
    rebalance_attrs = run_cfg.rebalance_attributes and run_cfg.rebalance is not Rebalance.NONE
    if rebalance_attrs:
        picks = rebalance_indices(
            [label for _, label in train_pairs], run_cfg.rebalance, seed=run_cfg.seed
        )
        train_pairs = [train_pairs[i] for i in picks]

    instances = []
    provenance = []
    for attr, label in train_pairs:
        if run_cfg.bagging is not None:
            bags = make_bags(attr, run_cfg.bagging, train_stream(attr.source_name, attr.name))
            for bag in bags:
                instances.append((assemble(bag, run_cfg.features, index), label))
                provenance.append(bag.parent)
        else:
            instances.append((assemble(attr, run_cfg.features, index), label))
            provenance.append((attr.source_name, attr.name))
    if run_cfg.rebalance is not Rebalance.NONE and not rebalance_attrs:
        picks = rebalance_indices(
            [label for _, label in instances], run_cfg.rebalance, seed=run_cfg.seed
        )
        instances = [instances[i] for i in picks]
        provenance = [provenance[i] for i in picks]
    data = training_set_from_instances(
        instances, label_order=label_order, provenance=provenance
    )
    return index, data


def fit_model(
    data: TrainingSet,
    run_cfg: RunConfig,
    index: ClassProfileIndex | None,
    fold_id: str = "train",
) -> TrainedModel:
    """Train the configured model kind with a per-fold derived seed."""
    model_seed = stream_id("fold-model", fold_id, run_cfg.seed)
    if run_cfg.model == "forest":
        return train_forest(data, replace(run_cfg.forest, seed=model_seed), index)
    return train_mlp(data, replace(run_cfg.mlp, seed=model_seed), index)


def run_fold(
    corpus: LabeledCorpus,
    train_sources: Sequence[str],
    test_sources: Sequence[str],
    run_cfg: RunConfig,
    fold_id: str,
) -> FoldResult:
    """Train on train_sources, score every eligible attribute of test_sources."""
    test_set = set(test_sources)
    t0 = time.perf_counter()
    index, data = build_training(corpus, train_sources, run_cfg, fold_id)
    assert not any(src in test_set for src, _ in data.provenance), "fold hygiene violated"
    model = fit_model(data, run_cfg, index, fold_id)
    train_seconds = time.perf_counter() - t0

    t1 = time.perf_counter()
    rankings = []
    predict_cfg = run_cfg.bagging if run_cfg.predict_bagging else None
    for source in corpus.sources:
        if source.name not in test_set:
            continue
        for attr in source.attributes:
            label = corpus.label_of(source.name, attr.name)
            if label.is_unknown and not run_cfg.include_unknown:
                continue
            ranking = predict_attribute(model, attr, index, run_cfg.features, predict_cfg)
            rankings.append(replace(ranking, true_label=label))
    predict_seconds = time.perf_counter() - t1

    if not rankings:
        return FoldResult(
            fold_id=fold_id,
            test_sources=tuple(test_sources),
            mrr=0.0,
            n_scored=0,
            n_train_instances=data.n_instances,
            train_seconds=train_seconds,
            predict_seconds=predict_seconds,
            skipped=True,
            skip_reason="no scorable attributes in the test split",
        )
    return FoldResult(
        fold_id=fold_id,
        test_sources=tuple(test_sources),
        mrr=mrr(rankings),
        n_scored=len(rankings),
        n_train_instances=data.n_instances,
        train_seconds=train_seconds,
        predict_seconds=predict_seconds,
    )


def _run_folds(jobs: Sequence[Callable[[], FoldResult]], threads: int) -> list[FoldResult]:
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _mean_mrr(folds: Sequence[FoldResult]) -> float:
    scored = [f.mrr for f in folds if not f.skipped]
    if not scored:
        raise EvaluationError("no fold produced a score")
    return float(np.mean(scored))


def leave_one_out(corpus: LabeledCorpus, run_cfg: RunConfig) -> EvaluationReport:
    """One fold per source, trained on all the others.

    A fold whose training split has fewer than two classes is an error
    naming the fold.
    """
    run_cfg.validate()
    names = corpus.source_names()
    if len(names) < 2:
        raise EvaluationError(f"leave-one-out needs >= 2 sources, corpus has {len(names)}")
    jobs = []
    for held_out in names:
        train = tuple(n for n in names if n != held_out)
        jobs.append(
            lambda tr=train, te=(held_out,): run_fold(
                corpus, tr, te, run_cfg, f"loo:{te[0]}"
            )
        )
    folds = _run_folds(jobs, run_cfg.threads)
    return EvaluationReport(
        protocol="leave_one_out",
        folds=tuple(folds),
        mean_mrr=_mean_mrr(folds),
        include_unknown=run_cfg.include_unknown,
        config=run_cfg.to_dict(),
    )


def repeated_holdout(
    corpus: LabeledCorpus, cfg: HoldoutConfig, run_cfg: RunConfig
) -> EvaluationReport:
    """n random train/test splits of sources with train fraction p.

    Iterations whose training split is degenerate are recorded as skipped
    and excluded from the mean, never silently averaged over.
    """
    run_cfg.validate()
    names = corpus.source_names()
    if len(names) < 2:
        raise EvaluationError(f"repeated holdout needs >= 2 sources, corpus has {len(names)}")
    k_train = math.ceil(cfg.p * len(names))
    if k_train < 1 or k_train >= len(names):
        raise EvaluationError(
            f"degenerate split: p={cfg.p} on {len(names)} sources trains on {k_train}"
        )

    def job(i: int) -> FoldResult:
        rng = rng_for(cfg.seed, "holdout", i)
        picks = rng.choice(len(names), size=k_train, replace=False)
        train = tuple(sorted(names[j] for j in picks))
        test = tuple(n for n in names if n not in set(train))
        fold_id = f"holdout:{i}"
        try:
            return run_fold(corpus, train, test, run_cfg, fold_id)
        except DegenerateFoldError as exc:
            return FoldResult(
                fold_id=fold_id,
                test_sources=test,
                mrr=0.0,
                n_scored=0,
                n_train_instances=0,
                train_seconds=None,
                predict_seconds=None,
                skipped=True,
                skip_reason=str(exc),
            )

    jobs = [lambda i=i: job(i) for i in range(cfg.n)]
    folds = _run_folds(jobs, run_cfg.threads)
    return EvaluationReport(
        protocol="repeated_holdout",
        folds=tuple(folds),
        mean_mrr=_mean_mrr(folds),
        include_unknown=run_cfg.include_unknown,
        config={**run_cfg.to_dict(), "holdout_p": cfg.p, "holdout_n": cfg.n},
    )


def sweep_bagging(
    corpus: LabeledCorpus,
    num_bags_values: Sequence[int],
    bag_size_values: Sequence[int],
    holdout_cfg: HoldoutConfig,
    run_cfg: RunConfig,
) -> list[tuple[int, int, float]]:
    """Mean holdout MRR for every (num_bags, bag_size) grid point."""
    if not num_bags_values or not bag_size_values:
        raise EvaluationError("empty bagging sweep grid")
    rows = []
    for num_bags in num_bags_values:
        for bag_size in bag_size_values:
            cfg = replace(
                run_cfg,
                bagging=BagConfig(num_bags=num_bags, bag_size=bag_size, seed=run_cfg.seed),
            )
            report = repeated_holdout(corpus, holdout_cfg, cfg)
            rows.append((num_bags, bag_size, report.mean_mrr))
    return rows


def sweep_to_csv(rows: Sequence[tuple[int, int, float]]) -> str:
    lines = ["num_bags,bag_size,mean_mrr"]
    lines.extend(f"{nb},{bs},{score!r}" for nb, bs, score in rows)
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvaluationReport, include_timings: bool = True) -> dict:
    folds = []
    for f in report.folds:
        row = {
            "fold_id": f.fold_id,
            "test_sources": list(f.test_sources),
            "mrr": f.mrr,
            "n_scored": f.n_scored,
            "n_train_instances": f.n_train_instances,
            "skipped": f.skipped,
            "skip_reason": f.skip_reason,
        }
        if include_timings:
            row["train_seconds"] = f.train_seconds
            row["predict_seconds"] = f.predict_seconds
        folds.append(row)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "protocol": report.protocol,
        "include_unknown": report.include_unknown,
        "config": report.config,
        "mean_mrr": report.mean_mrr,
        "folds": folds,
    }


def report_from_dict(doc: dict) -> EvaluationReport:
    version = doc.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise EvaluationError(
            f"unsupported report schema version {version!r} (expected {REPORT_SCHEMA_VERSION})"
        )
    folds = tuple(
        FoldResult(
            fold_id=row["fold_id"],
            test_sources=tuple(row["test_sources"]),
            mrr=row["mrr"],
            n_scored=row["n_scored"],
            n_train_instances=row["n_train_instances"],
            train_seconds=row.get("train_seconds"),
            predict_seconds=row.get("predict_seconds"),
            skipped=row["skipped"],
            skip_reason=row["skip_reason"],
        )
        for row in doc["folds"]
    )
    return EvaluationReport(
        protocol=doc["protocol"],
        folds=folds,
        mean_mrr=doc["mean_mrr"],
        include_unknown=doc["include_unknown"],
        config=doc["config"],
    )


def _fmt_seconds(value: float | None) -> str:
    return f"{value:.2f}" if value is not None else "-"


def report_to_markdown(report: EvaluationReport, include_timings: bool = True) -> str:
    cfg = report.config
    sampling = "none"
    if cfg.get("num_bags"):
        sampling = f"bagging {cfg['num_bags']}x{cfg['bag_size']}"
    if cfg.get("rebalance") not in (None, "none"):
        sampling += f" + resample-to-{cfg['rebalance']}"
    lines = [
        "# Benchmark report",
        "",
        f"- protocol: {report.protocol}",
        f"- model: {cfg.get('model')}",
        f"- features: {cfg.get('features')}",
        f"- sampling: {sampling}",
        f"- unknown included: {'yes' if report.include_unknown else 'no'}",
        f"- seed: {cfg.get('seed')}",
        "",
        "| fold | test sources | MRR | scored | train (s) | predict (s) |",
        "|---|---|---|---|---|---|",
    ]
    for f in report.folds:
        mrr_cell = "skipped" if f.skipped else f"{f.mrr:.4f}"
        train_cell = _fmt_seconds(f.train_seconds) if include_timings else "-"
        predict_cell = _fmt_seconds(f.predict_seconds) if include_timings else "-"
        lines.append(
            f"| {f.fold_id} | {', '.join(f.test_sources)} | {mrr_cell} "
            f"| {f.n_scored} | {train_cell} | {predict_cell} |"
        )
    lines.append(f"| **mean** | | **{report.mean_mrr:.4f}** | | | |")
    return "\n".join(lines) + "\n"


def emit_report(
    report: EvaluationReport,
    path: str | Path,
    fmt: str = "json",
    include_timings: bool = False,
) -> None:
    """Write the report as schema-versioned JSON or a markdown table."""
    path = Path(path)
    if fmt == "json":
        text = json.dumps(report_to_dict(report, include_timings), indent=2, sort_keys=True)
        text += "\n"
    elif fmt == "markdown":
        text = report_to_markdown(report, include_timings)
    else:
        raise EvaluationError(f"unknown report format {fmt!r}")
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise EvaluationError(f"cannot write report to {path}: {exc}") from exc


def load_report(path: str | Path) -> EvaluationReport:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise EvaluationError(f"cannot read report {path}: {exc}") from exc
    return report_from_dict(doc)
