"""Command-line interface.

Subcommands: train, predict, benchmark, sweep, synth, schema, inspect.
Every failure exits nonzero with a single-line JSON error object on stderr
(exit 2 usage/input error, 3 contract mismatch, 4 internal error); success
paths never write to stderr. All commands are deterministic for identical
inputs, flags and seed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, run_config_from_dict
from .corpus import (
    SemanticLabel,
    UNKNOWN,
    load_corpus,
    load_source,
    save_corpus,
)
from .errors import (
    ConfigError,
    CorpusError,
    EvaluationError,
    FeaturizeError,
    ModelFormatError,
    SamplingError,
    SchemaMismatchError,
    SemLabelError,
    TrainingError,
)
from .evaluate import (
    HoldoutConfig,
    build_training,
    emit_report,
    fit_model,
    leave_one_out,
    repeated_holdout,
    sweep_bagging,
    sweep_to_csv,
)
from .featurize import feature_schema
from .models import (
    load_model,
    model_file_json,
    predict_attribute,
    save_model,
)
from .sampling import BagConfig
from .synth import default_spec, generate_synthetic

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONTRACT = 3
EXIT_INTERNAL = 4


class UsageError(SemLabelError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _fail(message: str) -> None:
    print(json.dumps({"error": message}), file=sys.stderr)


def _parse_label(text: str) -> SemanticLabel:
    if text == "unknown":
        return UNKNOWN
    if "." not in text:
        raise UsageError(f"label {text!r} must look like Class.property (or 'unknown')")
    class_name, prop = text.split(".", 1)
    return SemanticLabel(class_name, prop)


def _add_run_config_flags(p: argparse.ArgumentParser, require_seed: bool) -> None:
    p.add_argument("--config", help="JSON config file mirroring the run configuration")
    p.add_argument("--model", choices=["rf", "forest", "mlp"], default=None)
    p.add_argument("--features", choices=["base", "base_plus", "all"], default=None)
    p.add_argument("--num-bags", type=int, default=None)
    p.add_argument("--bag-size", type=int, default=None)
    p.add_argument("--predict-bags", action="store_true", default=None,
                   help="also bag at prediction time")
    p.add_argument("--rebalance", choices=["none", "mean", "max"], default=None)
    p.add_argument("--rebalance-attributes", action="store_true", default=None,
                   help="rebalance whole attributes before bagging instead of instances")
    unknown = p.add_mutually_exclusive_group()
    unknown.add_argument("--include-unknown", dest="include_unknown",
                         action="store_true", default=None)
    unknown.add_argument("--no-unknown", dest="include_unknown", action="store_false")
    p.add_argument("--unknown-in-training", action="store_true", default=None,
                   help="when unknown is excluded, still train on unknown attributes")
    p.add_argument("--seed", type=int, default=None, required=require_seed)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--n-trees", type=int, default=None)
    p.add_argument("--mlp-epochs", type=int, default=None)


def _merge_run_config(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    """Combine config file and flags (flags win); returns (config, paths)."""
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed config file {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError(f"config file {args.config} must hold a JSON object")
    paths = dict(doc.pop("paths", {}) or {})
    if args.model is not None:
        doc["model"] = {"rf": "forest"}.get(args.model, args.model)
    if args.features is not None:
        doc["features"] = args.features
    if args.num_bags is not None:
        doc["num_bags"] = args.num_bags
    if args.bag_size is not None:
        doc["bag_size"] = args.bag_size
    if args.predict_bags is not None:
        doc["predict_bagging"] = args.predict_bags
    if args.rebalance is not None:
        doc["rebalance"] = args.rebalance
    if args.rebalance_attributes is not None:
        doc["rebalance_attributes"] = args.rebalance_attributes
    if args.include_unknown is not None:
        doc["include_unknown"] = args.include_unknown
    if args.unknown_in_training is not None:
        doc["unknown_in_training"] = args.unknown_in_training
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.threads is not None:
        doc["threads"] = args.threads
    if args.n_trees is not None:
        doc.setdefault("forest", {})["n_trees"] = args.n_trees
    if args.mlp_epochs is not None:
        doc.setdefault("mlp", {})["epochs"] = args.mlp_epochs
    return run_config_from_dict(doc), paths


def _resolve_output(path_arg: str | None, paths: dict, key: str, what: str) -> Path:
    """Validate the output path before any work starts."""
    raw = path_arg or paths.get(key)
    if not raw:
        raise UsageError(f"an output {what} path is required (-o or config paths.{key})")
    path = Path(raw)
    if not path.parent.exists():
        raise UsageError(f"output directory does not exist: {path.parent}")
    return path


def _require_corpus_dir(path_arg: str | None, paths: dict) -> Path:
    raw = path_arg or paths.get("corpus")
    if not raw:
        raise UsageError("a corpus directory is required (--corpus or config paths.corpus)")
    directory = Path(raw)
    if not directory.is_dir():
        raise CorpusError(f"corpus directory not found: {directory}")
    if not (directory / "labels.json").exists():
        raise CorpusError(f"labels.json not found in {directory}")
    return directory


def cmd_train(args: argparse.Namespace) -> int:
    run_cfg, paths = _merge_run_config(args)
    corpus_dir = _require_corpus_dir(args.corpus, paths)
    out = _resolve_output(args.output, paths, "model", "model")
    corpus = load_corpus(corpus_dir)
    index, data = build_training(corpus, corpus.source_names(), run_cfg, fold_id="train")
    model = fit_model(data, run_cfg, index, fold_id="train")
    save_model(model, out)
    class_counts = {
        label.identifier: int((data.y == i).sum())
        for i, label in enumerate(data.label_order)
    }
    print(json.dumps({
        "output": str(out),
        "instances": data.n_instances,
        "classes": len(data.label_order),
        "class_counts": class_counts,
        "train_seconds": model.train_seconds,
    }))
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model_file)
    if args.features is not None and args.features != model.feature_set:
        raise SchemaMismatchError(
            f"requested feature set {args.features!r} but model was trained "
            f"with {model.feature_set!r}"
        )
    predict_cfg = None
    if args.predict_bags:
        if args.num_bags is None or args.bag_size is None:
            raise UsageError("--predict-bags requires --num-bags and --bag-size")
        predict_cfg = BagConfig(args.num_bags, args.bag_size, seed=args.seed or 0)
    source = load_source(args.input)
    results = []
    for attr in source.attributes:
        ranking = predict_attribute(
            model, attr, model.profile_index, model.feature_set, predict_cfg
        )
        ranked = ranking.ranked[: args.top] if args.top else ranking.ranked
        results.append({
            "source": attr.source_name,
            "attribute": attr.name,
            "ranking": [
                {**label.to_record(), "probability": prob} for label, prob in ranked
            ],
        })
    if args.pretty:
        print(json.dumps(results, indent=2))
    else:
        for row in results:
            print(json.dumps(row))
    return EXIT_OK


def _holdout_config(args: argparse.Namespace, seed: int) -> HoldoutConfig:
    if args.p is None or args.n is None:
        raise UsageError("holdout requires --p and --n")
    return HoldoutConfig(p=args.p, n=args.n, seed=seed)


def cmd_benchmark(args: argparse.Namespace) -> int:
    run_cfg, paths = _merge_run_config(args)
    corpus_dir = _require_corpus_dir(args.corpus, paths)
    out = _resolve_output(args.output, paths, "output", "report")
    if args.protocol == "loo":
        if args.p is not None:
            raise UsageError("p is only valid for holdout")
        if args.n is not None:
            raise UsageError("n is only valid for holdout")
    corpus = load_corpus(corpus_dir)
    if args.protocol == "loo":
        report = leave_one_out(corpus, run_cfg)
    else:
        report = repeated_holdout(corpus, _holdout_config(args, run_cfg.seed), run_cfg)
    emit_report(report, out, fmt=args.format, include_timings=args.timings)
    print(json.dumps({"mean_mrr": report.mean_mrr, "output": str(out)}))
    return EXIT_OK


def _parse_grid(text: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"{flag} must be a comma-separated list of integers") from exc
    if not values:
        raise UsageError(f"{flag} must not be empty")
    return values


def cmd_sweep(args: argparse.Namespace) -> int:
    run_cfg, paths = _merge_run_config(args)
    corpus_dir = _require_corpus_dir(args.corpus, paths)
    out = _resolve_output(args.output, paths, "output", "CSV")
    corpus = load_corpus(corpus_dir)
    rows = sweep_bagging(
        corpus,
        _parse_grid(args.num_bags_grid, "--num-bags-grid"),
        _parse_grid(args.bag_size_grid, "--bag-size-grid"),
        _holdout_config(args, run_cfg.seed),
        run_cfg,
    )
    Path(out).write_text(sweep_to_csv(rows), encoding="utf-8")
    print(json.dumps({"rows": len(rows), "output": str(out)}))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    weights = None
    if args.imbalance:
        try:
            weights = [float(w) for w in args.imbalance.split(",")]
        except ValueError as exc:
            raise UsageError("--imbalance must be a comma-separated list of weights") from exc
    spec = default_spec(
        n_sources=args.sources,
        n_labels=args.labels,
        unknown_fraction=args.unknown_frac,
        rows=(args.rows[0], args.rows[1]),
        columns_per_source=args.cols,
        weights=weights,
        cell_noise=args.noise,
    )
    corpus = generate_synthetic(spec, args.seed)
    save_corpus(corpus, args.output)
    print(json.dumps({
        "output": str(args.output),
        "sources": len(corpus.sources),
        "attributes": corpus.n_attributes,
        "labels": len(corpus.known_labels()),
    }))
    return EXIT_OK


def cmd_schema(args: argparse.Namespace) -> int:
    if args.labels_from:
        from .corpus import load_labels

        labels = sorted(
            {lab for lab in load_labels(args.labels_from).values()},
            key=lambda l: l.identifier,
        )
    else:
        labels = sorted(
            {_parse_label(text) for text in args.label or []},
            key=lambda l: l.identifier,
        )
    names = feature_schema(args.features, tuple(labels))
    print(json.dumps({
        "feature_set": args.features,
        "labels": [l.identifier for l in labels],
        "features": list(names),
    }, indent=2))
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    if args.dump_json:
        print(json.dumps(model_file_json(args.model_file), indent=2, sort_keys=True))
        return EXIT_OK
    model = load_model(args.model_file)
    print(json.dumps({
        "kind": model.kind,
        "feature_set": model.feature_set,
        "feature_width": len(model.feature_schema),
        "labels": [l.identifier for l in model.label_order],
    }, indent=2))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="semlabel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[], help="train a model on a corpus directory")
    p.add_argument("--corpus", help="corpus directory (sources/*.csv + labels.json)")
    p.add_argument("-o", "--output", help="model file to write")
    _add_run_config_flags(p, require_seed=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="rank labels for every column of a CSV")
    p.add_argument("model_file", help="model file produced by train")
    p.add_argument("--input", required=True, help="CSV file to label")
    p.add_argument("--features", choices=["base", "base_plus", "all"], default=None,
                   help="must match the model's feature set when given")
    p.add_argument("--top", type=int, default=None, help="emit only the best N labels")
    p.add_argument("--predict-bags", action="store_true")
    p.add_argument("--num-bags", type=int, default=None)
    p.add_argument("--bag-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark", help="run a cross-validation protocol")
    p.add_argument("--corpus")
    p.add_argument("--protocol", choices=["loo", "holdout"], required=True)
    p.add_argument("--p", type=float, default=None, help="holdout train fraction")
    p.add_argument("--n", type=int, default=None, help="holdout iterations")
    p.add_argument("-o", "--output", help="report path")
    p.add_argument("--format", choices=["json", "markdown"], default="json")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock timings (report is then not byte-reproducible)")
    _add_run_config_flags(p, require_seed=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sweep", help="grid-sweep bagging parameters under holdout")
    p.add_argument("--corpus")
    p.add_argument("--num-bags-grid", required=True)
    p.add_argument("--bag-size-grid", required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("-o", "--output", help="CSV path for num_bags,bag_size,mean_mrr rows")
    _add_run_config_flags(p, require_seed=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--sources", type=int, required=True)
    p.add_argument("--labels", type=int, required=True)
    p.add_argument("--unknown-frac", type=float, default=0.0)
    p.add_argument("--rows", type=int, nargs=2, default=[200, 500], metavar=("MIN", "MAX"))
    p.add_argument("--cols", type=int, default=None, help="columns per source")
    p.add_argument("--noise", type=float, default=0.03, help="per-cell corruption probability")
    p.add_argument("--imbalance", help="comma-separated per-label weights")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True, help="corpus directory to write")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("schema", help="dump feature names in vector order")
    p.add_argument("--features", choices=["base", "base_plus", "all"], required=True)
    p.add_argument("--labels-from", help="labels.json supplying the label set")
    p.add_argument("--label", action="append", help="label identifier Class.property")
    p.set_defaults(func=cmd_schema)

    p = sub.add_parser("inspect", help="inspect a model file")
    p.add_argument("model_file")
    p.add_argument("--dump-json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _fail(str(exc))
        return EXIT_INPUT
    except SchemaMismatchError as exc:
        _fail(str(exc))
        return EXIT_CONTRACT
    except (
        ConfigError,
        CorpusError,
        EvaluationError,
        FeaturizeError,
        ModelFormatError,
        SamplingError,
        TrainingError,
    ) as exc:
        _fail(str(exc))
        return EXIT_INPUT
    except SemLabelError as exc:
        _fail(str(exc))
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        _fail(f"internal error: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
