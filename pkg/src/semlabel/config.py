"""Run configuration shared by the pipeline, the benchmark harness and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .featurize import FEATURE_SETS
from .forest import ForestConfig
from .mlp import MlpConfig
from .sampling import BagConfig, Rebalance

MODEL_KINDS = ("forest", "mlp")


@dataclass(frozen=True)
class RunConfig:
    """One end-to-end pipeline configuration.

    `unknown_in_training` only applies when unknown attributes are excluded:
    it keeps them in the training set (as the unknown class) while still
    excluding them from scoring.
    """

    model: str = "forest"
    features: str = "all"
    bagging: BagConfig | None = None
    predict_bagging: bool = False
    rebalance: Rebalance = Rebalance.NONE
    rebalance_attributes: bool = False  # rebalance attributes before bagging
    include_unknown: bool = True
    unknown_in_training: bool = False
    seed: int = 0
    threads: int = 1
    forest: ForestConfig = field(default_factory=ForestConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)

    def validate(self) -> "RunConfig":
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model!r} (expected {MODEL_KINDS})")
        if self.features not in FEATURE_SETS:
            raise ConfigError(f"unknown feature set {self.features!r} (expected {FEATURE_SETS})")
        if self.predict_bagging and self.bagging is None:
            raise ConfigError("predict_bagging requires bagging parameters")
        if self.rebalance_attributes and self.rebalance is Rebalance.NONE:
            raise ConfigError("rebalance_attributes requires a rebalance strategy")
        if self.include_unknown and self.unknown_in_training:
            raise ConfigError("unknown_in_training only applies when unknown is excluded")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self

    def to_dict(self) -> dict:
        # the echo holds everything that determines the scores; thread count
        # does not, so reports stay byte-identical across --threads values
        return {
            "model": self.model,
            "features": self.features,
            "num_bags": self.bagging.num_bags if self.bagging else None,
            "bag_size": self.bagging.bag_size if self.bagging else None,
            "predict_bagging": self.predict_bagging,
            "rebalance": self.rebalance.value,
            "rebalance_attributes": self.rebalance_attributes,
            "include_unknown": self.include_unknown,
            "unknown_in_training": self.unknown_in_training,
            "seed": self.seed,
            "forest": {
                "n_trees": self.forest.n_trees,
                "max_depth": self.forest.max_depth,
                "min_samples_leaf": self.forest.min_samples_leaf,
                "features_per_split": self.forest.features_per_split,
                "leaf_smoothing": self.forest.leaf_smoothing,
            },
            "mlp": {
                "hidden_layers": list(self.mlp.hidden_layers),
                "dropout": self.mlp.dropout,
                "epochs": self.mlp.epochs,
                "batch_size": self.mlp.batch_size,
                "learning_rate": self.mlp.learning_rate,
                "momentum": self.mlp.momentum,
            },
        }


def run_config_from_dict(doc: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a RunConfig from a JSON-style dict, over optional base values."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    cfg = base or RunConfig()
    known = {
        "model", "features", "num_bags", "bag_size", "predict_bagging",
        "rebalance", "rebalance_attributes", "include_unknown",
        "unknown_in_training", "seed", "threads", "forest", "mlp", "paths",
    }
    unknown_keys = set(doc) - known
    if unknown_keys:
        raise ConfigError(f"unknown config keys: {sorted(unknown_keys)}")

    seed = doc.get("seed", cfg.seed)
    bagging = cfg.bagging
    if "num_bags" in doc or "bag_size" in doc:
        num_bags = doc.get("num_bags", bagging.num_bags if bagging else None)
        bag_size = doc.get("bag_size", bagging.bag_size if bagging else None)
        if num_bags is None or bag_size is None:
            raise ConfigError("num_bags and bag_size must be given together")
        bagging = BagConfig(num_bags=num_bags, bag_size=bag_size, seed=seed)
    elif bagging is not None:
        bagging = replace(bagging, seed=seed)

    try:
        rebalance = Rebalance(doc.get("rebalance", cfg.rebalance.value))
    except ValueError as exc:
        raise ConfigError(f"unknown rebalance strategy {doc.get('rebalance')!r}") from exc

    forest_doc = doc.get("forest", {})
    mlp_doc = doc.get("mlp", {})
    forest = ForestConfig(
        n_trees=forest_doc.get("n_trees", cfg.forest.n_trees),
        max_depth=forest_doc.get("max_depth", cfg.forest.max_depth),
        min_samples_leaf=forest_doc.get("min_samples_leaf", cfg.forest.min_samples_leaf),
        features_per_split=forest_doc.get("features_per_split", cfg.forest.features_per_split),
        leaf_smoothing=forest_doc.get("leaf_smoothing", cfg.forest.leaf_smoothing),
        seed=seed,
    )
    mlp = MlpConfig(
        hidden_layers=tuple(mlp_doc.get("hidden_layers", cfg.mlp.hidden_layers)),
        dropout=mlp_doc.get("dropout", cfg.mlp.dropout),
        epochs=mlp_doc.get("epochs", cfg.mlp.epochs),
        batch_size=mlp_doc.get("batch_size", cfg.mlp.batch_size),
        learning_rate=mlp_doc.get("learning_rate", cfg.mlp.learning_rate),
        momentum=mlp_doc.get("momentum", cfg.mlp.momentum),
        seed=seed,
    )
    return RunConfig(
        model=doc.get("model", cfg.model),
        features=doc.get("features", cfg.features),
        bagging=bagging,
        predict_bagging=doc.get("predict_bagging", cfg.predict_bagging),
        rebalance=rebalance,
        rebalance_attributes=doc.get("rebalance_attributes", cfg.rebalance_attributes),
        include_unknown=doc.get("include_unknown", cfg.include_unknown),
        unknown_in_training=doc.get("unknown_in_training", cfg.unknown_in_training),
        seed=seed,
        threads=doc.get("threads", cfg.threads),
        forest=forest,
        mlp=mlp,
    ).validate()
