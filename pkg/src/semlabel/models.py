"""Trainable classifiers behind one contract, plus model persistence.

Both model kinds produce a probability distribution over the training label
order. Models are immutable after training and safe for concurrent
prediction. The model file is a versioned binary container:

    magic "SLB1" | u32 version (little-endian) | u64 payload length |
    UTF-8 JSON payload | 32-byte SHA-256 checksum of everything before it

Wall-clock training time is kept on the in-memory model only, never in the
file, so identical runs write byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Attribute, SemanticLabel
from .errors import ModelFormatError, SchemaMismatchError, TrainingError
from .featurize import ClassProfileIndex, FeatureVector, assemble
from .forest import ForestConfig, Tree, fit_forest, forest_predict_matrix
from .mlp import MlpConfig, fit_mlp, forward
from .sampling import BagConfig, aggregate_bag_predictions, make_bags, predict_stream

MODEL_MAGIC = b"SLB1"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Feature matrix plus integer targets into a fixed label order."""

    X: np.ndarray
    y: np.ndarray
    label_order: tuple[SemanticLabel, ...]
    feature_schema: tuple[str, ...]
    feature_set: str
    provenance: tuple[tuple[str, str], ...] = ()  # (source, attribute) per row

    def __post_init__(self) -> None:
        if len(self.X) != len(self.y):
            raise TrainingError("instances and targets differ in length")
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_schema):
            raise TrainingError("feature matrix does not match the schema width")

    @property
    def n_instances(self) -> int:
        return len(self.X)


def training_set_from_instances(
    pairs: Sequence[tuple[FeatureVector, SemanticLabel]],
    label_order: tuple[SemanticLabel, ...] | None = None,
    provenance: Sequence[tuple[str, str]] = (),
) -> TrainingSet:
    if not pairs:
        raise TrainingError("empty training set")
    schema = pairs[0][0].schema
    feature_set = pairs[0][0].feature_set
    for fv, _ in pairs:
        if fv.schema != schema:
            raise TrainingError("feature vectors disagree on schema")
    if label_order is None:
        label_order = tuple(sorted({lab for _, lab in pairs}, key=lambda l: l.identifier))
    index = {lab: i for i, lab in enumerate(label_order)}
    try:
        y = np.asarray([index[lab] for _, lab in pairs], dtype=np.int64)
    except KeyError as exc:
        raise TrainingError(f"target {exc} not in label order") from exc
    X = np.stack([fv.values for fv, _ in pairs])
    return TrainingSet(
        X=X,
        y=y,
        label_order=label_order,
        feature_schema=schema,
        feature_set=feature_set,
        provenance=tuple(provenance),
    )


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """Common surface of both classifier kinds."""

    kind: str  # "forest" | "mlp"
    label_order: tuple[SemanticLabel, ...]
    feature_schema: tuple[str, ...]
    feature_set: str
    profile_index: ClassProfileIndex | None
    train_seconds: float | None

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ForestModel(TrainedModel):
    trees: tuple[Tree, ...] = ()
    config: ForestConfig = ForestConfig()

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return forest_predict_matrix(list(self.trees), X)


@dataclass(frozen=True, eq=False)
class MlpModel(TrainedModel):
    params: tuple[tuple[np.ndarray, np.ndarray], ...] = ()
    config: MlpConfig = MlpConfig()

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return forward(list(self.params), X)


def _check_trainable(data: TrainingSet) -> None:
    if data.n_instances == 0:
        raise TrainingError("empty training set")
    if len(np.unique(data.y)) < 2:
        raise TrainingError("training set has a single class; need at least 2")


def train_forest(
    data: TrainingSet,
    cfg: ForestConfig,
    profile_index: ClassProfileIndex | None = None,
) -> ForestModel:
    _check_trainable(data)
    start = time.perf_counter()
    trees = fit_forest(data.X, data.y, len(data.label_order), cfg)
    return ForestModel(
        kind="forest",
        label_order=data.label_order,
        feature_schema=data.feature_schema,
        feature_set=data.feature_set,
        profile_index=profile_index,
        train_seconds=time.perf_counter() - start,
        trees=tuple(trees),
        config=cfg,
    )


def train_mlp(
    data: TrainingSet,
    cfg: MlpConfig,
    profile_index: ClassProfileIndex | None = None,
) -> MlpModel:
    _check_trainable(data)
    if np.isnan(data.X).any():
        raise TrainingError("training features contain NaN values")
    start = time.perf_counter()
    params = fit_mlp(data.X, data.y, len(data.label_order), cfg)
    return MlpModel(
        kind="mlp",
        label_order=data.label_order,
        feature_schema=data.feature_schema,
        feature_set=data.feature_set,
        profile_index=profile_index,
        train_seconds=time.perf_counter() - start,
        params=tuple(params),
        config=cfg,
    )


def predict_proba(model: TrainedModel, fv: FeatureVector) -> np.ndarray:
    """Probability vector over model.label_order for one feature vector."""
    if fv.schema != model.feature_schema or fv.feature_set != model.feature_set:
        raise SchemaMismatchError(
            f"feature vector ({fv.feature_set}, width {len(fv.schema)}) does not match "
            f"model ({model.feature_set}, width {len(model.feature_schema)})"
        )
    return model.predict_matrix(fv.values[None, :])[0]


@dataclass(frozen=True)
class PredictionRanking:
    """Labels ranked by descending probability for one attribute."""

    attribute: tuple[str, str]  # (source_name, attribute_name)
    ranked: tuple[tuple[SemanticLabel, float], ...]
    true_label: SemanticLabel | None = None

    def rank_of(self, label: SemanticLabel) -> int | None:
        """1-based rank of the label, None if absent."""
        for i, (candidate, _) in enumerate(self.ranked, 1):
            if candidate == label:
                return i
        return None

    @property
    def top(self) -> SemanticLabel:
        return self.ranked[0][0]


def rank_probabilities(
    label_order: Sequence[SemanticLabel], probs: np.ndarray
) -> tuple[tuple[SemanticLabel, float], ...]:
    """Sort labels by descending probability, ties broken by identifier."""
    order = sorted(
        range(len(label_order)),
        key=lambda i: (-probs[i], label_order[i].identifier),
    )
    return tuple((label_order[i], float(probs[i])) for i in order)


def predict_attribute(
    model: TrainedModel,
    attr: Attribute,
    index: ClassProfileIndex | None,
    feature_set: str,
    predict_bagging: BagConfig | None = None,
) -> PredictionRanking:
    """Rank all model labels for one attribute, optionally over prediction bags."""
    if len(attr.values) == 0:
        raise SchemaMismatchError(f"cannot predict empty attribute {attr.name!r}")
    if feature_set != model.feature_set:
        raise SchemaMismatchError(
            f"requested feature set {feature_set!r} but model was trained with "
            f"{model.feature_set!r}"
        )
    if predict_bagging is None:
        probs = predict_proba(model, assemble(attr, feature_set, index))
    else:
        bags = make_bags(attr, predict_bagging, predict_stream(attr.source_name, attr.name))
        vectors = [assemble(bag, feature_set, index) for bag in bags]
        for fv in vectors:
            if fv.schema != model.feature_schema:
                raise SchemaMismatchError("bag feature schema does not match the model")
        X = np.stack([fv.values for fv in vectors])
        probs = aggregate_bag_predictions(list(model.predict_matrix(X)))
    return PredictionRanking(
        attribute=(attr.source_name, attr.name),
        ranked=rank_probabilities(model.label_order, probs),
    )


def _model_payload(model: TrainedModel) -> dict:
    payload = {
        "kind": model.kind,
        "feature_set": model.feature_set,
        "feature_schema": list(model.feature_schema),
        "label_order": [l.to_record() for l in model.label_order],
        "profile_index": (
            model.profile_index.to_payload() if model.profile_index is not None else None
        ),
    }
    if isinstance(model, ForestModel):
        payload["config"] = {
            "n_trees": model.config.n_trees,
            "max_depth": model.config.max_depth,
            "min_samples_leaf": model.config.min_samples_leaf,
            "features_per_split": model.config.features_per_split,
            "leaf_smoothing": model.config.leaf_smoothing,
            "seed": model.config.seed,
        }
        payload["trees"] = [t.to_payload() for t in model.trees]
    elif isinstance(model, MlpModel):
        payload["config"] = {
            "hidden_layers": list(model.config.hidden_layers),
            "dropout": model.config.dropout,
            "epochs": model.config.epochs,
            "batch_size": model.config.batch_size,
            "learning_rate": model.config.learning_rate,
            "momentum": model.config.momentum,
            "seed": model.config.seed,
            "input_width": model.config.input_width,
        }
        payload["params"] = [[W.tolist(), b.tolist()] for W, b in model.params]
    else:
        raise ModelFormatError(f"cannot serialize model kind {model.kind!r}")
    return payload


def _model_from_payload(payload: dict) -> TrainedModel:
    kind = payload["kind"]
    label_order = tuple(
        SemanticLabel(r["class"], r.get("property", "")) for r in payload["label_order"]
    )
    schema = tuple(payload["feature_schema"])
    index = (
        ClassProfileIndex.from_payload(payload["profile_index"])
        if payload.get("profile_index") is not None
        else None
    )
    common = {
        "kind": kind,
        "label_order": label_order,
        "feature_schema": schema,
        "feature_set": payload["feature_set"],
        "profile_index": index,
        "train_seconds": None,
    }
    cfg = payload["config"]
    if kind == "forest":
        return ForestModel(
            **common,
            trees=tuple(Tree.from_payload(t) for t in payload["trees"]),
            config=ForestConfig(
                n_trees=cfg["n_trees"],
                max_depth=cfg["max_depth"],
                min_samples_leaf=cfg["min_samples_leaf"],
                features_per_split=cfg["features_per_split"],
                leaf_smoothing=cfg["leaf_smoothing"],
                seed=cfg["seed"],
            ),
        )
    if kind == "mlp":
        params = tuple(
            (np.asarray(W, dtype=np.float64), np.asarray(b, dtype=np.float64))
            for W, b in payload["params"]
        )
        return MlpModel(
            **common,
            params=params,
            config=MlpConfig(
                hidden_layers=tuple(cfg["hidden_layers"]),
                dropout=cfg["dropout"],
                epochs=cfg["epochs"],
                batch_size=cfg["batch_size"],
                learning_rate=cfg["learning_rate"],
                momentum=cfg["momentum"],
                seed=cfg["seed"],
                input_width=cfg["input_width"],
            ),
        )
    raise ModelFormatError(f"unsupported model kind {kind!r}")


def save_model(model: TrainedModel, path: str | Path) -> None:
    payload = json.dumps(_model_payload(model), sort_keys=True).encode("utf-8")
    head = MODEL_MAGIC + struct.pack("<I", MODEL_FORMAT_VERSION) + struct.pack("<Q", len(payload))
    body = head + payload
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_model(path: str | Path) -> TrainedModel:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"{path} is not a model file (bad magic)")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"model file version {version} is not supported (expected {MODEL_FORMAT_VERSION})"
        )
    length = struct.unpack("<Q", raw[8:16])[0]
    body_end = 16 + length
    if len(raw) < body_end + 32:
        raise ModelFormatError(f"checksum error: {path} is truncated or corrupted")
    digest = hashlib.sha256(raw[:body_end]).digest()
    if digest != raw[body_end : body_end + 32]:
        raise ModelFormatError(f"checksum error: {path} is truncated or corrupted")
    try:
        payload = json.loads(raw[16:body_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable payload in {path}: {exc}") from exc
    return _model_from_payload(payload)


def model_file_json(path: str | Path) -> dict:
    """JSON rendering of a model file, for inspection."""
    raw = Path(path).read_bytes()
    model = load_model(path)  # validates magic/version/checksum
    payload = json.loads(raw[16 : 16 + struct.unpack("<Q", raw[8:16])[0]].decode("utf-8"))
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "payload": payload,
    }
