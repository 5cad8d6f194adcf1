"""semlabel: semantic labeling of tabular columns.

Assigns ontology labels (class, property) to columns of relational data
sources with a supervised classifier over character-level features,
optionally augmented by bagging, and evaluates with MRR-based
cross-validation protocols.
"""
from .config import RunConfig, run_config_from_dict
from .corpus import (
    Attribute,
    DataSource,
    LabeledCorpus,
    LoadOptions,
    SemanticLabel,
    UNKNOWN,
    build_corpus,
    load_corpus,
    load_labels,
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
    EvaluationReport,
    FoldResult,
    HoldoutConfig,
    emit_report,
    leave_one_out,
    load_report,
    mrr,
    repeated_holdout,
    run_fold,
    sweep_bagging,
)
from .featurize import (
    CharProfile,
    ClassProfileIndex,
    FeatureVector,
    NwScoring,
    StatFeatures,
    VOCABULARY,
    assemble,
    build_class_profiles,
    char_profile,
    cosine_features,
    feature_schema,
    levenshtein,
    name_features,
    needleman_wunsch,
    nw_similarity,
    stat_features,
)
from .forest import ForestConfig, gini_impurity
from .mlp import MlpConfig
from .models import (
    PredictionRanking,
    TrainingSet,
    load_model,
    predict_attribute,
    predict_proba,
    save_model,
    train_forest,
    train_mlp,
    training_set_from_instances,
)
from .sampling import (
    Bag,
    BagConfig,
    Rebalance,
    aggregate_bag_predictions,
    make_bags,
    rebalance,
)
from .synth import LabelSpec, SynthSpec, default_spec, generate_synthetic

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
