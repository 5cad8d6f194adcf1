"""Exception hierarchy shared across the package."""


class SemLabelError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(SemLabelError):
    """Bad corpus input: unreadable files, malformed labels, integrity violations."""


class FeaturizeError(SemLabelError):
    """Feature extraction called on inputs that violate its preconditions."""


class SamplingError(SemLabelError):
    """Bagging or rebalancing called on inputs that violate its preconditions."""


class TrainingError(SemLabelError):
    """Model training failed: degenerate targets, NaN features, non-finite loss."""


class SchemaMismatchError(SemLabelError):
    """A feature vector or request does not match the model's schema contract."""


class ModelFormatError(SemLabelError):
    """Model file is not readable: bad magic, wrong version, failed checksum."""


class EvaluationError(SemLabelError):
    """Benchmark protocol cannot run on the given corpus or configuration."""


class ConfigError(SemLabelError):
    """Inconsistent or incomplete run configuration."""
