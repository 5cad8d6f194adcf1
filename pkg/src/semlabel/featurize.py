"""Feature extraction for attributes and bags.

Three feature sets are supported:

    base       100-dim normalized character distribution + Shannon entropy (101)
    base_plus  base + per-class normalized minimum edit distance of the
               attribute name (101 + L)
    all        26 column statistics + base + per-class cosine similarity of
               the character distribution + per-class minimum edit distance
               + per-class k-NN global-alignment name similarity
               (26 + 101 + 3L)

The character vocabulary is the 100 printable ASCII characters (0x20-0x7E
plus tab, newline, carriage return, vertical tab, form feed); characters
outside it are dropped from the distribution but still counted by the
length statistics. Class-conditional features are computed against a
ClassProfileIndex built from training data only. All functions are pure;
value-level intermediates are memoized, which is safe because they depend
only on the value string.
"""
from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .corpus import SemanticLabel
from .errors import FeaturizeError

VOCABULARY: str = string.printable
assert len(VOCABULARY) == 100
_CHAR_INDEX = {c: i for i, c in enumerate(VOCABULARY)}
_PUNCT = set(string.punctuation)

MAX_ENTROPY = math.log2(len(VOCABULARY))

FEATURE_SETS = ("base", "base_plus", "all")


class AttributeLike(Protocol):
    name: str
    values: Sequence[str]


@dataclass(frozen=True, eq=False)
class CharProfile:
    """Normalized character distribution over the fixed vocabulary."""

    dist: np.ndarray
    entropy: float
    total_chars: int
    oov_chars: int = 0


@lru_cache(maxsize=1 << 18)
def _value_char_counts(value: str) -> tuple[np.ndarray, int]:
    vec = np.zeros(len(VOCABULARY), dtype=np.float64)
    oov = 0
    for ch, n in Counter(value).items():
        idx = _CHAR_INDEX.get(ch)
        if idx is None:
            oov += n
        else:
            vec[idx] = n
    vec.flags.writeable = False
    return vec, oov


def char_profile(values: Sequence[str]) -> CharProfile:
    """Character distribution and entropy of the concatenated values."""
    counts = np.zeros(len(VOCABULARY), dtype=np.float64)
    oov = 0
    for value in values:
        vec, o = _value_char_counts(value)
        counts += vec
        oov += o
    total = counts.sum()
    if total > 0:
        dist = counts / total
        p = dist[dist > 0]
        entropy = max(float(-(p * np.log2(p)).sum()), 0.0)
    else:
        dist = counts
        entropy = 0.0
    dist.flags.writeable = False
    return CharProfile(dist=dist, entropy=entropy, total_chars=int(total), oov_chars=oov)


_NUMBER_RE = re.compile(r"[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d*)?|[+-]?\.\d+")


def parse_number(text: str) -> float | None:
    """Decimal number with optional sign and thousands separators, else None."""
    s = text.strip()
    if not s or not _NUMBER_RE.fullmatch(s):
        return None
    return float(s.replace(",", ""))


_DATE_SHAPE_RE = re.compile(r"\d{1,4}([-/.])\d{1,2}\1\d{1,4}$")
_DATE_PATTERNS = (
    "%Y-%m-%d", "%d-%m-%Y", "%m-%d-%Y",
    "%Y/%m/%d", "%d/%m/%Y", "%m/%d/%Y",
    "%Y.%m.%d", "%d.%m.%Y", "%m.%d.%Y",
)


def looks_like_date(text: str) -> bool:
    s = text.strip()
    if not _DATE_SHAPE_RE.fullmatch(s):
        return False
    for pattern in _DATE_PATTERNS:
        try:
            datetime.strptime(s, pattern)
            return True
        except ValueError:
            continue
    return False


_ALLCAPS_RE = re.compile(r"[A-Z]+")


class _ValueStats(NamedTuple):
    length: float
    n_space: float
    n_alpha: float
    n_digit: float
    n_punct: float
    n_upper: float
    number: float  # nan when the value does not parse
    is_date: float
    n_tokens: float
    is_len1: float
    is_allcaps: float
    is_empty: float


@lru_cache(maxsize=1 << 18)
def _value_stats(value: str) -> _ValueStats:
    n_space = n_alpha = n_digit = n_punct = n_upper = 0
    for ch in value:
        if ch.isspace():
            n_space += 1
        elif ch.isalpha():
            n_alpha += 1
            if ch.isupper():
                n_upper += 1
        elif ch.isdigit():
            n_digit += 1
        if ch in _PUNCT:
            n_punct += 1
    number = parse_number(value)
    return _ValueStats(
        length=float(len(value)),
        n_space=float(n_space),
        n_alpha=float(n_alpha),
        n_digit=float(n_digit),
        n_punct=float(n_punct),
        n_upper=float(n_upper),
        number=math.nan if number is None else number,
        is_date=float(looks_like_date(value)),
        n_tokens=float(len(value.split())),
        is_len1=float(len(value) == 1),
        is_allcaps=float(bool(_ALLCAPS_RE.fullmatch(value))),
        is_empty=float(value == ""),
    )


class StatFeatures(NamedTuple):
    """The 26 order-free column statistics, in canonical vector order."""

    rows: float
    unique_ratio: float
    empty_ratio: float
    len_min: float
    len_max: float
    len_mean: float
    len_median: float
    len_std: float
    ws_total: float
    ws_mean: float
    alpha_ratio: float
    digit_ratio: float
    punct_ratio: float
    upper_ratio: float
    numeric_ratio: float
    date_ratio: float
    num_mean: float
    num_min: float
    num_max: float
    num_std: float
    negative_ratio: float
    integer_ratio: float
    value_entropy: float
    tokens_mean: float
    len1_ratio: float
    allcaps_ratio: float


assert len(StatFeatures._fields) == 26


def stat_features(attr: AttributeLike) -> StatFeatures:
    """Order-free statistics of one attribute's values (population std)."""
    values = attr.values
    n = len(values)
    if n == 0:
        raise FeaturizeError(f"empty attribute {attr.name!r}")
    table = np.asarray([_value_stats(v) for v in values], dtype=np.float64)
    # one columnar reduction covers every mean-style statistic
    sums = table.sum(axis=0)
    (sum_len, sum_space, sum_alpha, sum_digit, sum_punct, sum_upper, _,
     sum_date, sum_tokens, sum_len1, sum_allcaps, sum_empty) = sums

    length = table[:, 0]
    number = table[:, 6]
    numbers = number[~np.isnan(number)]
    k = len(numbers)
    value_counts = np.asarray(list(Counter(values).values()), dtype=np.float64)
    p_vals = value_counts / n

    def ratio(char_count: float) -> float:
        return float(char_count / sum_len) if sum_len > 0 else 0.0

    return StatFeatures(
        rows=float(n),
        unique_ratio=len(value_counts) / n,
        empty_ratio=float(sum_empty / n),
        len_min=float(length.min()),
        len_max=float(length.max()),
        len_mean=float(sum_len / n),
        len_median=float(np.median(length)),
        len_std=float(length.std()),
        ws_total=float(sum_space),
        ws_mean=float(sum_space / n),
        alpha_ratio=ratio(sum_alpha),
        digit_ratio=ratio(sum_digit),
        punct_ratio=ratio(sum_punct),
        upper_ratio=ratio(sum_upper),
        numeric_ratio=k / n,
        date_ratio=float(sum_date / n),
        num_mean=float(numbers.mean()) if k else 0.0,
        num_min=float(numbers.min()) if k else 0.0,
        num_max=float(numbers.max()) if k else 0.0,
        num_std=float(numbers.std()) if k else 0.0,
        negative_ratio=float((numbers < 0).mean()) if k else 0.0,
        integer_ratio=float((numbers == np.floor(numbers)).mean()) if k else 0.0,
        value_entropy=max(float(-(p_vals * np.log2(p_vals)).sum()), 0.0),
        tokens_mean=float(sum_tokens / n),
        len1_ratio=float(sum_len1 / n),
        allcaps_ratio=float(sum_allcaps / n),
    )


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute edit distance."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class NwScoring(NamedTuple):
    match: int = 2
    mismatch: int = -1
    gap: int = -2


DEFAULT_NW = NwScoring()
DEFAULT_NW_K = 3


def needleman_wunsch(a: str, b: str, scoring: NwScoring = DEFAULT_NW) -> int:
    """Global alignment score; symmetric in (a, b)."""
    prev = [j * scoring.gap for j in range(len(b) + 1)]
    for i, ca in enumerate(a, 1):
        cur = [i * scoring.gap]
        for j, cb in enumerate(b, 1):
            diag = prev[j - 1] + (scoring.match if ca == cb else scoring.mismatch)
            cur.append(max(diag, prev[j] + scoring.gap, cur[j - 1] + scoring.gap))
        prev = cur
    return prev[-1]


def nw_similarity(a: str, b: str, scoring: NwScoring = DEFAULT_NW) -> float:
    """Alignment score normalized by the perfect-match score, clamped to [0, 1]."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    raw = needleman_wunsch(a, b, scoring) / (scoring.match * longest)
    return min(max(raw, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class ClassProfileIndex:
    """Per-label mean character distribution and representative names.

    Labels are kept in lexicographic identifier order; the same ordering is
    used for every per-class feature block at train and predict time.
    """

    labels: tuple[SemanticLabel, ...]
    mean_dists: np.ndarray  # (L, 100)
    names: tuple[tuple[str, ...], ...]
    _name_cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.labels)

    def to_payload(self) -> dict:
        return {
            "labels": [l.to_record() for l in self.labels],
            "mean_dists": self.mean_dists.tolist(),
            "names": [list(ns) for ns in self.names],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ClassProfileIndex":
        labels = tuple(
            SemanticLabel(r["class"], r.get("property", "")) for r in payload["labels"]
        )
        dists = np.asarray(payload["mean_dists"], dtype=np.float64)
        dists.flags.writeable = False
        return cls(
            labels=labels,
            mean_dists=dists,
            names=tuple(tuple(ns) for ns in payload["names"]),
        )


def build_class_profiles(
    train: Sequence[tuple[AttributeLike, SemanticLabel]],
) -> ClassProfileIndex:
    """Aggregate training attributes into per-label profiles.

    The label's distribution is the re-normalized arithmetic mean of its
    members' distributions; its representatives are the multiset of member
    attribute names.
    """
    if not train:
        raise FeaturizeError("empty training set")
    groups: dict[SemanticLabel, tuple[list[np.ndarray], list[str]]] = {}
    for attr, label in train:
        dists, names = groups.setdefault(label, ([], []))
        dists.append(char_profile(attr.values).dist)
        names.append(attr.name)
    labels = tuple(sorted(groups, key=lambda l: l.identifier))
    mean_rows = []
    for label in labels:
        mean = np.mean(np.stack(groups[label][0]), axis=0)
        total = mean.sum()
        if total > 0:
            mean = mean / total
        mean_rows.append(mean)
    mean_dists = np.stack(mean_rows)
    mean_dists.flags.writeable = False
    return ClassProfileIndex(
        labels=labels,
        mean_dists=mean_dists,
        names=tuple(tuple(groups[label][1]) for label in labels),
    )


def cosine_features(profile: CharProfile, index: ClassProfileIndex) -> np.ndarray:
    """Cosine similarity of the profile against each class mean, index order."""
    if len(index) == 0:
        raise FeaturizeError("empty class profile index")
    p = profile.dist
    p_norm = np.linalg.norm(p)
    norms = np.linalg.norm(index.mean_dists, axis=1)
    dots = index.mean_dists @ p
    denom = norms * p_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(out, 0.0, 1.0)


class NameFeatures(NamedTuple):
    min_edit: np.ndarray  # normalized minimum edit distance per label
    nw_knn: np.ndarray  # mean top-k alignment similarity per label


def _norm_edit(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def name_features(
    name: str,
    index: ClassProfileIndex,
    k: int = DEFAULT_NW_K,
    scoring: NwScoring = DEFAULT_NW,
) -> NameFeatures:
    """Name similarity features against each class's representatives.

    Comparison is case-insensitive. Edit distance is normalized by the longer
    string; the alignment feature averages the k best-scoring representatives
    (k truncated to the class size).
    """
    if k < 1:
        raise FeaturizeError("k must be >= 1")
    key = (name.lower(), k, scoring)
    cached = index._name_cache.get(key)
    if cached is not None:
        return cached
    target = name.lower()
    edits = np.zeros(len(index))
    knns = np.zeros(len(index))
    for i, reps in enumerate(index.names):
        reps_lower = [r.lower() for r in reps]
        edits[i] = min(_norm_edit(target, r) for r in set(reps_lower))
        scores = sorted((nw_similarity(target, r, scoring) for r in reps_lower), reverse=True)
        top = scores[: min(k, len(scores))]
        knns[i] = sum(top) / len(top)
    result = NameFeatures(min_edit=edits, nw_knn=knns)
    index._name_cache[key] = result
    return result


@dataclass(frozen=True, eq=False)
class FeatureVector:
    feature_set: str
    values: np.ndarray
    schema: tuple[str, ...]


_BASE_SCHEMA = tuple(
    [f"chardist_u{ord(c):02X}" for c in VOCABULARY] + ["entropy"]
)


@lru_cache(maxsize=256)
def feature_schema(
    feature_set: str, labels: tuple[SemanticLabel, ...] = ()
) -> tuple[str, ...]:
    """Feature names in vector order for (feature_set, label ordering)."""
    if feature_set not in FEATURE_SETS:
        raise FeaturizeError(f"unknown feature set {feature_set!r}")
    ids = [l.identifier for l in labels]
    if feature_set == "base":
        return _BASE_SCHEMA
    if feature_set == "base_plus":
        return _BASE_SCHEMA + tuple(f"name_min_edit::{i}" for i in ids)
    return (
        StatFeatures._fields
        + _BASE_SCHEMA
        + tuple(f"cosine::{i}" for i in ids)
        + tuple(f"name_min_edit::{i}" for i in ids)
        + tuple(f"name_nw_knn::{i}" for i in ids)
    )


def assemble(
    attr: AttributeLike,
    feature_set: str,
    index: ClassProfileIndex | None = None,
    k: int = DEFAULT_NW_K,
    scoring: NwScoring = DEFAULT_NW,
) -> FeatureVector:
    """Assemble the feature vector of one attribute (or bag) under a feature set."""
    if feature_set not in FEATURE_SETS:
        raise FeaturizeError(f"unknown feature set {feature_set!r}")
    profile = char_profile(attr.values)
    base = np.concatenate([profile.dist, [profile.entropy]])
    if feature_set == "base":
        values = base
        schema = feature_schema("base")
    else:
        if index is None or len(index) == 0:
            raise FeaturizeError(f"feature set {feature_set!r} requires a class profile index")
        names = name_features(attr.name, index, k=k, scoring=scoring)
        if feature_set == "base_plus":
            values = np.concatenate([base, names.min_edit])
        else:
            stats = np.asarray(stat_features(attr), dtype=np.float64)
            cosines = cosine_features(profile, index)
            values = np.concatenate([stats, base, cosines, names.min_edit, names.nw_knn])
        schema = feature_schema(feature_set, index.labels)
    values.flags.writeable = False
    return FeatureVector(feature_set=feature_set, values=values, schema=schema)
