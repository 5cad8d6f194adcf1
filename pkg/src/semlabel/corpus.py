"""Data model and ingestion for labeled collections of tabular sources.

A corpus directory looks like:

    <dir>/sources/*.csv    one delimiter-separated file per source, UTF-8,
                           RFC-4180 quoting, header row by default
    <dir>/labels.json      {"version": 1, "labels": [{source, attribute,
                           class, property}, ...]}; class "unknown" with no
                           property marks a column that maps to nothing

All types are immutable after construction and safe to share across threads.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping

from .errors import CorpusError

UNKNOWN_CLASS = "unknown"

LABELS_SCHEMA_VERSION = 1


@dataclass(frozen=True, order=True)
class SemanticLabel:
    """A (class, property) pair from the domain ontology, or the unknown label.

    The unknown label is spelled with class_name == "unknown" and an empty
    property; that class name is reserved and cannot be used for a known label.
    """

    class_name: str
    property_name: str = ""

    def __post_init__(self) -> None:
        if self.class_name == UNKNOWN_CLASS:
            if self.property_name:
                raise CorpusError(
                    "unknown label cannot carry a property "
                    f"(got {self.property_name!r})"
                )
        elif not self.class_name or not self.property_name:
            raise CorpusError(
                "known label needs a non-empty class and property "
                f"(got {self.class_name!r}, {self.property_name!r})"
            )

    @property
    def is_unknown(self) -> bool:
        return self.class_name == UNKNOWN_CLASS

    @property
    def identifier(self) -> str:
        if self.is_unknown:
            return UNKNOWN_CLASS
        return f"{self.class_name}.{self.property_name}"

    def __str__(self) -> str:
        return self.identifier

    def to_record(self) -> dict:
        if self.is_unknown:
            return {"class": UNKNOWN_CLASS}
        return {"class": self.class_name, "property": self.property_name}


UNKNOWN = SemanticLabel(UNKNOWN_CLASS)


@dataclass(frozen=True)
class Attribute:
    """One column of a source: header name plus raw, untrimmed cell values."""

    name: str
    values: tuple[str, ...]
    source_name: str


@dataclass(frozen=True)
class DataSource:
    """A named rectangular table."""

    name: str
    attributes: tuple[Attribute, ...]

    def __post_init__(self) -> None:
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise CorpusError(f"duplicate attribute names in source {self.name!r}")
        lengths = {len(a.values) for a in self.attributes}
        if len(lengths) > 1:
            raise CorpusError(
                f"source {self.name!r} is not rectangular: row counts {sorted(lengths)}"
            )

    @property
    def n_rows(self) -> int:
        return len(self.attributes[0].values) if self.attributes else 0


@dataclass(frozen=True)
class LabeledCorpus:
    """Sources plus exactly one semantic label per attribute."""

    sources: tuple[DataSource, ...]
    labels: Mapping[tuple[str, str], SemanticLabel]

    def __post_init__(self) -> None:
        keys = {
            (s.name, a.name) for s in self.sources for a in s.attributes
        }
        missing = keys - set(self.labels)
        if missing:
            raise CorpusError(f"attributes without a label: {sorted(missing)[:5]}")
        extra = set(self.labels) - keys
        if extra:
            raise CorpusError(f"labels for nonexistent attributes: {sorted(extra)[:5]}")

    def label_of(self, source_name: str, attribute_name: str) -> SemanticLabel:
        return self.labels[(source_name, attribute_name)]

    def labeled_attributes(self) -> Iterator[tuple[Attribute, SemanticLabel]]:
        for source in self.sources:
            for attr in source.attributes:
                yield attr, self.labels[(source.name, attr.name)]

    def known_labels(self) -> tuple[SemanticLabel, ...]:
        """Distinct known labels, sorted by identifier."""
        distinct = {lab for lab in self.labels.values() if not lab.is_unknown}
        return tuple(sorted(distinct, key=lambda l: l.identifier))

    def source_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.sources)

    @property
    def n_attributes(self) -> int:
        return sum(len(s.attributes) for s in self.sources)


@dataclass(frozen=True)
class LoadOptions:
    delimiter: str = ","
    header: bool = True
    encoding: str = "utf-8"


@dataclass
class LoadDiagnostics:
    """Counters for the messy-input repairs applied while loading."""

    padded_cells: int = 0
    extended_columns: int = 0
    renamed_headers: int = 0


def dedupe_names(names: list[str]) -> tuple[list[str], int]:
    """Make names unique by appending _2, _3, ... in column order."""
    used: set[str] = set()
    out = []
    renamed = 0
    for name in names:
        if name in used:
            k = 2
            while f"{name}_{k}" in used:
                k += 1
            name = f"{name}_{k}"
            renamed += 1
        used.add(name)
        out.append(name)
    return out, renamed


def _decode(raw: bytes, encoding: str, path: Path) -> str:
    try:
        return raw.decode(encoding)
    except UnicodeDecodeError as exc:
        prefix = raw[: exc.start]
        row = prefix.count(b"\n") + 1
        col = exc.start - (prefix.rfind(b"\n") + 1) + 1
        raise CorpusError(
            f"undecodable bytes in {path} at row {row}, column {col}"
        ) from exc


def load_source_with_diagnostics(
    path: str | Path, options: LoadOptions | None = None
) -> tuple[DataSource, LoadDiagnostics]:
    """Load one delimiter-separated file as a rectangular DataSource.

    Ragged rows are padded with empty cells, rows wider than the header grow
    extra `col_<i>` columns, and duplicate headers get `_2`, `_3` suffixes;
    each repair is counted in the returned diagnostics.
    """
    path = Path(path)
    options = options or LoadOptions()
    diag = LoadDiagnostics()
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CorpusError(f"unreadable file: {path} ({exc})") from exc
    text = _decode(raw, options.encoding, path)
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=options.delimiter)
    rows = [row for row in reader]
    if options.header:
        if not rows:
            raise CorpusError(f"zero data rows in {path}")
        header, data = rows[0], rows[1:]
    else:
        header, data = [], rows
    if not data:
        raise CorpusError(f"zero data rows in {path}")

    width = max(len(header), max(len(r) for r in data))
    names = list(header) + [f"col_{i + 1}" for i in range(len(header), width)]
    if not options.header:
        names = [f"col_{i + 1}" for i in range(width)]
    else:
        diag.extended_columns = width - len(header)
    names, diag.renamed_headers = dedupe_names(names)

    padded = []
    for row in data:
        if len(row) < width:
            diag.padded_cells += width - len(row)
            row = row + [""] * (width - len(row))
        padded.append(row)

    source_name = path.stem
    attributes = tuple(
        Attribute(
            name=names[i],
            values=tuple(row[i] for row in padded),
            source_name=source_name,
        )
        for i in range(width)
    )
    return DataSource(name=source_name, attributes=attributes), diag


def load_source(path: str | Path, options: LoadOptions | None = None) -> DataSource:
    return load_source_with_diagnostics(path, options)[0]


def _label_from_record(record: dict, where: str) -> tuple[tuple[str, str], SemanticLabel]:
    if not isinstance(record, dict):
        raise CorpusError(f"{where}: label record must be an object")
    try:
        source = record["source"]
        attribute = record["attribute"]
        class_name = record["class"]
    except KeyError as exc:
        raise CorpusError(f"{where}: label record missing key {exc}") from exc
    prop = record.get("property", "")
    if class_name == UNKNOWN_CLASS and prop:
        raise CorpusError(
            f"{where}: unknown label for ({source}, {attribute}) "
            f"carries a property {prop!r}"
        )
    return (source, attribute), SemanticLabel(class_name, prop)


def load_labels(path: str | Path) -> dict[tuple[str, str], SemanticLabel]:
    """Read a labels.json file into a (source, attribute) -> label map."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"unreadable labels file: {path} ({exc})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON in {path}: {exc}") from exc
    if isinstance(doc, dict):
        version = doc.get("version")
        if version != LABELS_SCHEMA_VERSION:
            raise CorpusError(
                f"unsupported labels schema version {version!r} in {path} "
                f"(expected {LABELS_SCHEMA_VERSION})"
            )
        records = doc.get("labels", [])
    elif isinstance(doc, list):
        # bare array accepted and treated as version 1
        records = doc
    else:
        raise CorpusError(f"{path}: expected an object or array at top level")

    labels: dict[tuple[str, str], SemanticLabel] = {}
    for i, record in enumerate(records):
        key, label = _label_from_record(record, f"{path}[{i}]")
        if key in labels:
            raise CorpusError(f"duplicate label entry for {key} in {path}")
        labels[key] = label
    return labels


def build_corpus(
    sources: list[DataSource],
    labels: Mapping[tuple[str, str], SemanticLabel],
    strict: bool = True,
) -> LabeledCorpus:
    """Join sources with their label map into a corpus.

    Sources are ordered by name so corpus identity does not depend on load
    order. In strict mode every attribute must appear in the label map; in
    lenient mode missing attributes are labeled unknown.
    """
    names = [s.name for s in sources]
    if len(set(names)) != len(names):
        raise CorpusError("duplicate source names")
    by_key = {
        (s.name, a.name): a for s in sources for a in s.attributes
    }
    for key in labels:
        if key not in by_key:
            raise CorpusError(f"label references nonexistent attribute {key}")
    full: dict[tuple[str, str], SemanticLabel] = {}
    for key in by_key:
        if key in labels:
            full[key] = labels[key]
        elif strict:
            raise CorpusError(f"attribute {key} has no label (strict mode)")
        else:
            full[key] = UNKNOWN
    ordered = tuple(sorted(sources, key=lambda s: s.name))
    return LabeledCorpus(sources=ordered, labels=full)


def _check_source_filename(name: str) -> None:
    if not name or name.startswith(".") or any(c in name for c in "/\\\0"):
        raise CorpusError(f"source name {name!r} is not filesystem-safe")


def save_corpus(corpus: LabeledCorpus, directory: str | Path) -> None:
    """Write a corpus in the standard directory layout."""
    directory = Path(directory)
    sources_dir = directory / "sources"
    sources_dir.mkdir(parents=True, exist_ok=True)
    for source in corpus.sources:
        _check_source_filename(source.name)
        with open(sources_dir / f"{source.name}.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([a.name for a in source.attributes])
            for i in range(source.n_rows):
                writer.writerow([a.values[i] for a in source.attributes])
    records = []
    for source in corpus.sources:
        for attr in source.attributes:
            label = corpus.labels[(source.name, attr.name)]
            record = {"source": source.name, "attribute": attr.name}
            record.update(label.to_record())
            records.append(record)
    doc = {"version": LABELS_SCHEMA_VERSION, "labels": records}
    with open(directory / "labels.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_corpus(
    directory: str | Path,
    options: LoadOptions | None = None,
    strict: bool = True,
) -> LabeledCorpus:
    """Load a corpus directory written by save_corpus (or by hand)."""
    directory = Path(directory)
    sources_dir = directory / "sources"
    if not sources_dir.is_dir():
        raise CorpusError(f"missing sources directory: {sources_dir}")
    labels_path = directory / "labels.json"
    if not labels_path.exists():
        raise CorpusError(f"labels.json not found in {directory}")
    labels = load_labels(labels_path)
    sources = [
        load_source(p, options) for p in sorted(sources_dir.glob("*.csv"))
    ]
    if not sources:
        raise CorpusError(f"no source files in {sources_dir}")
    return build_corpus(sources, labels, strict=strict)
