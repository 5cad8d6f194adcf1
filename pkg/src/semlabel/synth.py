"""Deterministic synthetic corpus generator.

Each semantic label is tied to a character-signature generator (name-like,
date-like, numeric, acronym, ...) so that columns of the same label share a
recognizable character distribution. Unknown columns draw from a mixture of
junk tokens and random signatures. Columns carry a per-column "style" drawn
once (separator choice, length ranges, ...) so two columns with the same
label are similar but not identical, and individual cells are corrupted with
a small noise probability.

Everything is reproducible from (spec, seed).
"""
from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .corpus import (
    Attribute,
    DataSource,
    LabeledCorpus,
    SemanticLabel,
    UNKNOWN,
    build_corpus,
    dedupe_names,
)
from .errors import CorpusError
from .streams import rng_for

_LOWER = string.ascii_lowercase
_UPPER = string.ascii_uppercase
_NOISE_CHARS = string.ascii_letters + string.digits + string.punctuation + " "


def _word(rng: np.random.Generator, lo: int, hi: int, upper_first: bool = False) -> str:
    n = int(rng.integers(lo, hi + 1))
    chars = [_LOWER[i] for i in rng.integers(0, 26, size=n)]
    if upper_first and chars:
        chars[0] = chars[0].upper()
    return "".join(chars)


def _digits(rng: np.random.Generator, n: int) -> str:
    return "".join(str(d) for d in rng.integers(0, 10, size=n))


@dataclass(frozen=True)
class Signature:
    """A cell generator: `style` draws per-column nuisance, `cell` draws values."""

    name: str
    style: Callable[[np.random.Generator], dict]
    cell: Callable[[np.random.Generator, dict], str]


def _person_style(rng):
    return {
        "lo": int(rng.integers(3, 5)),
        "hi": int(rng.integers(6, 10)),
        "middle": float(rng.uniform(0.0, 0.4)),
    }


def _person_cell(rng, style):
    first = _word(rng, style["lo"], style["hi"], upper_first=True)
    last = _word(rng, style["lo"], style["hi"], upper_first=True)
    if rng.random() < style["middle"]:
        return f"{first} {_UPPER[rng.integers(0, 26)]}. {last}"
    return f"{first} {last}"


def _date_style(rng):
    return {
        "sep": ["-", "/", "."][int(rng.integers(0, 3))],
        "order": ["dmy", "mdy", "ymd"][int(rng.integers(0, 3))],
    }


def _date_cell(rng, style):
    d = f"{int(rng.integers(1, 29)):02d}"
    m = f"{int(rng.integers(1, 13)):02d}"
    y = f"{int(rng.integers(1900, 2031)):04d}"
    parts = {"dmy": (d, m, y), "mdy": (m, d, y), "ymd": (y, m, d)}[style["order"]]
    return style["sep"].join(parts)


def _integer_style(rng):
    lo = int(rng.integers(1, 4))
    return {"lo": lo, "hi": lo + int(rng.integers(1, 5))}


def _integer_cell(rng, style):
    return _digits(rng, int(rng.integers(style["lo"], style["hi"] + 1)))


def _decimal_style(rng):
    return {
        "ints": int(rng.integers(1, 5)),
        "decs": int(rng.integers(1, 4)),
        "neg": float(rng.uniform(0.0, 0.5)),
    }


def _decimal_cell(rng, style):
    sign = "-" if rng.random() < style["neg"] else ""
    return f"{sign}{_digits(rng, style['ints'])}.{_digits(rng, style['decs'])}"


def _acronym_style(rng):
    lo = int(rng.integers(2, 4))
    return {"lo": lo, "hi": lo + int(rng.integers(1, 3))}


def _acronym_cell(rng, style):
    n = int(rng.integers(style["lo"], style["hi"] + 1))
    return "".join(_UPPER[i] for i in rng.integers(0, 26, size=n))


def _email_style(rng):
    return {
        "tld": ["com", "org", "net", "io", "edu"][int(rng.integers(0, 5))],
        "sep": [".", "_", ""][int(rng.integers(0, 3))],
    }


def _email_cell(rng, style):
    user = _word(rng, 3, 8) + style["sep"] + _word(rng, 3, 8)
    return f"{user}@{_word(rng, 3, 9)}.{style['tld']}"


def _money_style(rng):
    return {"cents": int(rng.integers(0, 2)) * 2, "mag": int(rng.integers(2, 7))}


def _money_cell(rng, style):
    whole = str(int(rng.integers(1, 10 ** style["mag"])))
    grouped = ""
    while len(whole) > 3:
        grouped = "," + whole[-3:] + grouped
        whole = whole[:-3]
    out = "$" + whole + grouped
    if style["cents"]:
        out += "." + _digits(rng, 2)
    return out


def _phone_style(rng):
    return {"fmt": int(rng.integers(0, 3)), "cc": int(rng.integers(1, 99))}


def _phone_cell(rng, style):
    a, b, c = _digits(rng, 3), _digits(rng, 3), _digits(rng, 4)
    if style["fmt"] == 0:
        return f"+{style['cc']} {a} {b} {c}"
    if style["fmt"] == 1:
        return f"({a}) {b}-{c}"
    return f"{a}-{b}-{c}"


def _city_style(rng):
    return {"lo": int(rng.integers(4, 6)), "hi": int(rng.integers(7, 12))}


def _city_cell(rng, style):
    return _word(rng, style["lo"], style["hi"], upper_first=True)


def _words_style(rng):
    return {"n": int(rng.integers(1, 4))}


def _words_cell(rng, style):
    return " ".join(_word(rng, 2, 8) for _ in range(style["n"]))


def _hex_style(rng):
    return {"n": int(rng.integers(8, 17))}


def _hex_cell(rng, style):
    return "".join("0123456789abcdef"[i] for i in rng.integers(0, 16, size=style["n"]))


def _percent_style(rng):
    return {"decs": int(rng.integers(0, 3))}


def _percent_cell(rng, style):
    whole = str(int(rng.integers(0, 101)))
    if style["decs"]:
        whole += "." + _digits(rng, style["decs"])
    return whole + "%"


def _flag_style(rng):
    return {"variant": int(rng.integers(0, 3))}


def _flag_cell(rng, style):
    pools = (("yes", "no"), ("true", "false"), ("Y", "N"))
    pool = pools[style["variant"]]
    return pool[int(rng.integers(0, 2))]


SIGNATURES: tuple[Signature, ...] = (
    Signature("person_name", _person_style, _person_cell),
    Signature("date", _date_style, _date_cell),
    Signature("integer", _integer_style, _integer_cell),
    Signature("decimal", _decimal_style, _decimal_cell),
    Signature("acronym", _acronym_style, _acronym_cell),
    Signature("email", _email_style, _email_cell),
    Signature("money", _money_style, _money_cell),
    Signature("phone", _phone_style, _phone_cell),
    Signature("city", _city_style, _city_cell),
    Signature("words", _words_style, _words_cell),
    Signature("hex_id", _hex_style, _hex_cell),
    Signature("percent", _percent_style, _percent_cell),
    Signature("flag", _flag_style, _flag_cell),
)

_SIGNATURE_BY_NAME = {s.name: s for s in SIGNATURES}

_UNKNOWN_NAME_POOL = (
    "notes", "misc", "extra", "comment", "aux", "other", "blob", "raw",
)


@dataclass(frozen=True)
class LabelSpec:
    label: SemanticLabel
    signature: str
    weight: float = 1.0
    name_pool: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.signature not in _SIGNATURE_BY_NAME:
            raise CorpusError(f"unknown signature {self.signature!r}")
        if self.weight <= 0:
            raise CorpusError("label weight must be positive")


@dataclass(frozen=True)
class SynthSpec:
    n_sources: int
    labels: tuple[LabelSpec, ...]
    rows: tuple[int, int] = (200, 500)
    unknown_fraction: float = 0.0
    columns_per_source: int | None = None
    cell_noise: float = 0.03

    def __post_init__(self) -> None:
        if self.n_sources < 1:
            raise CorpusError("synthesis spec needs at least one source")
        if not self.labels:
            raise CorpusError("synthesis spec needs at least one label")
        if not (0 <= self.unknown_fraction < 1):
            raise CorpusError("unknown_fraction must be in [0, 1)")
        if not (1 <= self.rows[0] <= self.rows[1]):
            raise CorpusError(f"bad rows range {self.rows}")
        if not (0 <= self.cell_noise < 1):
            raise CorpusError("cell_noise must be in [0, 1)")


def default_spec(
    n_sources: int,
    n_labels: int,
    unknown_fraction: float = 0.0,
    rows: tuple[int, int] = (200, 500),
    columns_per_source: int | None = None,
    weights: list[float] | None = None,
    cell_noise: float = 0.03,
) -> SynthSpec:
    """Build a spec with labels cycling through the signature catalog."""
    if n_labels < 1:
        raise CorpusError("synthesis spec needs at least one label")
    if weights is not None and len(weights) != n_labels:
        raise CorpusError("weights length must equal the number of labels")
    specs = []
    for i in range(n_labels):
        sig = SIGNATURES[i % len(SIGNATURES)].name
        prop = sig if i < len(SIGNATURES) else f"{sig}_{i // len(SIGNATURES) + 1}"
        label = SemanticLabel(f"C{i:02d}", prop)
        pool = (f"{sig}_{i}", f"{sig}{i}", f"{sig}_{i}_val", f"src_{sig}_{i}")
        weight = weights[i] if weights is not None else 1.0
        specs.append(LabelSpec(label=label, signature=sig, weight=weight, name_pool=pool))
    return SynthSpec(
        n_sources=n_sources,
        labels=tuple(specs),
        rows=rows,
        unknown_fraction=unknown_fraction,
        columns_per_source=columns_per_source,
        cell_noise=cell_noise,
    )


def _apportion(total: int, weights: list[float]) -> list[int]:
    """Largest-remainder apportionment; counts sum to total, each within 1 of quota."""
    wsum = sum(weights)
    quotas = [total * w / wsum for w in weights]
    counts = [int(q) for q in quotas]
    short = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (counts[i] - quotas[i], i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def _noisy(cell: str, rng: np.random.Generator, p: float) -> str:
    if p <= 0 or rng.random() >= p:
        return cell
    ch = _NOISE_CHARS[int(rng.integers(0, len(_NOISE_CHARS)))]
    if not cell:
        return ch
    pos = int(rng.integers(0, len(cell)))
    if rng.random() < 0.5:
        return cell[:pos] + ch + cell[pos:]
    return cell[:pos] + ch + cell[pos + 1 :]


def _unknown_cell(rng: np.random.Generator) -> str:
    if rng.random() < 0.5:
        n = int(rng.integers(4, 15))
        return "".join(_NOISE_CHARS[i] for i in rng.integers(0, len(_NOISE_CHARS), size=n))
    sig = SIGNATURES[int(rng.integers(0, len(SIGNATURES)))]
    return sig.cell(rng, sig.style(rng))


def generate_synthetic(spec: SynthSpec, seed: int) -> LabeledCorpus:
    """Generate a labeled corpus; byte-identical for identical (spec, seed)."""
    cols = spec.columns_per_source or len(spec.labels) + 2
    total = spec.n_sources * cols
    n_unknown = int(round(spec.unknown_fraction * total))
    counts = _apportion(total - n_unknown, [ls.weight for ls in spec.labels])

    deck: list[int] = [-1] * n_unknown
    for i, c in enumerate(counts):
        deck.extend([i] * c)
    deal_rng = rng_for(seed, "deal")
    deck = [deck[i] for i in deal_rng.permutation(len(deck))]

    sources = []
    labels_map: dict[tuple[str, str], SemanticLabel] = {}
    for s in range(spec.n_sources):
        rng = rng_for(seed, "source", s)
        source_name = f"source_{s:03d}"
        n_rows = int(rng.integers(spec.rows[0], spec.rows[1] + 1))
        hand = deck[s * cols : (s + 1) * cols]
        raw_names = []
        columns = []
        col_labels = []
        for label_idx in hand:
            if label_idx < 0:
                name = _UNKNOWN_NAME_POOL[int(rng.integers(0, len(_UNKNOWN_NAME_POOL)))]
                values = tuple(
                    _noisy(_unknown_cell(rng), rng, spec.cell_noise)
                    for _ in range(n_rows)
                )
                col_labels.append(UNKNOWN)
            else:
                ls = spec.labels[label_idx]
                sig = _SIGNATURE_BY_NAME[ls.signature]
                style = sig.style(rng)
                name = ls.name_pool[int(rng.integers(0, len(ls.name_pool)))]
                values = tuple(
                    _noisy(sig.cell(rng, style), rng, spec.cell_noise)
                    for _ in range(n_rows)
                )
                col_labels.append(ls.label)
            raw_names.append(name)
            columns.append(values)
        names, _ = dedupe_names(raw_names)
        attributes = tuple(
            Attribute(name=names[i], values=columns[i], source_name=source_name)
            for i in range(len(columns))
        )
        sources.append(DataSource(name=source_name, attributes=attributes))
        for i, label in enumerate(col_labels):
            labels_map[(source_name, names[i])] = label

    return build_corpus(sources, labels_map)
