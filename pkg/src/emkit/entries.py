"""Data entries and their serialization into tagged token sequences.

A data entry is an ordered list of (attribute, value) text pairs. Entries and
candidate pairs are rendered as single strings using the tag grammar

    [COL] <name> [VAL] <value> ... [COL] <name> [VAL] <value>

for one entry and

    [CLS] <entry> [SEP] <entry> [SEP]

for a pair. These strings are the wire format consumed by the encoder, the
summarizer, and the augmentation operators; they are golden-file tested and
must not change shape.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import AbstractSet, Iterable, Iterator, Mapping, Sequence

CLS = "[CLS]"
SEP = "[SEP]"
COL = "[COL]"
VAL = "[VAL]"

#: Structural tokens every serialized string is built from.
CORE_SPECIAL_TOKENS: frozenset[str] = frozenset({CLS, SEP, COL, VAL})

#: Tags used by the built-in span recognizers (see :mod:`emkit.knowledge`).
BUILTIN_TAG_TOKENS: frozenset[str] = frozenset(
    {"[LAST]", "[/LAST]", "[STREET]", "[YEAR]", "[PRODID]"}
)

#: Default special vocabulary: structural tokens plus built-in span tags.
DEFAULT_SPECIAL_TOKENS: frozenset[str] = CORE_SPECIAL_TOKENS | BUILTIN_TAG_TOKENS

NULL_TOKEN = "NULL"

_ESCAPE_RE = re.compile(r"\[(CLS|SEP|COL|VAL)\]")


class SerializationError(ValueError):
    """Raised for entries that cannot be serialized."""


@dataclass(frozen=True)
class DataEntry:
    """An ordered list of (attribute, value) pairs; the unit being matched.

    Attribute names must be non-empty; values may be empty and render as the
    literal token ``NULL``. Attribute order is preserved exactly as ingested.
    """

    attrs: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        for name, value in self.attrs:
            if not isinstance(name, str) or not name.strip():
                raise SerializationError(f"attribute name must be non-empty, got {name!r}")
            if not isinstance(value, str):
                raise SerializationError(f"attribute value must be text, got {value!r}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "DataEntry":
        return cls(tuple((str(n), "" if v is None else str(v)) for n, v in pairs))

    @classmethod
    def from_dict(cls, mapping: Mapping[str, str]) -> "DataEntry":
        """Build an entry from a mapping, flattening nested mappings with dotted names."""
        flat: list[tuple[str, str]] = []

        def walk(prefix: str, obj) -> None:
            if isinstance(obj, Mapping):
                for key, val in obj.items():
                    walk(f"{prefix}.{key}" if prefix else str(key), val)
            else:
                flat.append((prefix, "" if obj is None else str(obj)))

        walk("", mapping)
        return cls(tuple(flat))

    @property
    def k(self) -> int:
        """Number of attribute/value pairs."""
        return len(self.attrs)

    def value_of(self, name: str) -> str | None:
        for attr, value in self.attrs:
            if attr == name:
                return value
        return None

    def replace_values(self, new_values: Mapping[str, str]) -> "DataEntry":
        """Return a copy with the given attributes' values replaced."""
        return DataEntry(
            tuple((n, new_values.get(n, v)) for n, v in self.attrs)
        )


@dataclass(frozen=True)
class LabeledPair:
    """A candidate pair with a binary label (1 = match)."""

    left: DataEntry
    right: DataEntry
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class TokenSeq:
    """A token sequence with a per-token special flag.

    A token is marked special iff it belongs to the special vocabulary the
    sequence was tokenized with (structural tokens plus span tags).
    """

    tokens: tuple[str, ...]
    special: tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.special) != len(self.tokens):
            raise ValueError("special mask length must equal token count")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def text(self) -> str:
        return " ".join(self.tokens)

    def count(self, token: str) -> int:
        return self.tokens.count(token)

    @classmethod
    def build(cls, tokens: Sequence[str], specials: AbstractSet[str]) -> "TokenSeq":
        toks = tuple(tokens)
        return cls(toks, tuple(t in specials for t in toks))


def escape_special_literals(text: str) -> str:
    """Escape literal structural tokens in user text by bracket doubling.

    ``[COL]`` becomes ``[[COL]]`` and so on, so that serialized strings stay
    injective and parseable even for adversarial values.
    """
    return _ESCAPE_RE.sub(r"[[\1]]", text)


def unescape_special_literals(text: str) -> str:
    return re.sub(r"\[\[(CLS|SEP|COL|VAL)\]\]", r"[\1]", text)


def serialize_entry(entry: DataEntry) -> str:
    """Render an entry as ``[COL] name [VAL] value ...``, single-space separated.

    Empty or missing values render as the literal token ``NULL``. Structural
    token literals inside names/values are escaped by bracket doubling.
    """
    parts: list[str] = []
    for name, value in entry.attrs:
        value = value.strip()
        parts.append(COL)
        parts.append(escape_special_literals(name))
        parts.append(VAL)
        parts.append(escape_special_literals(value) if value else NULL_TOKEN)
    return " ".join(parts)


def assemble_pair(left_text: str, right_text: str) -> str:
    """Wrap two serialized entry strings as ``[CLS] left [SEP] right [SEP]``."""
    parts = [CLS]
    if left_text:
        parts.append(left_text)
    parts.append(SEP)
    if right_text:
        parts.append(right_text)
    parts.append(SEP)
    return " ".join(parts)


def serialize_pair(left: DataEntry, right: DataEntry) -> str:
    """Serialize a candidate pair: ``[CLS] serialize(e) [SEP] serialize(e') [SEP]``."""
    return assemble_pair(serialize_entry(left), serialize_entry(right))


def tokenize(text: str, specials: AbstractSet[str] | None = None) -> TokenSeq:
    """Whitespace-tokenize a serialized string.

    Bracketed special tokens are recognized as single tokens and flagged in
    the mask; all other tokens are lowercased (the matcher is uncased).
    """
    if specials is None:
        specials = DEFAULT_SPECIAL_TOKENS
    tokens: list[str] = []
    mask: list[bool] = []
    for raw in text.split():
        if raw in specials:
            tokens.append(raw)
            mask.append(True)
        else:
            tokens.append(raw.lower())
            mask.append(False)
    return TokenSeq(tuple(tokens), tuple(mask))
