"""Domain-knowledge injection: span typing and span normalization.

Recognizers locate typed spans (product ids, years, last-4 phone digits, ...)
inside attribute values and tag them with special tokens so the matcher can
align them across the two entries of a pair. Rewrite rules and a synonym
dictionary normalize syntactically different but equivalent spans onto one
canonical surface form.

Normalization runs before span typing: inserted tags would otherwise break
the number patterns the rewrite rules match on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Callable, Iterable, Mapping, Pattern, Sequence

import yaml

from .entries import DataEntry

Span = tuple[int, int, "SpanType"]


class KnowledgeError(ValueError):
    """Raised for invalid spans, rules, or config files."""


@dataclass(frozen=True)
class SpanType:
    """A span type plus its start/end tag tokens.

    If ``end_tag`` is None only the start indicator is inserted (used for
    single-token span types).
    """

    name: str
    start_tag: str
    end_tag: str | None = None

    def __post_init__(self) -> None:
        for tag in (self.start_tag, self.end_tag):
            if tag is not None and not re.fullmatch(r"\[/?[A-Z][A-Z0-9]*\]", tag):
                raise KnowledgeError(f"tag must be a bracketed uppercase name, got {tag!r}")

    def tokens(self) -> tuple[str, ...]:
        return (self.start_tag,) if self.end_tag is None else (self.start_tag, self.end_tag)


@dataclass(frozen=True)
class Recognizer:
    """Finds typed spans in a text value.

    Either ``pattern`` (a regex; ``group`` selects the tagged span) or
    ``dictionary`` (surface strings matched on word boundaries) must be given.
    ``attrs`` optionally restricts the recognizer to named attributes; it is
    honored by the preprocessing layer, not by :func:`recognize_spans` itself.
    ``first_only`` keeps only the earliest match (e.g. street numbers).
    """

    span_type: SpanType
    pattern: Pattern[str] | None = None
    group: int = 0
    dictionary: tuple[str, ...] = ()
    attrs: frozenset[str] | None = None
    first_only: bool = False

    def __post_init__(self) -> None:
        if (self.pattern is None) == (not self.dictionary):
            raise KnowledgeError("recognizer needs exactly one of pattern or dictionary")
        if self.dictionary:
            alternation = "|".join(re.escape(s) for s in sorted(self.dictionary, key=len, reverse=True))
            compiled = re.compile(rf"(?<!\w)(?:{alternation})(?!\w)", re.IGNORECASE)
            object.__setattr__(self, "pattern", compiled)
            object.__setattr__(self, "group", 0)

    def __call__(self, value: str) -> list[Span]:
        """Return non-overlapping spans sorted by start position."""
        spans: list[Span] = []
        assert self.pattern is not None
        for match in self.pattern.finditer(value):
            start, end = match.span(self.group)
            if start == end:
                continue
            spans.append((start, end, self.span_type))
            if self.first_only:
                break
        return spans

    def applies_to(self, attr_name: str) -> bool:
        return self.attrs is None or attr_name in self.attrs


@dataclass(frozen=True)
class RewriteRule:
    """A pattern plus a function rewriting each match to canonical text.

    Rewriting must be idempotent: applying a rule to its own output is a
    no-op. The built-in number rules satisfy this by construction.
    """

    name: str
    pattern: Pattern[str]
    rewrite: Callable[[re.Match[str]], str]

    def apply(self, value: str) -> str:
        return self.pattern.sub(self.rewrite, value)


class SynonymDict:
    """Maps surface forms to canonical forms; canonicals are fixed points."""

    def __init__(self, mapping: Mapping[str, str]):
        self._mapping = {k.lower(): v for k, v in mapping.items()}
        if mapping:
            surfaces = "|".join(
                re.escape(s) for s in sorted(self._mapping, key=len, reverse=True)
            )
            self._pattern: Pattern[str] | None = re.compile(
                rf"(?<!\w)(?:{surfaces})(?!\w)", re.IGNORECASE
            )
        else:
            self._pattern = None
        for canonical in self._mapping.values():
            if self.apply(canonical) != canonical:
                raise KnowledgeError(
                    f"canonical form {canonical!r} is not a fixed point of the dictionary"
                )

    def __len__(self) -> int:
        return len(self._mapping)

    def apply(self, value: str) -> str:
        if self._pattern is None:
            return value
        return self._pattern.sub(lambda m: self._mapping[m.group(0).lower()], value)


EMPTY_SYNONYMS = SynonymDict({})


def _round_decimal(text: str, places: int) -> str:
    quant = Decimal(1).scaleb(-places)
    return str(Decimal(text).quantize(quant, rounding=ROUND_HALF_EVEN))


# Percent spans normalize to one decimal ("5 %" and "5.00 %" both become
# "5.0%"); other floats round to two decimals (half-to-even); integer commas
# are dropped. The float rule skips numbers owned by the percent rule.
PERCENT_RULE = RewriteRule(
    "percent",
    re.compile(r"(\d+(?:\.\d+)?)\s*%"),
    lambda m: _round_decimal(m.group(1), 1) + "%",
)
INTEGER_COMMA_RULE = RewriteRule(
    "integer_commas",
    re.compile(r"\b\d{1,3}(?:,\d{3})+\b"),
    lambda m: m.group(0).replace(",", ""),
)
FLOAT_ROUNDING_RULE = RewriteRule(
    "float_rounding",
    re.compile(r"\b(\d+\.\d+)\b(?!\s*%)"),
    lambda m: _round_decimal(m.group(1), 2),
)

BUILTIN_REWRITE_RULES: tuple[RewriteRule, ...] = (
    PERCENT_RULE,
    INTEGER_COMMA_RULE,
    FLOAT_ROUNDING_RULE,
)

LAST4 = SpanType("LAST4", "[LAST]", "[/LAST]")
STREETNUM = SpanType("STREETNUM", "[STREET]")
YEAR = SpanType("YEAR", "[YEAR]")
PRODID = SpanType("PRODID", "[PRODID]")

BUILTIN_SPAN_TYPES: Mapping[str, SpanType] = {
    t.name: t for t in (LAST4, STREETNUM, YEAR, PRODID)
}

_PHONE_LAST4_RE = re.compile(
    r"(?<!\d)(?:\+?1[\s.\-]*)?(?:\(\d{3}\)|\d{3})[\s.\-]*\d{3}[\s.\-]*(\d{4})(?!\d)"
)
_FIRST_NUMBER_RE = re.compile(r"\d+")
_YEAR_RE = re.compile(r"(?<![\d.])(?:1[89]\d{2}|20\d{2})(?!\.?\d)")
_PRODID_RE = re.compile(
    r"(?<![A-Za-z0-9])(?=[A-Za-z0-9]*\d)(?=[A-Za-z0-9]*[A-Za-z])[A-Za-z0-9]{5,}(?![A-Za-z0-9])"
)


def builtin_recognizers() -> tuple[Recognizer, ...]:
    """The span-type catalog shipped with the toolkit.

    LAST4 tags the last four digits of a phone-shaped string; STREETNUM the
    first number string of an address value; YEAR any 4-digit 1800-2099;
    PRODID alphanumeric tokens of length >= 5 mixing letters and digits.
    """
    return (
        Recognizer(LAST4, pattern=_PHONE_LAST4_RE, group=1,
                   attrs=frozenset({"phone", "telephone", "tel"})),
        Recognizer(STREETNUM, pattern=_FIRST_NUMBER_RE, first_only=True,
                   attrs=frozenset({"addr", "address", "street"})),
        Recognizer(YEAR, pattern=_YEAR_RE),
        Recognizer(PRODID, pattern=_PRODID_RE),
    )


def recognize_spans(value: str, recognizers: Sequence[Recognizer]) -> list[Span]:
    """Collect spans from all recognizers and resolve overlaps.

    Overlap resolution keeps the span with the smaller start; ties go to the
    longer span. Returned spans are non-overlapping, sorted by start, with
    character offsets into ``value``.
    """
    collected: list[Span] = []
    for rec in recognizers:
        collected.extend(rec(value))
    collected.sort(key=lambda s: (s[0], -(s[1] - s[0]), s[2].name))
    kept: list[Span] = []
    last_end = -1
    for span in collected:
        if span[0] >= last_end:
            kept.append(span)
            last_end = span[1]
    return kept


def inject_span_types(value: str, spans: Sequence[Span]) -> str:
    """Insert start (and optional end) tags around the given spans.

    Tagged values are also re-spaced so punctuation becomes its own token,
    e.g. ``(866) 246-6453`` with a LAST4 span over the last four digits
    becomes ``( 866 ) 246 - [LAST] 6453 [/LAST]``. Non-tag, non-whitespace
    characters are never deleted or reordered. Values without spans are
    returned unchanged.
    """
    if not spans:
        return value
    ordered = sorted(spans, key=lambda s: s[0])
    for (s1, e1, _), (s2, _, _) in zip(ordered, ordered[1:]):
        if s2 < e1:
            raise KnowledgeError(f"overlapping spans at {s1}..{e1} and {s2}")
    if ordered[0][0] < 0 or ordered[-1][1] > len(value):
        raise KnowledgeError("span out of bounds")

    starts = {s: t for s, _, t in ordered}
    ends: dict[int, SpanType] = {e: t for _, e, t in ordered}
    out: list[str] = []
    for i, ch in enumerate(value):
        if i in ends and ends[i].end_tag is not None:
            out.append(f" {ends[i].end_tag} ")
        if i in starts:
            out.append(f" {starts[i].start_tag} ")
        if ch.isalnum() or ch.isspace():
            out.append(ch)
        else:
            out.append(f" {ch} ")
    if len(value) in ends and ends[len(value)].end_tag is not None:
        out.append(f" {ends[len(value)].end_tag} ")
    return " ".join("".join(out).split())


def normalize_spans(
    value: str,
    rules: Sequence[RewriteRule] = (),
    synonyms: SynonymDict = EMPTY_SYNONYMS,
) -> str:
    """Rewrite all rule matches to canonical text.

    The built-in rules (percent normalization, integer comma-dropping, float
    rounding to two decimals) always apply, followed by the given extra rules
    and synonym canonicalization. Idempotent on its own output.
    """
    for rule in BUILTIN_REWRITE_RULES:
        value = rule.apply(value)
    for rule in rules:
        value = rule.apply(value)
    return synonyms.apply(value)


@dataclass(frozen=True)
class DKConfig:
    """A bundle of recognizers, rewrite rules, and synonyms.

    ``preprocess_value`` is the per-value pipeline: normalization first, then
    span recognition and tag injection.
    """

    recognizers: tuple[Recognizer, ...] = ()
    rules: tuple[RewriteRule, ...] = ()
    synonyms: SynonymDict = EMPTY_SYNONYMS
    span_types: Mapping[str, SpanType] = field(default_factory=dict)

    def tag_tokens(self) -> frozenset[str]:
        tokens: set[str] = set()
        for rec in self.recognizers:
            tokens.update(rec.span_type.tokens())
        for st in self.span_types.values():
            tokens.update(st.tokens())
        return frozenset(tokens)

    def preprocess_value(self, attr_name: str, value: str) -> str:
        value = normalize_spans(value, self.rules, self.synonyms)
        active = [r for r in self.recognizers if r.applies_to(attr_name)]
        spans = recognize_spans(value, active)
        return inject_span_types(value, spans)

    def preprocess_entry(self, entry: DataEntry) -> DataEntry:
        return DataEntry(
            tuple((name, self.preprocess_value(name, val)) for name, val in entry.attrs)
        )


def default_dk_config() -> DKConfig:
    return DKConfig(
        recognizers=builtin_recognizers(),
        span_types=dict(BUILTIN_SPAN_TYPES),
    )


def _parse_span_type(entry: Mapping) -> SpanType:
    try:
        return SpanType(
            name=str(entry["name"]),
            start_tag=str(entry["start_tag"]),
            end_tag=str(entry["end_tag"]) if entry.get("end_tag") else None,
        )
    except KeyError as exc:
        raise KnowledgeError(f"span type entry missing key {exc}") from exc


def load_dk_config(path: str | Path) -> DKConfig:
    """Load recognizers, rewrite rules, and synonyms from a YAML file.

    Schema::

        include_builtins: true          # start from the shipped catalog
        span_types:
          - {name: GRADE, start_tag: "[GRADE]", end_tag: "[/GRADE]"}
        recognizers:
          - {type: GRADE, pattern: "grade (\\\\d+)", group: 1, attrs: [title]}
          - {type: BRAND, dictionary: [sony, sharp]}   # needs BRAND span type
        rewrite_rules:
          - {name: edition, pattern: "(\\\\d+)(st|nd|rd|th) ed\\\\.", replacement: "edition \\\\1"}
        synonyms:
          vldb journal: VLDBJ
    """
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, Mapping):
        raise KnowledgeError(f"{path}: expected a mapping at top level")

    types: dict[str, SpanType] = {}
    recognizers: list[Recognizer] = []
    if raw.get("include_builtins", True):
        types.update(BUILTIN_SPAN_TYPES)
        recognizers.extend(builtin_recognizers())
    for entry in raw.get("span_types", []) or []:
        st = _parse_span_type(entry)
        types[st.name] = st

    for entry in raw.get("recognizers", []) or []:
        type_name = str(entry.get("type", ""))
        if type_name not in types:
            raise KnowledgeError(f"recognizer references unknown span type {type_name!r}")
        attrs = entry.get("attrs")
        kwargs = {
            "span_type": types[type_name],
            "attrs": frozenset(map(str, attrs)) if attrs else None,
            "first_only": bool(entry.get("first_only", False)),
        }
        if "pattern" in entry:
            try:
                kwargs["pattern"] = re.compile(entry["pattern"])
            except re.error as exc:
                raise KnowledgeError(f"bad recognizer pattern {entry['pattern']!r}: {exc}") from exc
            kwargs["group"] = int(entry.get("group", 0))
        elif "dictionary" in entry:
            kwargs["dictionary"] = tuple(map(str, entry["dictionary"]))
        else:
            raise KnowledgeError(f"recognizer for {type_name} needs a pattern or dictionary")
        recognizers.append(Recognizer(**kwargs))

    rules: list[RewriteRule] = []
    for entry in raw.get("rewrite_rules", []) or []:
        try:
            pattern = re.compile(entry["pattern"])
            replacement = str(entry["replacement"])
        except KeyError as exc:
            raise KnowledgeError(f"rewrite rule missing key {exc}") from exc
        except re.error as exc:
            raise KnowledgeError(f"bad rewrite pattern: {exc}") from exc
        name = str(entry.get("name", entry["pattern"]))
        rules.append(
            RewriteRule(name, pattern, lambda m, repl=replacement: m.expand(repl))
        )

    synonyms = SynonymDict({str(k): str(v) for k, v in (raw.get("synonyms") or {}).items()})
    return DKConfig(
        recognizers=tuple(recognizers),
        rules=tuple(rules),
        synonyms=synonyms,
        span_types=types,
    )
