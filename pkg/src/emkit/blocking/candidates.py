"""Candidate pair sets: key-equality blocking, unions, recall."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..entries import DataEntry, serialize_entry

RecordId = int | str
Record = tuple[RecordId, DataEntry]

PROVENANCES = ("key", "topk", "both")


class BlockingError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateInfo:
    provenance: str
    score: float | None = None


@dataclass
class CandidateSet:
    """Pairs (idB, idA) with provenance: key-equality, top-k similarity, or both."""

    pairs: dict[tuple[RecordId, RecordId], CandidateInfo] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair: tuple[RecordId, RecordId]) -> bool:
        return pair in self.pairs

    def __iter__(self):
        return iter(self.pairs.items())

    def ids(self) -> set[tuple[RecordId, RecordId]]:
        return set(self.pairs)

    def add(self, id_b: RecordId, id_a: RecordId, provenance: str, score: float | None = None) -> None:
        if provenance not in PROVENANCES:
            raise BlockingError(f"unknown provenance {provenance!r}")
        key = (id_b, id_a)
        existing = self.pairs.get(key)
        if existing is None:
            self.pairs[key] = CandidateInfo(provenance, score)
            return
        merged = existing.provenance
        if existing.provenance != provenance:
            merged = "both"
        best = existing.score
        if score is not None and (best is None or score > best):
            best = score
        self.pairs[key] = CandidateInfo(merged, best)

    def rows(self) -> list[tuple[RecordId, RecordId, float | None, str]]:
        """(idB, idA, score, provenance) rows in deterministic order."""
        return [
            (b, a, info.score, info.provenance)
            for (b, a), info in sorted(self.pairs.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1])))
        ]


def key_block(
    table_a: Sequence[Record], table_b: Sequence[Record], key_attr: str
) -> CandidateSet:
    """All pairs whose key attribute values are equal and non-empty.

    Records missing the key (or with an empty value) produce no pairs.
    """
    by_key: dict[str, list[RecordId]] = {}
    for id_a, entry in table_a:
        value = entry.value_of(key_attr)
        if value is not None and value.strip():
            by_key.setdefault(value.strip(), []).append(id_a)
    out = CandidateSet()
    for id_b, entry in table_b:
        value = entry.value_of(key_attr)
        if value is None or not value.strip():
            continue
        for id_a in by_key.get(value.strip(), ()):
            out.add(id_b, id_a, "key")
    return out


def union_block(*sets: CandidateSet) -> CandidateSet:
    """Set union with provenance merge (key + topk becomes both)."""
    out = CandidateSet()
    for cs in sets:
        for (id_b, id_a), info in cs.pairs.items():
            out.add(id_b, id_a, info.provenance, info.score)
    return out


def recall_of(
    candidates: CandidateSet, gold: Iterable[tuple[RecordId, RecordId]]
) -> float:
    """Fraction of gold matching pairs retained; defined as 1.0 for empty gold."""
    gold = set(gold)
    if not gold:
        return 1.0
    hit = sum(1 for pair in gold if pair in candidates)
    return hit / len(gold)


def dedup_records(records: Sequence[Record]) -> list[Record]:
    """Drop exact duplicates (identical serialized entries), keeping first occurrence."""
    seen: set[str] = set()
    out: list[Record] = []
    for rid, entry in records:
        text = serialize_entry(entry)
        if text not in seen:
            seen.add(text)
            out.append((rid, entry))
    return out
