"""TF-IDF cosine top-k blocking over chosen attributes.

Each record's chosen attribute values are concatenated, tokenized into
words, and weighted with the same smoothed TF-IDF formula the summarizer
uses; candidates are the k most cosine-similar A records per B record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..entries import DataEntry, tokenize
from ..summarizer import fit_tfidf
from .candidates import BlockingError, CandidateSet, Record


@dataclass(frozen=True)
class TfidfVector:
    """Sparse token-index -> weight mapping with its L2 norm cached."""

    weights: Mapping[int, float]
    norm: float

    @classmethod
    def from_weights(cls, weights: Mapping[int, float]) -> "TfidfVector":
        return cls(dict(weights), math.sqrt(sum(w * w for w in weights.values())))


def record_text(entry: DataEntry, attrs: Sequence[str] | None) -> str:
    """Concatenated values of the chosen attributes (all attributes if None)."""
    if attrs is None:
        return " ".join(v for _, v in entry.attrs)
    return " ".join(
        v for name in attrs for v in (entry.value_of(name),) if v is not None
    )


class TfidfVectorizer:
    """Fits document frequencies over both tables and vectorizes records."""

    def __init__(self, docs: Sequence[str]):
        if not docs:
            raise BlockingError("cannot fit TF-IDF on an empty corpus")
        self._model = fit_tfidf(docs)
        self._index = {tok: i for i, tok in enumerate(sorted(self._model.df))}

    def vectorize(self, doc: str) -> TfidfVector:
        counts: dict[int, int] = {}
        unknown: dict[str, int] = {}
        for tok in tokenize(doc).tokens:
            if tok in self._index:
                counts[self._index[tok]] = counts.get(self._index[tok], 0) + 1
            else:
                unknown[tok] = unknown.get(tok, 0) + 1
        weights = {
            idx: tf * self._model.idf(self._inverse[idx]) for idx, tf in counts.items()
        }
        return TfidfVector.from_weights(weights)

    @property
    def _inverse(self) -> dict[int, str]:
        inv = getattr(self, "_inv_cache", None)
        if inv is None:
            inv = {i: t for t, i in self._index.items()}
            self._inv_cache = inv
        return inv


def cosine(u: TfidfVector, v: TfidfVector) -> float:
    """Cosine similarity; defined as 0 when either vector has zero norm."""
    if u.norm == 0.0 or v.norm == 0.0:
        return 0.0
    small, large = (u, v) if len(u.weights) <= len(v.weights) else (v, u)
    dot = sum(w * large.weights.get(i, 0.0) for i, w in small.weights.items())
    return dot / (u.norm * v.norm)


def tfidf_topk(
    table_b: Sequence[Record],
    table_a: Sequence[Record],
    attrs: Sequence[str] | None = None,
    k: int = 20,
) -> CandidateSet:
    """The k most TF-IDF-cosine-similar A records for each B record.

    Document frequencies are fitted on both tables' texts. Ties are broken
    toward the lower A id.
    """
    if k < 1:
        raise BlockingError("k must be at least 1")
    docs_a = [record_text(e, attrs) for _, e in table_a]
    docs_b = [record_text(e, attrs) for _, e in table_b]
    if not docs_a or not docs_b:
        return CandidateSet()
    vectorizer = TfidfVectorizer(docs_a + docs_b)
    vecs_a = [vectorizer.vectorize(d) for d in docs_a]

    # Inverted index over A for sparse dot products.
    posting: dict[int, list[tuple[int, float]]] = {}
    for row, vec in enumerate(vecs_a):
        for idx, w in vec.weights.items():
            posting.setdefault(idx, []).append((row, w))

    out = CandidateSet()
    ids_a = [rid for rid, _ in table_a]
    for (id_b, _), doc in zip(table_b, docs_b):
        vec_b = vectorizer.vectorize(doc)
        dots = [0.0] * len(table_a)
        if vec_b.norm > 0.0:
            for idx, w in vec_b.weights.items():
                for row, wa in posting.get(idx, ()):
                    dots[row] += w * wa
        scored = []
        for row, dot in enumerate(dots):
            norm_a = vecs_a[row].norm
            score = dot / (vec_b.norm * norm_a) if vec_b.norm > 0.0 and norm_a > 0.0 else 0.0
            scored.append((-score, ids_a[row], row, score))
        scored.sort(key=lambda s: (s[0], s[1]))
        for _, _, row, score in scored[:k]:
            out.add(id_b, ids_a[row], "topk", score)
    return out
