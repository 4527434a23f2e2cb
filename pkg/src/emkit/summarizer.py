"""TF-IDF summarization of serialized entries.

Long values blow past the encoder's maximum sequence length, and plain
truncation loses the informative tail. The summarizer instead keeps the
non-stopword tokens with the highest TF-IDF scores, preserving every special
token (structural tokens and span tags) and the original token order.

Scoring: ``tfidf(t, d) = tf(t, d) * (ln((1 + N) / (1 + df(t))) + 1)`` with
term frequency computed inside the single serialized string being summarized
and document frequency from the fitted corpus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import AbstractSet, Iterable, Mapping

from .entries import TokenSeq, tokenize


class SummarizerError(ValueError):
    """Raised for empty corpora or unusable budgets."""


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load the stopword list (one lowercase token per line, UTF-8).

    Without a path, returns the pinned English list shipped with the package.
    """
    if path is None:
        text = resources.files("emkit.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class TfidfModel:
    """Document frequencies over a corpus of serialized entries."""

    df: Mapping[str, int]
    n_docs: int

    def __post_init__(self) -> None:
        if self.n_docs < 1:
            raise SummarizerError("corpus must contain at least one document")
        for token, count in self.df.items():
            if not 1 <= count <= self.n_docs:
                raise SummarizerError(f"df({token!r})={count} outside [1, {self.n_docs}]")

    def idf(self, token: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df.get(token, 0))) + 1.0

    def tfidf(self, token: str, doc: TokenSeq) -> float:
        tf = sum(
            1 for tok, sp in zip(doc.tokens, doc.special) if not sp and tok == token
        )
        return tf * self.idf(token)


def fit_tfidf(corpus: Iterable[str], specials: AbstractSet[str] | None = None) -> TfidfModel:
    """Build document frequencies over whitespace tokens, excluding specials."""
    df: dict[str, int] = {}
    n_docs = 0
    for doc in corpus:
        n_docs += 1
        seq = tokenize(doc, specials)
        seen = {tok for tok, sp in zip(seq.tokens, seq.special) if not sp}
        for tok in seen:
            df[tok] = df.get(tok, 0) + 1
    if n_docs == 0:
        raise SummarizerError("corpus must contain at least one document")
    return TfidfModel(df, n_docs)


def summarize_tokens(
    seq: TokenSeq,
    model: TfidfModel,
    stopwords: AbstractSet[str],
    max_len: int,
) -> TokenSeq:
    """Token-level summarization; see :func:`summarize`."""
    n_special = sum(seq.special)
    if max_len < n_special:
        raise SummarizerError(
            f"max_len={max_len} below the {n_special} special tokens in the input"
        )
    budget = max_len - n_special

    # Every occurrence of a token type shares one score; candidates are kept
    # in (score desc, position asc) order until the budget is exhausted.
    scores: dict[str, float] = {}
    candidates: list[int] = []
    for pos, (tok, sp) in enumerate(zip(seq.tokens, seq.special)):
        if sp or tok in stopwords:
            continue
        if tok not in scores:
            scores[tok] = model.tfidf(tok, seq)
        candidates.append(pos)
    candidates.sort(key=lambda pos: (-scores[seq.tokens[pos]], pos))
    kept = set(candidates[:budget])

    out_tokens: list[str] = []
    out_special: list[bool] = []
    for pos, (tok, sp) in enumerate(zip(seq.tokens, seq.special)):
        if sp or pos in kept:
            out_tokens.append(tok)
            out_special.append(sp)
    return TokenSeq(tuple(out_tokens), tuple(out_special))


def summarize(
    text: str,
    model: TfidfModel,
    stopwords: AbstractSet[str],
    max_len: int,
    specials: AbstractSet[str] | None = None,
) -> str:
    """Summarize a serialized string down to at most ``max_len`` tokens.

    All special tokens survive in order (span tags are ignored by the scorer,
    never dropped); stopwords are dropped; the remaining tokens are kept by
    descending TF-IDF, ties broken toward earlier positions. The output is a
    subsequence of the input token sequence.
    """
    return summarize_tokens(tokenize(text, specials), model, stopwords, max_len).text()


def entry_budget(max_len: int) -> int:
    """Per-entry token budget so an assembled pair fits ``max_len``.

    A pair adds one ``[CLS]`` and two ``[SEP]`` tokens, hence
    ``(max_len - 3) // 2`` per entry.
    """
    if max_len < 5:
        raise SummarizerError(f"max_len={max_len} leaves no room for a pair")
    return (max_len - 3) // 2
