"""Token vocabulary: built from the training corpus plus special tokens."""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Iterable, Sequence

from ..entries import DEFAULT_SPECIAL_TOKENS, TokenSeq, tokenize

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"


@dataclass(frozen=True)
class Vocabulary:
    """Immutable token -> id mapping with a reserved UNK for unseen tokens."""

    tokens: tuple[str, ...]
    specials: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if UNK_TOKEN not in self._index:
            raise ValueError("vocabulary must contain the UNK token")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def unk_id(self) -> int:
        return self._index[UNK_TOKEN]

    def id_of(self, token: str) -> int:
        return self._index.get(token, self.unk_id)

    def encode(self, seq: TokenSeq | Sequence[str]) -> list[int]:
        toks = seq.tokens if isinstance(seq, TokenSeq) else seq
        return [self.id_of(t) for t in toks]

    def encode_text(self, text: str) -> list[int]:
        return self.encode(tokenize(text, self.specials))

    @classmethod
    def build(
        cls,
        texts: Iterable[str],
        specials: AbstractSet[str] | None = None,
    ) -> "Vocabulary":
        """Deterministic vocabulary: reserved tokens, specials, then sorted corpus tokens."""
        if specials is None:
            specials = DEFAULT_SPECIAL_TOKENS
        seen: set[str] = set()
        for text in texts:
            seen.update(tokenize(text, specials).tokens)
        ordered = [PAD_TOKEN, UNK_TOKEN]
        ordered.extend(sorted(specials))
        ordered.extend(sorted(seen - set(ordered)))
        return cls(tuple(ordered), frozenset(specials))
