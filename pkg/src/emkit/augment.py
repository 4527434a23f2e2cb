"""Data-augmentation operators for serialized entry pairs, plus MixDA.

Five operators at three levels:

==============  ====================================================
span_del        Delete a randomly sampled span of tokens
span_shuffle    Randomly sample a span and shuffle the tokens' order
attr_del        Delete a randomly chosen attribute and its value
attr_shuffle    Randomly shuffle the orders of all attributes
entry_swap      Swap the order of the two data entries
==============  ====================================================

All sampling is uniform. Span operators touch at most 4 consecutive
non-special tokens and never cross a special token, so the structural
invariants of a serialized pair (one [CLS], two [SEP], [COL]/[VAL]
segments) are preserved. Augmented examples keep the original label.

entry_swap is deterministic here; the probability-1/2 coin the training
loop flips lives in the trainer so operators stay reproducible given an RNG.

MixDA blends the encoder representation of the original example with that
of the augmented one: ``lam * rep_orig + (1 - lam) * rep_aug`` with
``lam ~ Beta(alpha, alpha)``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .entries import CLS, COL, SEP, TokenSeq

MAX_SPAN_LEN = 4

OPERATOR_NAMES = ("span_del", "span_shuffle", "attr_del", "attr_shuffle", "entry_swap")

SeededRng = np.random.Generator


class AugmentError(ValueError):
    pass


def make_rng(seed: int) -> SeededRng:
    """A deterministic generator: identical seed, identical augmentations."""
    return np.random.default_rng(seed)


def _sample_span(seq: TokenSeq, rng: SeededRng) -> tuple[int, int] | None:
    """Sample (start, length) over non-special tokens, never crossing specials.

    Start is uniform over eligible positions; length uniform in
    [1, min(4, remaining run of non-special tokens)].
    """
    eligible = [i for i, sp in enumerate(seq.special) if not sp]
    if not eligible:
        return None
    start = int(rng.choice(eligible))
    run = 0
    for i in range(start, len(seq)):
        if seq.special[i]:
            break
        run += 1
    length = int(rng.integers(1, min(MAX_SPAN_LEN, run) + 1))
    return start, length


def span_del(seq: TokenSeq, rng: SeededRng) -> TokenSeq:
    """Delete a random span of at most 4 non-special tokens."""
    span = _sample_span(seq, rng)
    if span is None:
        return seq
    start, length = span
    keep = [i for i in range(len(seq)) if not start <= i < start + length]
    return TokenSeq(
        tuple(seq.tokens[i] for i in keep), tuple(seq.special[i] for i in keep)
    )


def span_shuffle(seq: TokenSeq, rng: SeededRng) -> TokenSeq:
    """Uniformly permute the tokens of a random span of at most 4 non-specials."""
    span = _sample_span(seq, rng)
    if span is None:
        return seq
    start, length = span
    perm = rng.permutation(length)
    tokens = list(seq.tokens)
    tokens[start : start + length] = [seq.tokens[start + int(j)] for j in perm]
    return TokenSeq(tuple(tokens), seq.special)


def _entry_slices(seq: TokenSeq) -> tuple[slice, slice] | None:
    """Token ranges of the two entry segments of ``[CLS] A [SEP] B [SEP]``."""
    if not seq.tokens or seq.tokens[0] != CLS:
        return None
    seps = [i for i, t in enumerate(seq.tokens) if t == SEP and seq.special[i]]
    if len(seps) != 2 or seps[1] != len(seq) - 1:
        return None
    return slice(1, seps[0]), slice(seps[0] + 1, seps[1])


def _attr_segments(seq: TokenSeq, entry: slice) -> list[slice]:
    """Attribute segments ([COL] name [VAL] value) inside one entry range."""
    starts = [
        i for i in range(entry.start, entry.stop) if seq.tokens[i] == COL and seq.special[i]
    ]
    segments = []
    for idx, s in enumerate(starts):
        stop = starts[idx + 1] if idx + 1 < len(starts) else entry.stop
        segments.append(slice(s, stop))
    return segments


def attr_del(seq: TokenSeq, rng: SeededRng) -> TokenSeq:
    """Delete one attribute segment, chosen uniformly over both entries."""
    entries = _entry_slices(seq)
    if entries is None:
        return seq
    segments = _attr_segments(seq, entries[0]) + _attr_segments(seq, entries[1])
    if not segments:
        return seq
    victim = segments[int(rng.integers(len(segments)))]
    keep = [i for i in range(len(seq)) if not victim.start <= i < victim.stop]
    return TokenSeq(
        tuple(seq.tokens[i] for i in keep), tuple(seq.special[i] for i in keep)
    )


def attr_shuffle(seq: TokenSeq, rng: SeededRng) -> TokenSeq:
    """Shuffle the attribute order of both entries (one permutation per side)."""
    entries = _entry_slices(seq)
    if entries is None:
        return seq
    tokens: list[str] = [seq.tokens[0]]
    special: list[bool] = [seq.special[0]]
    for entry in entries:
        segments = _attr_segments(seq, entry)
        # Tokens before the first [COL] (if any) stay in place.
        prefix_stop = segments[0].start if segments else entry.stop
        tokens.extend(seq.tokens[entry.start : prefix_stop])
        special.extend(seq.special[entry.start : prefix_stop])
        for j in rng.permutation(len(segments)) if segments else []:
            seg = segments[int(j)]
            tokens.extend(seq.tokens[seg])
            special.extend(seq.special[seg])
        tokens.append(seq.tokens[entry.stop])
        special.append(seq.special[entry.stop])
    return TokenSeq(tuple(tokens), tuple(special))


def entry_swap(seq: TokenSeq, rng: SeededRng | None = None) -> TokenSeq:
    """Swap the two entry segments: ``[CLS] A [SEP] B [SEP]`` -> ``[CLS] B [SEP] A [SEP]``."""
    entries = _entry_slices(seq)
    if entries is None:
        return seq
    left, right = entries
    tokens = (
        (seq.tokens[0],)
        + seq.tokens[right]
        + (SEP,)
        + seq.tokens[left]
        + (SEP,)
    )
    special = (
        (seq.special[0],)
        + seq.special[right]
        + (True,)
        + seq.special[left]
        + (True,)
    )
    return TokenSeq(tokens, special)


_OPERATORS: dict[str, Callable[[TokenSeq, SeededRng], TokenSeq]] = {
    "span_del": span_del,
    "span_shuffle": span_shuffle,
    "attr_del": attr_del,
    "attr_shuffle": attr_shuffle,
    "entry_swap": entry_swap,
}


def augment(seq: TokenSeq, operator: str, rng: SeededRng) -> TokenSeq:
    """Apply one named operator; inapplicable operators return the input unchanged."""
    try:
        op = _OPERATORS[operator]
    except KeyError:
        raise AugmentError(
            f"unknown operator {operator!r}; expected one of {OPERATOR_NAMES}"
        ) from None
    return op(seq, rng)


def mixda_lambda(alpha: float, rng: SeededRng) -> float:
    """Draw the MixDA interpolation weight from Beta(alpha, alpha)."""
    if not 0.0 < alpha <= 1.0:
        raise AugmentError(f"alpha must be in (0, 1], got {alpha}")
    return float(rng.beta(alpha, alpha))


def mixda_combine(rep_orig: np.ndarray, rep_aug: np.ndarray, lam: float) -> np.ndarray:
    """Convex combination ``lam * rep_orig + (1 - lam) * rep_aug``.

    The endpoints are exact: lam=1 returns rep_orig and lam=0 returns rep_aug.
    """
    rep_orig = np.asarray(rep_orig)
    rep_aug = np.asarray(rep_aug)
    if rep_orig.shape != rep_aug.shape:
        raise AugmentError(
            f"representation shapes differ: {rep_orig.shape} vs {rep_aug.shape}"
        )
    if not 0.0 <= lam <= 1.0:
        raise AugmentError(f"lambda must be in [0, 1], got {lam}")
    if lam == 1.0:
        return rep_orig.copy()
    if lam == 0.0:
        return rep_aug.copy()
    return lam * rep_orig + (1.0 - lam) * rep_aug
