"""Precision / recall / F1 on the positive (match) class."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0


def count_outcomes(gold: Sequence[int], predicted: Sequence[int]) -> Counts:
    if len(gold) != len(predicted):
        raise ValueError("gold and predicted lengths differ")
    tp = fp = fn = tn = 0
    for g, p in zip(gold, predicted):
        if p == 1 and g == 1:
            tp += 1
        elif p == 1:
            fp += 1
        elif g == 1:
            fn += 1
        else:
            tn += 1
    return Counts(tp, fp, fn, tn)


def precision_recall_f1(counts: Counts) -> tuple[float, float, float]:
    p = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def f1_score(gold: Sequence[int], predicted: Sequence[int]) -> float:
    return precision_recall_f1(count_outcomes(gold, predicted))[2]
