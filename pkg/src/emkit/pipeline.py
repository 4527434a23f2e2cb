"""Dataset ingestion, splits, preprocessing, orchestration, and evaluation.

Datasets come in two layouts:

* ``magellan`` — a directory with two entity tables (``tableA.csv``,
  ``tableB.csv``, header-bearing delimited text with an ``id`` column) and
  labeled pair files (``train.csv``/``valid.csv``/``test.csv`` or a single
  ``pairs.csv``) of rows ``ltable_id,rtable_id,label``.
* ``pairs`` — pre-serialized pair files: one ``<serialized pair>\\t<label>``
  per line.

``run_pipeline`` wires the stages end to end: load, optional
domain-knowledge injection, optional TF-IDF summarization, training with
optional MixDA augmentation, evaluation, and artifact writing. Every stage
toggles independently. Artifacts are written atomically and are
byte-deterministic given a fixed seed and config.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .entries import DataEntry, LabeledPair, assemble_pair, serialize_entry, tokenize
from .knowledge import DKConfig
from .metrics import Counts, count_outcomes, precision_recall_f1
from .summarizer import TfidfModel, entry_budget, fit_tfidf, load_stopwords, summarize_tokens
from .encoder import (
    Checkpoint,
    EncoderConfig,
    TrainConfig,
    build_model,
    save_checkpoint,
    train,
)

ENV_DATA_DIR = "EMKIT_DATA_DIR"


class DatasetError(ValueError):
    """Raised for malformed dataset files; messages carry file and line."""


@dataclass
class Dataset:
    """Two entity tables plus labeled id pairs per split.

    For pre-serialized input the tables are empty and ``raw_splits`` holds
    the (text, label) examples directly.
    """

    table_a: dict[str, DataEntry] = field(default_factory=dict)
    table_b: dict[str, DataEntry] = field(default_factory=dict)
    splits: dict[str, list[tuple[str, str, int]]] = field(default_factory=dict)
    raw_splits: dict[str, list[tuple[str, int]]] = field(default_factory=dict)

    @property
    def preserialized(self) -> bool:
        return bool(self.raw_splits)

    def labeled_pairs(self, split: str) -> list[LabeledPair]:
        out = []
        for id_a, id_b, label in self.splits.get(split, []):
            out.append(LabeledPair(self.table_a[id_a], self.table_b[id_b], label))
        return out


def resolve_data_path(path: str | Path) -> Path:
    """Resolve a dataset path, consulting $EMKIT_DATA_DIR for relative paths."""
    p = Path(path)
    if not p.is_absolute() and not p.exists():
        base = os.environ.get(ENV_DATA_DIR)
        if base and (Path(base) / p).exists():
            return Path(base) / p
    return p


def _read_table(path: Path) -> dict[str, DataEntry]:
    table: dict[str, DataEntry] = {}
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty table file") from None
        if "id" not in header:
            raise DatasetError(f"{path}: missing 'id' column")
        id_col = header.index("id")
        attr_cols = [(i, name) for i, name in enumerate(header) if i != id_col]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rid = row[id_col].strip()
            if not rid:
                raise DatasetError(f"{path}:{lineno}: empty id")
            if rid in table:
                raise DatasetError(f"{path}:{lineno}: duplicate id {rid!r}")
            table[rid] = DataEntry.from_pairs(
                [(name, row[i]) for i, name in attr_cols]
            )
    return table


def _read_pairs_file(
    path: Path, table_a: Mapping[str, DataEntry], table_b: Mapping[str, DataEntry]
) -> list[tuple[str, str, int]]:
    pairs: list[tuple[str, str, int]] = []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty pairs file")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 3:
                raise DatasetError(f"{path}:{lineno}: expected ltable_id,rtable_id,label")
            id_a, id_b, label_text = row[0].strip(), row[1].strip(), row[2].strip()
            if id_a not in table_a:
                raise DatasetError(f"{path}:{lineno}: unknown tableA id {id_a!r}")
            if id_b not in table_b:
                raise DatasetError(f"{path}:{lineno}: unknown tableB id {id_b!r}")
            if label_text not in ("0", "1"):
                raise DatasetError(f"{path}:{lineno}: label must be 0 or 1, got {label_text!r}")
            pairs.append((id_a, id_b, int(label_text)))
    return pairs


def _read_serialized_pairs(path: Path) -> list[tuple[str, int]]:
    out: list[tuple[str, int]] = []
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise DatasetError(f"{path}:{lineno}: expected '<pair>\\t<label>'")
            text, label_text = line.rsplit("\t", 1)
            if label_text.strip() not in ("0", "1"):
                raise DatasetError(
                    f"{path}:{lineno}: label must be 0 or 1, got {label_text.strip()!r}"
                )
            out.append((text, int(label_text)))
    return out


def load_dataset(path: str | Path, format: str = "magellan") -> Dataset:
    """Load a dataset directory (``magellan``) or pre-serialized file (``pairs``)."""
    path = resolve_data_path(path)
    if format == "pairs":
        p = Path(path)
        if p.is_dir():
            splits = {}
            for name in ("train", "valid", "test"):
                f = p / f"{name}.txt"
                if f.exists():
                    splits[name] = _read_serialized_pairs(f)
            if not splits:
                raise DatasetError(f"{p}: no train/valid/test .txt files found")
            return Dataset(raw_splits=splits)
        return Dataset(raw_splits={"train": _read_serialized_pairs(Path(path))})
    if format != "magellan":
        raise DatasetError(f"unknown dataset format {format!r}")

    d = Path(path)
    table_a = _read_table(d / "tableA.csv")
    table_b = _read_table(d / "tableB.csv")
    splits: dict[str, list[tuple[str, str, int]]] = {}
    for name in ("train", "valid", "test"):
        f = d / f"{name}.csv"
        if f.exists():
            splits[name] = _read_pairs_file(f, table_a, table_b)
    if not splits:
        f = d / "pairs.csv"
        if not f.exists():
            raise DatasetError(f"{d}: no pair files (train/valid/test.csv or pairs.csv)")
        splits["all"] = _read_pairs_file(f, table_a, table_b)
    return Dataset(table_a=table_a, table_b=table_b, splits=splits)


def split_dataset(
    pairs: Sequence, ratios: Sequence[float] = (3, 1, 1), seed: int = 0
) -> list[list]:
    """Seeded shuffle followed by a contiguous cut at the given ratios.

    Quotas use largest-remainder apportionment, so 10 pairs at 3:1:1 give
    6/2/2. Every split with a positive ratio must receive at least one pair.
    """
    ratios = [float(r) for r in ratios]
    if not ratios or any(r < 0 for r in ratios) or sum(ratios) == 0:
        raise DatasetError("ratios must be non-negative and sum to a positive value")
    nonzero = sum(1 for r in ratios if r > 0)
    if len(pairs) < nonzero:
        raise DatasetError(
            f"cannot cut {len(pairs)} pairs into {nonzero} non-empty splits"
        )
    total = sum(ratios)
    quotas = [len(pairs) * r / total for r in ratios]
    sizes = [int(q) for q in quotas]
    # largest-remainder: distribute leftovers, then guarantee non-empty splits
    remainders = sorted(
        range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i)
    )
    leftover = len(pairs) - sum(sizes)
    for i in remainders[:leftover]:
        sizes[i] += 1
    for i, r in enumerate(ratios):
        if r > 0 and sizes[i] == 0:
            donor = max(range(len(sizes)), key=lambda j: sizes[j])
            sizes[donor] -= 1
            sizes[i] += 1

    order = np.random.default_rng(seed).permutation(len(pairs))
    shuffled = [pairs[i] for i in order]
    out, start = [], 0
    for size in sizes:
        out.append(shuffled[start : start + size])
        start += size
    return out


@dataclass(frozen=True)
class EvalReport:
    """Positive-class precision/recall/F1 plus outcome counts."""

    precision: float
    recall: float
    f1: float
    counts: Counts
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
            "tn": self.counts.tn,
            "degenerate": self.degenerate,
        }


def report_from_predictions(gold: Sequence[int], predicted: Sequence[int]) -> EvalReport:
    counts = count_outcomes(gold, predicted)
    p, r, f1 = precision_recall_f1(counts)
    degenerate = (counts.tp + counts.fp == 0) and (counts.tp + counts.fn == 0)
    return EvalReport(p, r, f1, counts, degenerate)


def evaluate(model, pairs: Sequence[tuple[str, int]]) -> EvalReport:
    """Argmax predictions on (serialized pair, label) examples."""
    gold = [label for _, label in pairs]
    predicted = model.predict([text for text, _ in pairs])
    return report_from_predictions(gold, list(predicted))


@dataclass
class PairPreprocessor:
    """Serializes entries with optional DK injection and summarization."""

    dk: DKConfig | None = None
    tfidf: TfidfModel | None = None
    stopwords: frozenset[str] = frozenset()
    max_len: int | None = None

    def specials(self) -> frozenset[str]:
        from .entries import DEFAULT_SPECIAL_TOKENS

        extra = self.dk.tag_tokens() if self.dk else frozenset()
        return DEFAULT_SPECIAL_TOKENS | extra

    def entry_text(self, entry: DataEntry) -> str:
        if self.dk is not None:
            entry = self.dk.preprocess_entry(entry)
        text = serialize_entry(entry)
        if self.tfidf is not None and self.max_len is not None:
            seq = tokenize(text, self.specials())
            budget = entry_budget(self.max_len)
            if len(seq) > budget:
                seq = summarize_tokens(seq, self.tfidf, self.stopwords, budget)
            text = seq.text()
        return text

    def pair_text(self, pair: LabeledPair) -> str:
        return assemble_pair(self.entry_text(pair.left), self.entry_text(pair.right))


@dataclass
class PipelineConfig:
    """Everything one training run needs; mirrors the CLI flags."""

    data_path: str
    data_format: str = "magellan"
    out_dir: str = "runs/latest"
    encoder: EncoderConfig | None = None
    training: TrainConfig = field(default_factory=TrainConfig)
    da_operator: str | None = None
    dk: DKConfig | None = None
    summarize: bool = False
    max_len: int = 256
    split_ratios: tuple[float, float, float] = (3, 1, 1)
    split_seed: int = 0


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def prepare_examples(
    dataset: Dataset, config: PipelineConfig
) -> tuple[dict[str, list[tuple[str, int]]], PairPreprocessor]:
    """Serialized (text, label) examples per split, after DK/SU stages."""
    pre = PairPreprocessor(
        dk=config.dk,
        stopwords=load_stopwords() if config.summarize else frozenset(),
        max_len=config.max_len if config.summarize else None,
    )
    if dataset.preserialized:
        return dict(dataset.raw_splits), pre

    if config.summarize:
        corpus = [
            serialize_entry(config.dk.preprocess_entry(e) if config.dk else e)
            for table in (dataset.table_a, dataset.table_b)
            for e in table.values()
        ]
        pre.tfidf = fit_tfidf(corpus, pre.specials())

    splits = dict(dataset.splits)
    if set(splits) == {"all"}:
        tr, va, te = split_dataset(splits["all"], config.split_ratios, config.split_seed)
        splits = {"train": tr, "valid": va, "test": te}

    out: dict[str, list[tuple[str, int]]] = {}
    for name, id_pairs in splits.items():
        examples = []
        for id_a, id_b, label in id_pairs:
            pair = LabeledPair(dataset.table_a[id_a], dataset.table_b[id_b], label)
            examples.append((pre.pair_text(pair), label))
        out[name] = examples
    return out, pre


def run_pipeline(config: PipelineConfig) -> dict:
    """load -> DK -> summarize -> train (optional DA) -> evaluate -> write artifacts.

    Returns a manifest with artifact paths and metrics. The checkpoint and
    report bytes are deterministic given (seed, config).
    """
    dataset = load_dataset(config.data_path, config.data_format)
    examples, pre = prepare_examples(dataset, config)
    if "train" not in examples or not examples["train"]:
        raise DatasetError("dataset has no training examples")
    train_set = examples["train"]
    valid_set = examples.get("valid") or train_set
    test_set = examples.get("test")

    enc_cfg = config.encoder or EncoderConfig(vocab_size=1, max_seq_len=config.max_len)
    model = build_model(
        enc_cfg, [t for t, _ in train_set], config.training.seed, pre.specials()
    )
    ckpt = train(model, train_set, valid_set, config.training, da=config.da_operator)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "model.ckpt"
    save_checkpoint(ckpt, ckpt_path)

    report: dict = {
        "best_epoch": ckpt.epoch,
        "valid_f1": ckpt.val_f1,
        "stages": {
            "dk": config.dk is not None,
            "summarize": config.summarize,
            "da": config.da_operator,
        },
    }
    if test_set:
        report["test"] = evaluate(model, test_set).to_dict()
    report_path = out_dir / "report.json"
    _atomic_write(
        report_path,
        json.dumps(report, sort_keys=True, indent=2).encode("utf-8") + b"\n",
    )
    return {
        "checkpoint": str(ckpt_path),
        "report": str(report_path),
        **report,
    }
