"""Batch command-line interface.

Subcommands: train, eval, predict, block, augment-preview, summarize.
A YAML config file can prefill any training flag; explicit flags win.
Relative data paths fall back to $EMKIT_DATA_DIR.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from .augment import OPERATOR_NAMES, make_rng, augment
from .blocking import (
    BlockingReport,
    CandidateSet,
    EmbeddingMatrix,
    blocked_topk,
    dedup_records,
    key_block,
    tfidf_topk,
    union_block,
)
from .encoder import EncoderConfig, TrainConfig, load_checkpoint
from .entries import tokenize
from .knowledge import default_dk_config, load_dk_config
from .pipeline import (
    PipelineConfig,
    _read_serialized_pairs,
    evaluate,
    load_dataset,
    resolve_data_path,
    run_pipeline,
)
from .summarizer import fit_tfidf, load_stopwords, summarize


@click.group()
def main() -> None:
    """Entity-matching toolkit: serialize, inject knowledge, summarize, augment, match, block."""


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise click.ClickException(f"{path}: config must be a mapping")
    return data


@main.command()
@click.option("--data", required=True, help="Dataset directory or pairs file.")
@click.option("--format", "data_format", default="magellan", type=click.Choice(["magellan", "pairs"]))
@click.option("--out", "out_dir", default="runs/latest", show_default=True)
@click.option("--config", "config_file", default=None, help="YAML file prefilling these flags.")
@click.option("--dk", "dk_mode", default="off", type=click.Choice(["off", "builtin"]), show_default=True)
@click.option("--dk-config", default=None, help="Declarative recognizer/rule/synonym file.")
@click.option("--summarize", "do_summarize", is_flag=True, default=None)
@click.option("--max-len", default=None, type=int, help="Max sequence length (default 256).")
@click.option("--da", "da_operator", default=None, type=click.Choice(OPERATOR_NAMES))
@click.option("--lr", default=None, type=float, help="Learning rate (default 3e-5).")
@click.option("--batch-size", default=None, type=int)
@click.option("--epochs", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--mixda-alpha", default=None, type=float)
@click.option("--embed-dim", default=None, type=int)
@click.option("--layers", default=None, type=int)
@click.option("--heads", default=None, type=int)
@click.option("--ffn-dim", default=None, type=int)
@click.option("--dropout", default=None, type=float)
@click.option("--runs", default=1, show_default=True, help="Repeat with seeds seed..seed+N-1 and average F1.")
def train(**kw) -> None:
    """Train a matcher; writes model.ckpt and report.json into --out."""
    file_cfg = _load_config_file(kw.pop("config_file"))

    def pick(key, flag_value, default):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, default)

    tc_kwargs = dict(
        learning_rate=float(pick("lr", kw["lr"], 3e-5)),
        batch_size=pick("batch_size", kw["batch_size"], None),
        epochs=int(pick("epochs", kw["epochs"], 15)),
        seed=int(pick("seed", kw["seed"], 0)),
        mixda_alpha=float(pick("mixda_alpha", kw["mixda_alpha"], 0.8)),
    )
    max_len = int(pick("max_len", kw["max_len"], 256))
    enc = EncoderConfig(
        vocab_size=1,
        embed_dim=int(pick("embed_dim", kw["embed_dim"], 64)),
        num_layers=int(pick("layers", kw["layers"], 2)),
        num_heads=int(pick("heads", kw["heads"], 2)),
        ffn_dim=pick("ffn_dim", kw["ffn_dim"], None),
        max_seq_len=max_len,
        dropout=float(pick("dropout", kw["dropout"], 0.0)),
    )
    dk_config_path = kw["dk_config"] or file_cfg.get("dk_config")
    dk_mode = kw["dk_mode"] if kw["dk_mode"] != "off" else file_cfg.get("dk", "off")
    if dk_config_path:
        dk = load_dk_config(dk_config_path)
    elif dk_mode == "builtin":
        dk = default_dk_config()
    else:
        dk = None
    do_summarize = kw["do_summarize"]
    if do_summarize is None:
        do_summarize = bool(file_cfg.get("summarize", False))
    da_operator = kw["da_operator"] or file_cfg.get("da")

    runs = int(kw["runs"])
    base_seed = tc_kwargs["seed"]
    results = []
    for i in range(runs):
        cfg = PipelineConfig(
            data_path=kw["data"],
            data_format=kw["data_format"],
            out_dir=str(Path(kw["out_dir"]) / f"run{i}") if runs > 1 else kw["out_dir"],
            encoder=enc,
            training=TrainConfig(**{**tc_kwargs, "seed": base_seed + i}),
            da_operator=da_operator,
            dk=dk,
            summarize=do_summarize,
            max_len=max_len,
        )
        manifest = run_pipeline(cfg)
        results.append(manifest)
        test_f1 = manifest.get("test", {}).get("f1")
        click.echo(
            f"run {i}: seed {base_seed + i} best epoch {manifest['best_epoch']} "
            f"valid F1 {manifest['valid_f1']:.4f}"
            + (f" test F1 {test_f1:.4f}" if test_f1 is not None else "")
        )
    if runs > 1:
        test_f1s = [r["test"]["f1"] for r in results if "test" in r]
        if test_f1s:
            click.echo(f"average test F1 over {len(test_f1s)} runs: {np.mean(test_f1s):.4f}")
    click.echo(f"checkpoint: {results[-1]['checkpoint']}")
    click.echo(f"report: {results[-1]['report']}")


def _examples_for_split(data: str, data_format: str, split: str):
    dataset = load_dataset(data, data_format)
    from .pipeline import prepare_examples

    examples, _ = prepare_examples(dataset, PipelineConfig(data_path=data, data_format=data_format))
    if split not in examples:
        raise click.ClickException(f"split {split!r} not present; have {sorted(examples)}")
    return examples[split]


@main.command("eval")
@click.option("--checkpoint", required=True)
@click.option("--data", required=True)
@click.option("--format", "data_format", default="magellan", type=click.Choice(["magellan", "pairs"]))
@click.option("--split", default="test", show_default=True)
@click.option("--out", "out_path", default=None, help="Write the report JSON here.")
def eval_cmd(checkpoint, data, data_format, split, out_path) -> None:
    """Evaluate a checkpoint on one split; prints precision/recall/F1."""
    model = load_checkpoint(checkpoint).to_model()
    pairs = _examples_for_split(data, data_format, split)
    report = evaluate(model, pairs)
    payload = json.dumps(report.to_dict(), sort_keys=True, indent=2)
    if out_path:
        Path(out_path).write_text(payload + "\n", encoding="utf-8")
    click.echo(payload)


@main.command()
@click.option("--checkpoint", required=True)
@click.option("--input", "input_path", required=True, help="Pre-serialized pairs (label column optional).")
@click.option("--out", "out_path", default="-", show_default=True)
@click.option("--workers", default=1, show_default=True)
def predict(checkpoint, input_path, out_path, workers) -> None:
    """Predict match probabilities for serialized pairs, one per line."""
    model = load_checkpoint(checkpoint).to_model()
    texts = []
    for line in Path(resolve_data_path(input_path)).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        texts.append(line.rsplit("\t", 1)[0] if "\t" in line else line)
    probs = model.predict_proba(texts, workers=workers)
    rows = [
        f"{int(p[1] > p[0])}\t{p[1]:.6f}\t{text}" for text, p in zip(texts, probs)
    ]
    payload = "\n".join(rows) + ("\n" if rows else "")
    if out_path == "-":
        click.echo(payload, nl=False)
    else:
        Path(out_path).write_text(payload, encoding="utf-8")
        click.echo(f"wrote {len(rows)} predictions to {out_path}", err=True)


@main.command()
@click.option("--data", required=True, help="Directory with tableA.csv / tableB.csv.")
@click.option("--key-attr", default=None, help="Equality-blocking attribute (e.g. zipcode).")
@click.option("--sim", default="tfidf", type=click.Choice(["tfidf", "embedding", "none"]), show_default=True)
@click.option("--attrs", default=None, help="Comma-separated attributes for tfidf similarity.")
@click.option("--topk", default=20, show_default=True)
@click.option("--block-size", default=1024, show_default=True)
@click.option("--checkpoint", default=None, help="Encoder checkpoint (embedding similarity / matching).")
@click.option("--match", "do_match", is_flag=True, help="Score candidates with the checkpoint matcher.")
@click.option("--dedup/--no-dedup", default=False, show_default=True, help="Drop exact-duplicate records first.")
@click.option("--out", "out_path", required=True)
@click.option("--report", "report_path", default=None, help="Write phase timings JSON here.")
def block(data, key_attr, sim, attrs, topk, block_size, checkpoint, do_match, dedup, out_path, report_path) -> None:
    """Generate candidate pairs; emits (idB, idA, score, provenance) rows."""
    from .pipeline import _read_table

    d = Path(resolve_data_path(data))
    table_a = list(_read_table(d / "tableA.csv").items())
    table_b = list(_read_table(d / "tableB.csv").items())
    report = BlockingReport()
    if dedup:
        table_a = dedup_records(table_a)
        table_b = dedup_records(table_b)

    sets = []
    with report.phase("blocking"):
        if key_attr:
            sets.append(key_block(table_a, table_b, key_attr))
        if sim == "tfidf":
            attr_list = [a.strip() for a in attrs.split(",")] if attrs else None
            sets.append(tfidf_topk(table_b, table_a, attr_list, k=topk))

    model = None
    if checkpoint:
        model = load_checkpoint(checkpoint).to_model()
    if sim == "embedding":
        if model is None:
            raise click.ClickException("--sim embedding needs --checkpoint")
        with report.phase("encoding"):
            mat_a = EmbeddingMatrix.from_vectors(
                np.array([model.encode_record(e) for _, e in table_a])
            )
            mat_b = EmbeddingMatrix.from_vectors(
                np.array([model.encode_record(e) for _, e in table_b])
            )
        with report.phase("search"):
            by_row = blocked_topk(mat_b, mat_a, k=topk, block_size=block_size)
        translated = CandidateSet()
        for (row_b, row_a), info in by_row:
            translated.add(table_b[row_b][0], table_a[row_a][0], info.provenance, info.score)
        sets.append(translated)

    candidates = union_block(*sets)
    report.candidate_count = len(candidates)

    if do_match:
        if model is None:
            raise click.ClickException("--match needs --checkpoint")
        from .entries import serialize_pair

        entry_a = dict(table_a)
        entry_b = dict(table_b)
        with report.phase("matching"):
            rows = candidates.rows()
            texts = [serialize_pair(entry_b[b], entry_a[a]) for b, a, _, _ in rows]
            probs = model.predict_proba(texts)
        match_scores = {(b, a): float(p[1]) for (b, a, _, _), p in zip(rows, probs)}
    else:
        match_scores = {}

    lines = []
    for id_b, id_a, score, provenance in candidates.rows():
        shown = match_scores.get((id_b, id_a), score)
        lines.append(f"{id_b}\t{id_a}\t{'' if shown is None else f'{shown:.6f}'}\t{provenance}")
    Path(out_path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    click.echo(report.format_table())
    if report_path:
        Path(report_path).write_text(
            json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    click.echo(f"wrote {len(lines)} candidate pairs to {out_path}")


@main.command("augment-preview")
@click.option("--op", "operator", required=True, type=click.Choice(OPERATOR_NAMES))
@click.option("--input", "input_path", required=True, help="Pre-serialized pairs file.")
@click.option("--seed", default=0, show_default=True)
@click.option("-n", "count", default=5, show_default=True)
def augment_preview(operator, input_path, seed, count) -> None:
    """Show before/after token sequences for one augmentation operator."""
    pairs = _read_serialized_pairs(Path(resolve_data_path(input_path)))
    rng = make_rng(seed)
    for text, _ in pairs[:count]:
        seq = tokenize(text)
        out = augment(seq, operator, rng)
        click.echo(f"- before: {seq.text()}")
        click.echo(f"  after:  {out.text()}")


@main.command("summarize")
@click.option("--input", "input_path", required=True, help="One serialized entry per line.")
@click.option("--max-len", default=256, show_default=True)
@click.option("--corpus", default=None, help="Corpus file for document frequencies (defaults to the input).")
@click.option("--stopwords", "stopwords_path", default=None)
@click.option("--out", "out_path", default="-", show_default=True)
def summarize_cmd(input_path, max_len, corpus, stopwords_path, out_path) -> None:
    """TF-IDF-summarize serialized entries to at most --max-len tokens."""
    lines = [
        ln
        for ln in Path(resolve_data_path(input_path)).read_text(encoding="utf-8").splitlines()
        if ln.strip()
    ]
    corpus_lines = lines
    if corpus:
        corpus_lines = [
            ln for ln in Path(corpus).read_text(encoding="utf-8").splitlines() if ln.strip()
        ]
    model = fit_tfidf(corpus_lines)
    stop = load_stopwords(stopwords_path)
    out_lines = [summarize(ln, model, stop, max_len) for ln in lines]
    payload = "\n".join(out_lines) + ("\n" if out_lines else "")
    if out_path == "-":
        click.echo(payload, nl=False)
    else:
        Path(out_path).write_text(payload, encoding="utf-8")


if __name__ == "__main__":
    main(prog_name="emkit")
