"""Training loop: SGD with linear learning-rate decay and optional MixDA.

With a data-augmentation operator selected, each example is paired with one
augmented variant per epoch; the encoder runs on both and the [CLS]
representations are interpolated with ``lam ~ Beta(alpha, alpha)`` before
the classifier head. Back-propagation flows through both branches, each
scaled by its interpolation weight, so pinning lam to 1 reproduces DA-free
training exactly (with dropout disabled).

The loop is single-threaded and fully deterministic given the seed:
parameter init, epoch shuffling, augmentation, and dropout each draw from
independent child streams of the one training seed.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from ..augment import augment, entry_swap, mixda_lambda
from ..entries import TokenSeq, tokenize
from ..metrics import f1_score
from .checkpoint import Checkpoint
from .config import EncoderConfig, TrainConfig, linear_decay
from .gradcheck import loss_and_grads  # noqa: F401  (re-exported for callers)
from .model import (
    EncoderModel,
    backward_body,
    classify_probs,
    cross_entropy,
    forward_pass,
    head_backward,
    zero_grads,
)
from .vocab import Vocabulary

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite."""


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def build_model(
    config: EncoderConfig, train_texts: Sequence[str], seed: int,
    specials: frozenset[str] | None = None,
) -> EncoderModel:
    """Construct a model whose vocabulary covers the training corpus."""
    vocab = Vocabulary.build(train_texts, specials)
    return EncoderModel.build(config, vocab, seed)


def _example_loss_and_grads(
    model: EncoderModel,
    ids: list[int],
    aug_ids: list[int] | None,
    lam: float,
    label: int,
    grads,
    dropout_rng,
) -> float:
    params, config = model.params, model.config
    train_mode = config.dropout > 0.0
    if aug_ids is not None and lam == 1.0:
        aug_ids = None  # interpolation weight 1: the augmented branch is inert
    cache = forward_pass(params, config, ids, train=train_mode, dropout_rng=dropout_rng)
    aug_cache = None
    if aug_ids is None:
        rep = cache.cls_rep
    else:
        aug_cache = forward_pass(
            params, config, aug_ids, train=train_mode, dropout_rng=dropout_rng
        )
        rep = (
            aug_cache.cls_rep
            if lam == 0.0
            else lam * cache.cls_rep + (1.0 - lam) * aug_cache.cls_rep
        )

    probs = classify_probs(params, rep)
    loss = cross_entropy(probs, label)
    dcls = head_backward(params, rep, probs, label, grads)

    def back(branch_cache, scale: float) -> None:
        if scale == 0.0:
            return
        d_out = np.zeros_like(branch_cache.out)
        d_out[0] = scale * dcls
        backward_body(params, config, branch_cache, d_out, grads)

    if aug_cache is None:
        back(cache, 1.0)
    else:
        back(cache, lam)
        back(aug_cache, 1.0 - lam)
    return loss


def train(
    model: EncoderModel,
    train_set: Sequence[tuple[str, int]],
    valid_set: Sequence[tuple[str, int]],
    cfg: TrainConfig,
    da: str | None = None,
) -> Checkpoint:
    """Run the fixed-epoch recipe and return the best-validation-F1 checkpoint.

    ``train_set`` / ``valid_set`` hold (serialized pair, label) examples. The
    model is left holding the best checkpoint's parameters on return. The
    entry-swap coin of the DA recipe is flipped here, once per example per
    epoch, before the selected operator is applied.
    """
    if not train_set or not valid_set:
        raise ValueError("train and validation sets must be non-empty")

    _, shuffle_rng, da_rng, dropout_rng = spawn_rngs(cfg.seed, 4)
    batch_size = cfg.resolved_batch_size(with_da=da is not None)
    n = len(train_set)
    batches_per_epoch = (n + batch_size - 1) // batch_size
    total_steps = batches_per_epoch * cfg.epochs

    specials = model.vocab.specials
    train_seqs: list[tuple[TokenSeq, list[int], int]] = []
    for text, label in train_set:
        seq = tokenize(text, specials)
        train_seqs.append((seq, model.vocab.encode(seq), int(label)))
    valid_texts = [t for t, _ in valid_set]
    valid_gold = [int(l) for _, l in valid_set]

    best: Checkpoint | None = None
    step = 0
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            grads = zero_grads(model.params)
            batch_loss = 0.0
            for j in batch:
                seq, ids, label = train_seqs[j]
                aug_ids = None
                lam = 1.0
                if da is not None:
                    base = seq
                    if cfg.da_swap and da_rng.random() < 0.5:
                        base = entry_swap(base)
                    aug_seq = augment(base, da, da_rng)
                    aug_ids = model.vocab.encode(aug_seq)
                    lam = (
                        cfg.fixed_lambda
                        if cfg.fixed_lambda is not None
                        else mixda_lambda(cfg.mixda_alpha, da_rng)
                    )
                batch_loss += _example_loss_and_grads(
                    model, ids, aug_ids, lam, label, grads, dropout_rng
                )
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {step}: {batch_loss}"
                )
            lr = linear_decay(cfg.learning_rate, step, total_steps)
            inv = 1.0 / len(batch)
            for name, grad in grads.items():
                model.params[name] -= lr * inv * grad
            step += 1
            epoch_loss += batch_loss

        predicted = model.predict(valid_texts)
        val_f1 = f1_score(valid_gold, predicted)
        logger.info(
            "epoch %d: train loss %.4f, valid F1 %.4f", epoch, epoch_loss / n, val_f1
        )
        if best is None or val_f1 > best.val_f1:
            best = Checkpoint(
                config=model.config,
                vocab=model.vocab,
                params=model.copy_params(),
                epoch=epoch,
                val_f1=val_f1,
            )

    assert best is not None
    model.set_params(best.params)
    return best
