"""Gradient verification against central finite differences."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .config import EncoderConfig
from .model import (
    EncoderModel,
    Params,
    backward_body,
    classify_probs,
    cross_entropy,
    forward_pass,
    head_backward,
    zero_grads,
)


def loss_and_grads(
    params: Params, config: EncoderConfig, ids: Sequence[int], label: int
) -> tuple[float, Params]:
    """Cross-entropy loss of one example and analytic gradients for all parameters."""
    cache = forward_pass(params, config, ids)
    probs = classify_probs(params, cache.cls_rep)
    loss = cross_entropy(probs, label)
    grads = zero_grads(params)
    dcls = head_backward(params, cache.cls_rep, probs, label, grads)
    d_out = np.zeros_like(cache.out)
    d_out[0] = dcls
    backward_body(params, config, cache, d_out, grads)
    return loss, grads


def gradient_check(
    model: EncoderModel,
    example: tuple[Sequence[int] | str, int],
    epsilon: float = 1e-5,
    n_samples: int = 120,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples ``n_samples`` parameter coordinates uniformly across all tensors
    (at least 100). Relative error per coordinate is
    ``|g_an - g_fd| / max(|g_an|, |g_fd|, 1e-6)``; the floor means
    coordinates where both gradients are below 1e-6 are effectively compared
    absolutely at 1e-10 resolution, which is the precision limit of the
    double-precision central-difference oracle itself.
    """
    if not 1e-6 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in [1e-6, 1e-3], got {epsilon}")
    if n_samples < 100:
        raise ValueError("sample at least 100 parameters")

    seq, label = example
    ids = model.ids_for_text(seq) if isinstance(seq, str) else list(seq)
    params, config = model.params, model.config
    _, grads = loss_and_grads(params, config, ids, label)

    names = sorted(params)
    sizes = np.array([params[n].size for n in names])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    rng = np.random.default_rng(seed)
    flat_choices = rng.choice(total, size=min(n_samples, total), replace=False)

    worst = 0.0
    for flat in flat_choices:
        tensor = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[tensor]
        idx = np.unravel_index(int(flat - offsets[tensor]), params[name].shape)
        original = params[name][idx]
        params[name][idx] = original + epsilon
        loss_plus, _ = _loss_only(params, config, ids, label)
        params[name][idx] = original - epsilon
        loss_minus, _ = _loss_only(params, config, ids, label)
        params[name][idx] = original
        g_fd = (loss_plus - loss_minus) / (2.0 * epsilon)
        g_an = float(grads[name][idx])
        err = abs(g_an - g_fd) / max(abs(g_an), abs(g_fd), 1e-6)
        worst = max(worst, err)
    return worst


def _loss_only(params: Params, config: EncoderConfig, ids, label) -> tuple[float, None]:
    cache = forward_pass(params, config, ids)
    probs = classify_probs(params, cache.cls_rep)
    return cross_entropy(probs, label), None
