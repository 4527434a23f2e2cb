"""A small Transformer encoder with a [CLS] classifier head, in plain NumPy.

Forward and backward passes are written out by hand (residual multi-head
attention and ReLU feed-forward blocks) so gradients can be verified against
finite differences. The parameter set is exactly token embeddings,
positional embeddings, per-layer attention/FFN weights, and the classifier
head; there is no normalization layer, which keeps the uniform small-range
init and the plain-SGD recipe well conditioned. The [CLS] position-0 output
vector summarizes the pair and feeds a linear + softmax head for the binary
match / no-match decision.

All math is float64 and single-threaded per call; with dropout off the
forward pass is a pure function of (parameters, input), so inference is
thread-safe over an immutable parameter set.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..entries import DataEntry, assemble_pair, serialize_entry, tokenize
from .config import EncoderConfig
from .vocab import Vocabulary

Params = dict[str, np.ndarray]


class EncoderError(ValueError):
    pass


def init_params(config: EncoderConfig, seed: int) -> Params:
    """Seeded uniform [-0.05, 0.05] init for every parameter tensor."""
    rng = np.random.default_rng(seed)

    def uniform(*shape: int) -> np.ndarray:
        return rng.uniform(-0.05, 0.05, size=shape)

    d, f = config.embed_dim, config.ffn_dim
    params: Params = {
        "tok_emb": uniform(config.vocab_size, d),
        "pos_emb": uniform(config.max_seq_len, d),
        "cls_W": uniform(d, 2),
        "cls_b": uniform(2),
    }
    for i in range(config.num_layers):
        p = f"layers.{i}."
        for name in ("Wq", "Wk", "Wv", "Wo"):
            params[p + name] = uniform(d, d)
        for name in ("bq", "bk", "bv", "bo"):
            params[p + name] = uniform(d)
        params[p + "W1"] = uniform(d, f)
        params[p + "b1"] = uniform(f)
        params[p + "W2"] = uniform(f, d)
        params[p + "b2"] = uniform(d)
    return params


def zero_grads(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ForwardCache:
    """Intermediate activations of one forward pass, kept for backprop."""

    ids: np.ndarray
    layers: list[dict]
    out: np.ndarray  # (T, D) final per-token representations

    @property
    def cls_rep(self) -> np.ndarray:
        return self.out[0]


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    t, d = x.shape
    return x.reshape(t, heads, d // heads).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    h, t, dh = x.shape
    return x.transpose(1, 0, 2).reshape(t, h * dh)


def forward_pass(
    params: Params,
    config: EncoderConfig,
    ids: Sequence[int],
    train: bool = False,
    dropout_rng: np.random.Generator | None = None,
) -> ForwardCache:
    """Run the encoder over a token-id sequence.

    Raises for overlong sequences (the summarizer is responsible for making
    pairs fit) and for ids outside the vocabulary.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size == 0:
        raise EncoderError("input must be a non-empty 1-d id sequence")
    if ids.size > config.max_seq_len:
        raise EncoderError(
            f"sequence of {ids.size} tokens exceeds max_seq_len={config.max_seq_len}"
        )
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise EncoderError("token id outside vocabulary")

    p_drop = config.dropout if train else 0.0
    if p_drop > 0.0 and dropout_rng is None:
        raise EncoderError("training-mode dropout needs an RNG")

    def maybe_dropout(x: np.ndarray):
        if p_drop == 0.0:
            return x, None
        mask = (dropout_rng.random(x.shape) >= p_drop) / (1.0 - p_drop)
        return x * mask, mask

    t = ids.size
    scale = 1.0 / np.sqrt(config.head_dim)
    x = params["tok_emb"][ids] + params["pos_emb"][:t]
    layers: list[dict] = []
    for i in range(config.num_layers):
        p = f"layers.{i}."
        q = _split_heads(x @ params[p + "Wq"] + params[p + "bq"], config.num_heads)
        k = _split_heads(x @ params[p + "Wk"] + params[p + "bk"], config.num_heads)
        v = _split_heads(x @ params[p + "Wv"] + params[p + "bv"], config.num_heads)
        attn = _softmax_rows(q @ k.transpose(0, 2, 1) * scale)
        attn_d, attn_mask = maybe_dropout(attn)
        ctx = _merge_heads(attn_d @ v)
        proj = ctx @ params[p + "Wo"] + params[p + "bo"]
        proj_d, proj_mask = maybe_dropout(proj)
        x1 = x + proj_d
        hidden_pre = x1 @ params[p + "W1"] + params[p + "b1"]
        hidden = np.maximum(hidden_pre, 0.0)
        hidden_d, hidden_mask = maybe_dropout(hidden)
        ffn = hidden_d @ params[p + "W2"] + params[p + "b2"]
        ffn_d, ffn_mask = maybe_dropout(ffn)
        x2 = x1 + ffn_d
        layers.append(
            dict(
                x_in=x, q=q, k=k, v=v, attn=attn, attn_d=attn_d,
                attn_mask=attn_mask, ctx=ctx, proj_mask=proj_mask,
                x1=x1, hidden_pre=hidden_pre, hidden_d=hidden_d,
                hidden_mask=hidden_mask, ffn_mask=ffn_mask,
            )
        )
        x = x2
    return ForwardCache(ids=ids, layers=layers, out=x)


def backward_body(
    params: Params,
    config: EncoderConfig,
    cache: ForwardCache,
    d_out: np.ndarray,
    grads: Params,
) -> None:
    """Accumulate body gradients given d(loss)/d(per-token output).

    ``d_out`` has the shape of ``cache.out``; pass a matrix that is zero
    except at position 0 to backpropagate from the [CLS] vector alone.
    """
    dx2 = np.asarray(d_out, dtype=float)
    scale = 1.0 / np.sqrt(config.head_dim)
    for i in reversed(range(config.num_layers)):
        p = f"layers.{i}."
        c = cache.layers[i]

        dx1 = dx2.copy()
        dffn = dx2 if c["ffn_mask"] is None else dx2 * c["ffn_mask"]
        grads[p + "W2"] += c["hidden_d"].T @ dffn
        grads[p + "b2"] += dffn.sum(axis=0)
        dhidden = dffn @ params[p + "W2"].T
        if c["hidden_mask"] is not None:
            dhidden = dhidden * c["hidden_mask"]
        dhidden_pre = dhidden * (c["hidden_pre"] > 0.0)
        grads[p + "W1"] += c["x1"].T @ dhidden_pre
        grads[p + "b1"] += dhidden_pre.sum(axis=0)
        dx1 += dhidden_pre @ params[p + "W1"].T

        dx = dx1.copy()
        dproj = dx1 if c["proj_mask"] is None else dx1 * c["proj_mask"]
        grads[p + "Wo"] += c["ctx"].T @ dproj
        grads[p + "bo"] += dproj.sum(axis=0)
        dctx = _split_heads(dproj @ params[p + "Wo"].T, config.num_heads)
        dattn_d = dctx @ c["v"].transpose(0, 2, 1)
        dv = c["attn_d"].transpose(0, 2, 1) @ dctx
        dattn = dattn_d if c["attn_mask"] is None else dattn_d * c["attn_mask"]
        a = c["attn"]
        dscores = a * (dattn - (dattn * a).sum(axis=-1, keepdims=True))
        dq = dscores @ c["k"] * scale
        dk = dscores.transpose(0, 2, 1) @ c["q"] * scale
        x_in = c["x_in"]
        for name, dh in (("Wq", dq), ("Wk", dk), ("Wv", dv)):
            dmat = _merge_heads(dh)
            grads[p + name] += x_in.T @ dmat
            grads[p + "b" + name[1].lower()] += dmat.sum(axis=0)
            dx += dmat @ params[p + name].T
        dx2 = dx

    t = cache.ids.size
    np.add.at(grads["tok_emb"], cache.ids, dx2)
    grads["pos_emb"][:t] += dx2


def classify_logits(params: Params, cls_rep: np.ndarray) -> np.ndarray:
    return cls_rep @ params["cls_W"] + params["cls_b"]


def classify_probs(params: Params, cls_rep: np.ndarray) -> np.ndarray:
    """(p_nomatch, p_match) from the [CLS] vector via linear + softmax."""
    return _softmax_rows(classify_logits(params, cls_rep))


def cross_entropy(probs: np.ndarray, label: int) -> float:
    return float(-np.log(max(probs[label], 1e-300)))


def head_backward(
    params: Params, cls_rep: np.ndarray, probs: np.ndarray, label: int, grads: Params
) -> np.ndarray:
    """Accumulate classifier-head grads; return d(loss)/d(cls_rep)."""
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    grads["cls_W"] += np.outer(cls_rep, dlogits)
    grads["cls_b"] += dlogits
    return params["cls_W"] @ dlogits


@dataclass
class EncoderModel:
    """Configuration, vocabulary, and parameter store of one matcher."""

    config: EncoderConfig
    vocab: Vocabulary
    params: Params

    @classmethod
    def build(cls, config: EncoderConfig, vocab: Vocabulary, seed: int) -> "EncoderModel":
        if config.vocab_size != len(vocab):
            config = EncoderConfig.from_dict({**config.to_dict(), "vocab_size": len(vocab)})
        return cls(config=config, vocab=vocab, params=init_params(config, seed))

    def forward(
        self,
        ids: Sequence[int],
        train: bool = False,
        dropout_rng: np.random.Generator | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Per-token representations and the [CLS] vector for an id sequence."""
        cache = forward_pass(self.params, self.config, ids, train, dropout_rng)
        return cache.out, cache.cls_rep

    def classify(self, cls_rep: np.ndarray) -> np.ndarray:
        return classify_probs(self.params, cls_rep)

    def ids_for_text(self, text: str) -> list[int]:
        return self.vocab.encode_text(text)

    def predict_proba(self, texts: Sequence[str], workers: int = 1) -> np.ndarray:
        """Match probabilities for serialized pair strings.

        Inference is pure given the parameters, so ``workers > 1`` may fan
        out across threads.
        """

        def one(text: str) -> np.ndarray:
            _, cls_rep = self.forward(self.ids_for_text(text))
            return self.classify(cls_rep)

        if workers > 1 and len(texts) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return np.array(list(pool.map(one, texts)))
        return np.array([one(t) for t in texts])

    def predict(self, texts: Sequence[str], workers: int = 1) -> np.ndarray:
        """Argmax labels (1 = match) for serialized pair strings."""
        probs = self.predict_proba(texts, workers=workers)
        return (probs[:, 1] > probs[:, 0]).astype(np.int64)

    def encode_record(self, entry: DataEntry) -> np.ndarray:
        """Embedding vector for a single record: [CLS] output over its serialization."""
        text = assemble_record(entry)
        _, cls_rep = self.forward(self.ids_for_text(text))
        return cls_rep

    def copy_params(self) -> Params:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: Mapping[str, np.ndarray]) -> None:
        for key in self.params:
            self.params[key] = params[key].copy()


def assemble_record(entry: DataEntry) -> str:
    """Single-record serialization used by embedding-based blocking."""
    body = serialize_entry(entry)
    return f"[CLS] {body} [SEP]" if body else "[CLS] [SEP]"
