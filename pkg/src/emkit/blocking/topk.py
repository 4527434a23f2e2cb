"""Exact cosine top-k search by blocked matrix multiplication.

Row/column blocks of the two embedding matrices are multiplied one block at
a time (BLAS does the product) and a merge kernel maintains per-row running
top-k selections, so the full similarity matrix never materializes. The
merge kernel is the hot loop: a compiled Cython version is preferred and a
pure-NumPy fallback is selected at import time (set ``EMKIT_NO_NATIVE=1``
to force the fallback). Results are exact and identical for every
``block_size`` and for both kernels: ties are broken toward the lower
record id.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .candidates import BlockingError, CandidateSet
from . import _topk_py

if os.environ.get("EMKIT_NO_NATIVE") == "1":
    _native = None
else:
    try:
        from . import _topk_cy as _native
    except ImportError:
        _native = None

HAVE_NATIVE = _native is not None

_ID_SENTINEL = np.iinfo(np.int64).max


def active_kernel_name() -> str:
    return "cython" if HAVE_NATIVE else "numpy"


def _merge_fn(use_native: bool | None):
    if use_native is None:
        use_native = HAVE_NATIVE
    if use_native:
        if _native is None:
            raise BlockingError("compiled top-k kernel is not available")
        return _native.merge_topk_block
    return _topk_py.merge_topk_block


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense per-record vectors plus row-normalized copies for cosine search.

    Zero-norm rows normalize to zero vectors, so their similarity to
    everything is 0 and they never rank.
    """

    vectors: np.ndarray
    normalized: np.ndarray

    @classmethod
    def from_vectors(cls, vectors) -> "EmbeddingMatrix":
        arr = np.ascontiguousarray(np.asarray(vectors, dtype=np.float64))
        if arr.ndim != 2:
            raise BlockingError("embedding matrix must be 2-d")
        norms = np.linalg.norm(arr, axis=1, keepdims=True)
        safe = np.where(norms > 0.0, norms, 1.0)
        return cls(vectors=arr, normalized=np.ascontiguousarray(arr / safe))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def blocked_topk_arrays(
    queries: np.ndarray,
    targets: np.ndarray,
    k: int,
    block_size: int,
    use_native: bool | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Top-k target rows per query row over row-normalized matrices.

    Returns (scores, indices) of shape (n_queries, min(k, n_targets)), each
    row sorted by descending score with ties toward the lower index.
    """
    if k < 1:
        raise BlockingError("k must be at least 1")
    if block_size < 1:
        raise BlockingError("block_size must be at least 1")
    if queries.ndim != 2 or targets.ndim != 2 or queries.shape[1] != targets.shape[1]:
        raise BlockingError(
            f"dimension mismatch: {queries.shape} vs {targets.shape}"
        )
    merge = _merge_fn(use_native)
    n_q, n_t = queries.shape[0], targets.shape[0]
    kk = min(k, n_t)
    if n_q == 0 or kk == 0:
        return np.zeros((n_q, 0)), np.zeros((n_q, 0), dtype=np.int64)

    vals = np.full((n_q, kk), -np.inf)
    ids = np.full((n_q, kk), _ID_SENTINEL, dtype=np.int64)
    for q_start in range(0, n_q, block_size):
        q_block = queries[q_start : q_start + block_size]
        v_block = vals[q_start : q_start + block_size]
        i_block = ids[q_start : q_start + block_size]
        for t_start in range(0, n_t, block_size):
            t_block = targets[t_start : t_start + block_size]
            scores = np.ascontiguousarray(q_block @ t_block.T)
            merge(scores, t_start, v_block, i_block)

    order = np.lexsort((ids, -vals), axis=-1)
    vals = np.take_along_axis(vals, order, axis=1)
    ids = np.take_along_axis(ids, order, axis=1)
    return vals, ids


def blocked_topk(
    matrix_b: EmbeddingMatrix,
    matrix_a: EmbeddingMatrix,
    k: int = 10,
    block_size: int = 1024,
    use_native: bool | None = None,
) -> CandidateSet:
    """Exact cosine top-k of A rows for every B row, as a candidate set.

    Pair ids are the row indices of the two matrices; provenance is "topk".
    The result is independent of ``block_size`` and of the kernel choice.
    """
    if matrix_b.dim != matrix_a.dim:
        raise BlockingError(
            f"dimension mismatch: {matrix_b.dim} vs {matrix_a.dim}"
        )
    vals, ids = blocked_topk_arrays(
        matrix_b.normalized, matrix_a.normalized, k, block_size, use_native
    )
    out = CandidateSet()
    for row in range(vals.shape[0]):
        for score, idx in zip(vals[row], ids[row]):
            if np.isneginf(score):
                continue
            out.add(row, int(idx), "topk", float(score))
    return out
