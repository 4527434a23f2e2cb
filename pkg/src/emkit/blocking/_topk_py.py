"""Pure-NumPy top-k merge kernel (fallback when the extension is absent).

Maintains, per query row, the running k best (score, column id) entries
under the total order "higher score first, lower id on ties". The blocked
search driver feeds score blocks through :func:`merge_topk_block`; results
are bit-identical to the compiled kernel.
"""

from __future__ import annotations

import numpy as np


def merge_topk_block(
    scores: np.ndarray,
    col_offset: int,
    vals: np.ndarray,
    ids: np.ndarray,
) -> None:
    """Merge one (rows x cols) score block into the running selections in place.

    ``vals`` / ``ids`` have shape (rows, k), initialized to -inf and a large
    id sentinel. Column ``j`` of the block corresponds to global id
    ``col_offset + j``.
    """
    rows, cols = scores.shape
    block_ids = np.broadcast_to(
        np.arange(col_offset, col_offset + cols, dtype=np.int64), (rows, cols)
    )
    cand_vals = np.concatenate([vals, scores], axis=1)
    cand_ids = np.concatenate([ids, block_ids], axis=1)
    order = np.lexsort((cand_ids, -cand_vals), axis=-1)[:, : vals.shape[1]]
    vals[:] = np.take_along_axis(cand_vals, order, axis=1)
    ids[:] = np.take_along_axis(cand_ids, order, axis=1)
