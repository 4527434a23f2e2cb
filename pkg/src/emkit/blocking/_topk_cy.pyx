# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled top-k merge kernel.

Per query row, a size-k binary heap keeps the running best (score, id)
entries under the order "higher score first, lower id on ties"; the heap
root is the worst kept entry. The NumPy fallback in ``_topk_py`` computes
the same selection; this version avoids the per-block sort and allocation.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline bint _worse(double v1, long long i1, double v2, long long i2) nogil:
    # True if (v1, i1) ranks below (v2, i2): lower score, or equal score
    # with the larger id.
    if v1 != v2:
        return v1 < v2
    return i1 > i2


cdef inline void _sift_down(double[:, ::1] vals, long long[:, ::1] ids,
                            Py_ssize_t row, Py_ssize_t k) nogil:
    cdef Py_ssize_t pos = 0, child
    cdef double v = vals[row, 0]
    cdef long long i = ids[row, 0]
    while True:
        child = 2 * pos + 1
        if child >= k:
            break
        if child + 1 < k and _worse(vals[row, child + 1], ids[row, child + 1],
                                    vals[row, child], ids[row, child]):
            child += 1
        if _worse(vals[row, child], ids[row, child], v, i):
            vals[row, pos] = vals[row, child]
            ids[row, pos] = ids[row, child]
            pos = child
        else:
            break
    vals[row, pos] = v
    ids[row, pos] = i


def merge_topk_block(double[:, ::1] scores, long long col_offset,
                     double[:, ::1] vals, long long[:, ::1] ids):
    """Merge one score block into the running per-row heaps in place.

    Same contract as ``_topk_py.merge_topk_block``; ``vals``/``ids`` rows
    must already satisfy the heap invariant (true for the -inf initial fill
    and preserved by this function).
    """
    cdef Py_ssize_t rows = scores.shape[0], cols = scores.shape[1]
    cdef Py_ssize_t k = vals.shape[1]
    cdef Py_ssize_t row, col
    cdef double s
    cdef long long cid
    with nogil:
        for row in range(rows):
            for col in range(cols):
                s = scores[row, col]
                cid = col_offset + col
                if _worse(vals[row, 0], ids[row, 0], s, cid):
                    vals[row, 0] = s
                    ids[row, 0] = cid
                    _sift_down(vals, ids, row, k)
