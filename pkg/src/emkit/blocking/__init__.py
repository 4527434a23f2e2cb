"""Candidate-pair generation: key blocking, TF-IDF top-k, embedding top-k."""

from .candidates import (
    BlockingError,
    CandidateInfo,
    CandidateSet,
    Record,
    RecordId,
    dedup_records,
    key_block,
    recall_of,
    union_block,
)
from .report import PHASES, BlockingReport
from .tfidf_block import TfidfVector, TfidfVectorizer, cosine, record_text, tfidf_topk
from .topk import (
    HAVE_NATIVE,
    EmbeddingMatrix,
    active_kernel_name,
    blocked_topk,
    blocked_topk_arrays,
)

__all__ = [
    "BlockingError",
    "BlockingReport",
    "CandidateInfo",
    "CandidateSet",
    "EmbeddingMatrix",
    "HAVE_NATIVE",
    "PHASES",
    "Record",
    "RecordId",
    "TfidfVector",
    "TfidfVectorizer",
    "active_kernel_name",
    "blocked_topk",
    "blocked_topk_arrays",
    "cosine",
    "dedup_records",
    "key_block",
    "recall_of",
    "record_text",
    "tfidf_topk",
    "union_block",
]
