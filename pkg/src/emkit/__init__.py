"""emkit: an entity-matching toolkit.

Structured records are serialized into tagged token sequences, optionally
enriched with domain knowledge (typed spans, normalized numbers/synonyms)
and TF-IDF-summarized to fit the encoder; a small Transformer classifier
decides match / no-match per candidate pair; and a blocking subsystem
(key equality, TF-IDF cosine top-k, embedding top-k via blocked matrix
multiplication) generates the candidate pairs.
"""

from .entries import (
    CLS,
    COL,
    DEFAULT_SPECIAL_TOKENS,
    SEP,
    VAL,
    DataEntry,
    LabeledPair,
    TokenSeq,
    assemble_pair,
    serialize_entry,
    serialize_pair,
    tokenize,
)
from .knowledge import (
    DKConfig,
    Recognizer,
    RewriteRule,
    SpanType,
    SynonymDict,
    builtin_recognizers,
    default_dk_config,
    inject_span_types,
    load_dk_config,
    normalize_spans,
    recognize_spans,
)
from .summarizer import TfidfModel, fit_tfidf, load_stopwords, summarize
from .augment import (
    MAX_SPAN_LEN,
    OPERATOR_NAMES,
    augment,
    entry_swap,
    make_rng,
    mixda_combine,
    mixda_lambda,
)
from .encoder import (
    Checkpoint,
    EncoderConfig,
    EncoderModel,
    TrainConfig,
    build_model,
    gradient_check,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .blocking import (
    CandidateSet,
    EmbeddingMatrix,
    blocked_topk,
    key_block,
    recall_of,
    tfidf_topk,
    union_block,
)
from .pipeline import (
    Dataset,
    EvalReport,
    PipelineConfig,
    evaluate,
    load_dataset,
    run_pipeline,
    split_dataset,
)

__version__ = "0.1.0"
