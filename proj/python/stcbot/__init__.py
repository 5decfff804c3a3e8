"""Retrieval-based short text conversation engine."""

from ._core import (
    Activation,
    Bundle,
    ChatResponse,
    DenseIndex,
    Error,
    InvalidQuery,
    LoadError,
    NoKnownTokens,
    Post,
    PvdmConfig,
    PvdmModel,
    QRPair,
    RankerParams,
    Reply,
    RetrievalHit,
    ShapeError,
    TfIdfModel,
    TrainingError,
    build_qr_pairs,
    candidate_scores,
    clean_posts,
    cosine,
    parse_corpus,
    relational_features,
    response_distribution,
    select_response,
    target_distribution,
    tokenize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
