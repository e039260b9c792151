from .network import (
    Solver,
    SolverConfig,
    EncodeResult,
    DecodeResult,
    NodeEmbedding,
    build_vocab,
    subtree_embedding_at,
)
