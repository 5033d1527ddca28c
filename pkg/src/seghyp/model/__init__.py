from .base import Model
from .linear import LinearScorer, SparseGrad
from .neural import NeuralConfig, NeuralScorer, SpanEmbeddingTable, Vocab, load_embeddings

__all__ = ["Model", "LinearScorer", "SparseGrad", "NeuralConfig", "NeuralScorer",
           "SpanEmbeddingTable", "Vocab", "load_embeddings"]
