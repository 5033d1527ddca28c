"""Nested mention recognition with segmental hypergraphs."""

from .core import Hyperpath, Mention, Sentence, TypeVocab, canonicalize
from .graph import SegmentalHypergraph, build, decode, encode
from .inference import EdgeScoreTable, map_decode, marginals

__version__ = "0.1.0"

__all__ = ["Hyperpath", "Mention", "Sentence", "TypeVocab", "canonicalize",
           "SegmentalHypergraph", "build", "decode", "encode",
           "EdgeScoreTable", "map_decode", "marginals"]
