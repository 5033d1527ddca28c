"""Sparse linear edge scorer over handcrafted features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..inference import EdgeScoreTable
from .features import iter_sentence_features


@dataclass
class SparseGrad:
    """Gradient restricted to the rows ``indices`` of a parameter tensor."""
    indices: np.ndarray
    values: np.ndarray


class LinearScorer:
    kind = "linear"

    def __init__(self, num_types: int, weights: dict | None = None):
        self.num_types = num_types
        weights = weights or {}
        names = sorted(weights)
        self.feature_index = {name: idx for idx, name in enumerate(names)}
        self.weights = np.array([float(weights[name]) for name in names], dtype=np.float64)
        self.cache_features = False
        self._cache = {}

    @classmethod
    def from_corpus(cls, sentences_and_graphs, num_types: int) -> "LinearScorer":
        """Zero weights over every feature fired by any edge of the training graphs."""
        names = set()
        for sentence, graph in sentences_and_graphs:
            for feats in iter_sentence_features(sentence, graph):
                names.update(feats)
        return cls(num_types, dict.fromkeys(names, 0.0))

    def parameters(self) -> dict:
        return {"weights": self.weights}

    def weight_map(self) -> dict:
        return {name: float(self.weights[idx]) for name, idx in sorted(self.feature_index.items())}

    def _features(self, sentence, graph):
        key = (sentence, graph.m, graph.c)
        if self.cache_features and key in self._cache:
            return self._cache[key]
        rows, ids = [], []
        index = self.feature_index
        for e, feats in enumerate(iter_sentence_features(sentence, graph)):
            for f in feats:
                idx = index.get(f)
                if idx is not None:
                    rows.append(e)
                    ids.append(idx)
        out = (np.array(rows, dtype=np.int64), np.array(ids, dtype=np.int64))
        if self.cache_features:
            self._cache[key] = out
        return out

    def clear_cache(self):
        self._cache.clear()

    def forward(self, sentence, graph, train: bool = False, seed=None, word_ids=None):
        rows, ids = self._features(sentence, graph)
        phi = np.bincount(rows, weights=self.weights[ids], minlength=graph.num_edges)
        return EdgeScoreTable(graph, phi), (rows, ids)

    def score(self, sentence, graph) -> EdgeScoreTable:
        return self.forward(sentence, graph)[0]

    def backward(self, cache, dphi: np.ndarray) -> dict:
        rows, ids = cache
        uniq, inverse = np.unique(ids, return_inverse=True)
        values = np.bincount(inverse, weights=dphi[rows], minlength=len(uniq))
        return {"weights": SparseGrad(uniq, values)}
