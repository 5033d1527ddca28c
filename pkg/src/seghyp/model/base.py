"""A trained model: scorer, type vocabulary and length cap, with JSON persistence."""

from __future__ import annotations

import json

import numpy as np

from ..core import SegHypError, Sentence, TypeVocab
from ..graph import build, cap_for, decode
from ..inference import map_decode
from .linear import LinearScorer
from .neural import NeuralConfig, NeuralScorer, Vocab

FORMAT = "seghyp-model"
VERSION = 1


class Model:
    def __init__(self, scorer, types: TypeVocab, max_len: int = 0):
        self.scorer = scorer
        self.types = types
        self.max_len = max_len

    def graph_for(self, sentence: Sentence):
        n = len(sentence)
        return build(n, len(self.types), cap_for(n, self.max_len))

    def predict(self, sentence: Sentence):
        graph = self.graph_for(sentence)
        path, _ = map_decode(graph, self.scorer.score(sentence, graph))
        return decode(path, graph, validate=False)

    def to_dict(self) -> dict:
        doc = {"format": FORMAT, "version": VERSION, "scorer": self.scorer.kind,
               "types": self.types.to_list(), "max_len": self.max_len}
        s = self.scorer
        if s.kind == "linear":
            doc["weights"] = s.weight_map()
        else:
            doc["config"] = s.config_dict()
            doc["vocab"] = {"words": s.words.symbols, "tags": s.tags.symbols,
                            "chars": s.chars.symbols}
            doc["rare"] = np.flatnonzero(s.rare).tolist()
            doc["tensors"] = {name: arr.tolist() for name, arr in sorted(s.params.items())}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Model":
        if doc.get("format") != FORMAT:
            raise SegHypError("not a model file")
        if doc.get("version") != VERSION:
            raise SegHypError(f"unsupported model version {doc.get('version')!r}")
        types = TypeVocab(list(doc["types"]))
        m = len(types)
        if doc["scorer"] == "linear":
            scorer = LinearScorer(m, doc["weights"])
        elif doc["scorer"] == "neural":
            vocab = doc["vocab"]
            params = {name: np.array(v, dtype=np.float64) for name, v in doc["tensors"].items()}
            scorer = NeuralScorer(m, NeuralConfig(**doc["config"]), Vocab(vocab["words"][1:]),
                                  Vocab(vocab["tags"][1:]), Vocab(vocab["chars"][1:]),
                                  params, doc["rare"])
        else:
            raise SegHypError(f"unknown scorer kind {doc['scorer']!r}")
        return cls(scorer, types, int(doc["max_len"]))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "Model":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SegHypError(f"{path}: invalid model file: {exc}") from None
        return cls.from_dict(doc)
