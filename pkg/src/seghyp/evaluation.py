"""Exact-match micro P/R/F1, the overlap split, and decoding throughput."""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field

from .core import canonicalize


def match(gold, pred):
    """Return ``(tp, fp, fn)`` under exact (start, end, type) equality."""
    g, p = set(gold), set(pred)
    tp = len(g & p)
    return tp, len(p) - tp, len(g) - tp


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, tp, fp, fn):
        self.tp += tp
        self.fp += fp
        self.fn += fn

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


def prf(tp: int, fp: int, fn: int):
    c = Counts(tp, fp, fn)
    return c.precision, c.recall, c.f1


def is_overlapping(mentions) -> bool:
    """True when two mentions share at least one token."""
    spans = sorted((s, e) for s, e, _ in set(mentions))
    last_end = -1
    for s, e in spans:
        if s <= last_end:
            return True
        last_end = max(last_end, e)
    return False


def split_overlap(golds):
    """Partition indices of ``golds`` into (overlapping, non-overlapping)."""
    over, rest = [], []
    for idx, gold in enumerate(golds):
        (over if is_overlapping(gold) else rest).append(idx)
    return over, rest


@dataclass
class EvalReport:
    overall: Counts = field(default_factory=Counts)
    overlap: Counts = field(default_factory=Counts)
    non_overlap: Counts = field(default_factory=Counts)
    words_per_second: float | None = None

    def to_dict(self) -> dict:
        out = {"overall": self.overall.to_dict(), "overlap": self.overlap.to_dict(),
               "nonOverlap": self.non_overlap.to_dict()}
        if self.words_per_second is not None:
            out["wordsPerSecond"] = self.words_per_second
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        rows = [("overall", self.overall), ("overlapping", self.overlap),
                ("non-overlapping", self.non_overlap)]
        lines = [f"{'portion':<16} {'P':>7} {'R':>7} {'F1':>7} {'tp':>6} {'fp':>6} {'fn':>6}"]
        for name, c in rows:
            lines.append(f"{name:<16} {100 * c.precision:7.2f} {100 * c.recall:7.2f} "
                         f"{100 * c.f1:7.2f} {c.tp:6d} {c.fp:6d} {c.fn:6d}")
        if self.words_per_second is not None:
            lines.append(f"words/sec: {self.words_per_second:.1f}")
        return "\n".join(lines)


def evaluate(golds, preds) -> EvalReport:
    if len(golds) != len(preds):
        raise ValueError(f"{len(golds)} gold sentences but {len(preds)} predictions")
    report = EvalReport()
    for gold, pred in zip(golds, preds):
        gold, pred = canonicalize(gold), canonicalize(pred)
        counts = match(gold, pred)
        report.overall.add(*counts)
        (report.overlap if is_overlapping(gold) else report.non_overlap).add(*counts)
    return report


def benchmark_decode(model, sentences, repeat: int = 5) -> float:
    """Median words decoded per second over ``repeat`` passes (scoring included)."""
    total = sum(len(s) for s in sentences)
    rates = []
    for _ in range(repeat):
        start = time.perf_counter()
        for s in sentences:
            model.predict(s)
        rates.append(total / (time.perf_counter() - start))
    return statistics.median(rates)
