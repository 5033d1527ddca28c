"""Softmax-margin training with a clipped, lazily-sparse Adam optimizer."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import TI, TX, SegHypError, TypeVocab, mention_length
from .evaluation import evaluate
from .graph import build, cap_for, gold_edge_indicator
from .inference import marginals
from .model.base import Model
from .model.linear import LinearScorer, SparseGrad
from .model.neural import NeuralConfig, NeuralScorer


class GoldViolatesCap(SegHypError):
    def __init__(self, offending):
        self.offending = offending
        listed = "; ".join(f"{sid}: {m}" for sid, m in offending[:20])
        more = f" (+{len(offending) - 20} more)" if len(offending) > 20 else ""
        super().__init__(f"{len(offending)} gold mention(s) exceed the length cap: {listed}{more}")


class NonFiniteGradient(SegHypError):
    def __init__(self, sentence_id):
        self.sentence_id = sentence_id
        super().__init__(f"non-finite gradient on sentence {sentence_id!r}")


@dataclass
class TrainConfig:
    beta: float = 1.5
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip: float = 3.0
    l2: float = 1e-6
    epochs: int = 30
    patience: int = 5
    seed: int = 0
    scorer: str = "linear"
    max_len: int = 0          # 0: no cap
    unk_prob: float = 0.5
    neural: NeuralConfig = field(default_factory=NeuralConfig)

    def __post_init__(self):
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if self.clip <= 0:
            raise ValueError("clip must be positive")
        if self.scorer not in ("linear", "neural"):
            raise ValueError(f"unknown scorer {self.scorer!r}")


def build_cost(gold, graph, beta: float) -> np.ndarray:
    """beta on non-gold TX edges, 1 on non-gold TI edges, 0 elsewhere."""
    in_gold = gold_edge_indicator(gold, graph)
    delta = np.zeros(graph.num_edges)
    delta[graph.tx.ravel()] = beta
    delta[graph.ti.ravel()] = 1.0
    delta[in_gold] = 0.0
    return delta


def sentence_loss(scores, gold, graph, beta: float | None):
    """Softmax-margin loss and its gradient w.r.t. the feature scores.

    ``beta=None`` drops the cost and gives the plain negative log-likelihood.
    """
    in_gold = gold_edge_indicator(gold, graph)
    use_cost = beta is not None
    if use_cost:
        scores.delta = build_cost(gold, graph, beta)
    res = marginals(graph, scores, use_cost=use_cost)
    loss = res.log_z - math.fsum(scores.phi[in_gold])
    return loss, res.edge_marginals - in_gold


def _l2(params, grads, l2):
    """Add (l2/2)|theta|^2 over dense tensors and the touched rows of sparse ones."""
    total = 0.0
    for name, g in grads.items():
        p = params[name]
        if isinstance(g, SparseGrad):
            rows = p[g.indices]
            total += float(np.sum(rows * rows))
            g.values = g.values + l2 * rows
        else:
            total += float(np.sum(p * p))
            grads[name] = g + l2 * p
    return 0.5 * l2 * total


def loss_and_grad(sentence, gold, scorer, graph, config: TrainConfig, train=False,
                  seed=None, word_ids=None, use_cost=True):
    scores, cache = scorer.forward(sentence, graph, train=train, seed=seed, word_ids=word_ids)
    loss, dphi = sentence_loss(scores, gold, graph, config.beta if use_cost else None)
    grads = scorer.backward(cache, dphi)
    if config.l2:
        loss += _l2(scorer.parameters(), grads, config.l2)
    return loss, grads


def global_norm(grads) -> float:
    sq = 0.0
    for g in grads.values():
        v = g.values if isinstance(g, SparseGrad) else g
        sq += float(np.sum(v * v))
    return math.sqrt(sq)


class Adam:
    """Adam with global-norm clipping; sparse gradients update only their rows."""

    def __init__(self, params: dict, config: TrainConfig):
        self.params = params
        self.config = config
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict, sentence_id=None) -> float:
        norm = global_norm(grads)
        if not math.isfinite(norm):
            raise NonFiniteGradient(sentence_id)
        cfg = self.config
        scale = cfg.clip / norm if norm > cfg.clip else 1.0
        self.t += 1
        b1, b2 = cfg.beta1, cfg.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, g in grads.items():
            p, m, v = self.params[name], self.m[name], self.v[name]
            if isinstance(g, SparseGrad):
                idx, gv = g.indices, g.values * scale
                m[idx] = b1 * m[idx] + (1 - b1) * gv
                v[idx] = b2 * v[idx] + (1 - b2) * gv * gv
                p[idx] -= cfg.lr * (m[idx] / c1) / (np.sqrt(v[idx] / c2) + cfg.eps)
            else:
                gv = g * scale
                m *= b1
                m += (1 - b1) * gv
                v *= b2
                v += (1 - b2) * gv * gv
                p -= cfg.lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        return norm


def check_caps(corpus, max_len: int):
    offending = []
    if max_len > 0:
        for sentence, gold in corpus:
            offending += [(sentence.id, m) for m in gold if mention_length(m) > max_len]
    if offending:
        raise GoldViolatesCap(offending)


def make_scorer(corpus, types: TypeVocab, config: TrainConfig, embeddings=None):
    m = len(types)
    if config.scorer == "linear":
        graphs = [(s, build(len(s), m, cap_for(len(s), config.max_len))) for s, _ in corpus]
        scorer = LinearScorer.from_corpus(graphs, m)
        scorer.cache_features = True
        return scorer
    return NeuralScorer.build([s for s, _ in corpus], m, config.neural, seed=config.seed,
                              embeddings=embeddings)


def _snapshot(params):
    return {k: v.copy() for k, v in params.items()}


def train(corpus, dev, types: TypeVocab, config: TrainConfig, embeddings=None,
          log_path=None, scorer=None):
    """Train on ``corpus`` (list of (Sentence, MentionSet)) and return (Model, log).

    Early stopping keeps the parameters of the best dev-F1 epoch and stops once
    more than ``patience`` consecutive epochs fail to beat it.
    """
    if not corpus or not dev:
        raise SegHypError("training and dev corpora must be non-empty")
    check_caps(corpus, config.max_len)
    scorer = scorer or make_scorer(corpus, types, config, embeddings)
    model = Model(scorer, types, config.max_len)
    params = scorer.parameters()
    opt = Adam(params, config)
    rng = np.random.default_rng(config.seed)
    neural = isinstance(scorer, NeuralScorer)
    graphs = [model.graph_for(s) for s, _ in corpus]

    log, best_f1, best, stale = [], -1.0, _snapshot(params), 0
    out = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, config.epochs + 1):
            total = 0.0
            for idx in rng.permutation(len(corpus)):
                sentence, gold = corpus[idx]
                word_ids = seed = None
                if neural:
                    word_ids = scorer.sample_word_ids(sentence, rng, config.unk_prob)
                    seed = int(rng.integers(2 ** 63))
                loss, grads = loss_and_grad(sentence, gold, scorer, graphs[idx], config,
                                            train=True, seed=seed, word_ids=word_ids)
                if not math.isfinite(loss):
                    raise NonFiniteGradient(sentence.id)
                opt.step(grads, sentence.id)
                total += loss
            report = evaluate([g for _, g in dev], [model.predict(s) for s, _ in dev])
            c = report.overall
            entry = {"epoch": epoch, "loss": total, "dev_p": c.precision,
                     "dev_r": c.recall, "dev_f1": c.f1}
            log.append(entry)
            if out:
                out.write(json.dumps(entry) + "\n")
                out.flush()
            if c.f1 > best_f1:
                best_f1, best, stale = c.f1, _snapshot(params), 0
            else:
                stale += 1
                if stale > config.patience:
                    break
    finally:
        if out:
            out.close()
    for k, v in best.items():
        params[k][...] = v
    if isinstance(scorer, LinearScorer):
        scorer.clear_cache()
        scorer.cache_features = False
    return model, log
