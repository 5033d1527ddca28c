import json
import math

import numpy as np
import pytest

from seghyp.core import TI, TX, Edge, Mention, Sentence, TypeVocab
from seghyp.graph import build, decode, encode
from seghyp.inference import EdgeScoreTable, map_decode
from seghyp.model.linear import LinearScorer, SparseGrad
from seghyp.oracle import FactoredEnumeration, brute_log_z, random_mentions, random_scores
from seghyp.training import (
    Adam, GoldViolatesCap, NonFiniteGradient, TrainConfig, build_cost, global_norm,
    loss_and_grad, sentence_loss, train,
)


class FixedScorer:
    """Scores are the parameter vector itself."""
    kind = "fixed"

    def __init__(self, phi):
        self.phi = np.array(phi, dtype=float)

    def parameters(self):
        return {"phi": self.phi}

    def forward(self, sentence, graph, train=False, seed=None, word_ids=None):
        return EdgeScoreTable(graph, self.phi.copy()), None

    def backward(self, cache, dphi):
        return {"phi": dphi.copy()}


def edge(g, *key):
    return g.edge_index[Edge(*key)]


def test_cost_single_mention():
    g = build(1, 1, 1)
    delta = build_cost([Mention(0, 0, 0)], g, beta=1.0)
    assert delta[edge(g, TX, 0, 0)] == 1.0
    assert delta[edge(g, TI, 0, 0)] == 0.0
    assert delta[edge(g, "IEnd", 0, 0, 0)] == 0.0


def test_cost_empty_gold():
    g = build(1, 1, 1)
    delta = build_cost([], g, beta=1.0)
    assert delta[edge(g, TI, 0, 0)] == 1.0 and delta[edge(g, TX, 0, 0)] == 0.0
    g = build(2, 1, 2)
    delta = build_cost([], g, beta=2.5)
    assert delta[edge(g, TI, 0, 0)] == delta[edge(g, TI, 0, 1)] == 1.0
    assert np.count_nonzero(delta) == 2


def test_cost_values(rng):
    g = build(4, 2, 3)
    gold = random_mentions(g, rng, 0.3)
    delta = build_cost(gold, g, 2.0)
    assert set(np.unique(delta)) <= {0.0, 1.0, 2.0}
    assert np.all(delta[list(encode(gold, g).edges)] == 0.0)


def test_hand_computed_loss():
    g = build(1, 1, 1)
    s = Sentence(("w",))
    scorer = FixedScorer(np.zeros(g.num_edges))
    loss, grads = loss_and_grad(s, [Mention(0, 0, 0)], scorer, g, TrainConfig(beta=1.0, l2=0.0))
    assert abs(loss - math.log(1 + math.e)) < 1e-12
    dphi = grads["phi"]
    assert abs(dphi[edge(g, TI, 0, 0)] - (1 / (1 + math.e) - 1)) < 1e-12
    assert abs(dphi[edge(g, TX, 0, 0)] - math.e / (1 + math.e)) < 1e-12
    assert round(dphi[edge(g, TX, 0, 0)], 6) == 0.731059


def test_plain_nll_matches_enumeration(rng):
    for n, m, c in [(2, 1, 2), (3, 2, 2), (3, 1, 3)]:
        g = build(n, m, c)
        enum = FactoredEnumeration(g)
        scores = EdgeScoreTable(g, random_scores(g, rng))
        gold = random_mentions(g, rng)
        loss, _ = sentence_loss(scores, gold, g, beta=None)
        path_score = sum(scores.phi[e] for e in encode(gold, g).edges)
        assert abs(loss - (brute_log_z(g, scores, enum=enum) - path_score)) < 1e-10


def test_margin_dominates_nll(rng):
    for _ in range(50):
        g = build(3, 2, 3)
        gold = random_mentions(g, rng)
        phi = random_scores(g, rng)
        margin, _ = sentence_loss(EdgeScoreTable(g, phi), gold, g, beta=2.0)
        plain, _ = sentence_loss(EdgeScoreTable(g, phi), gold, g, beta=None)
        assert margin >= plain


def test_gradient_vanishes_when_model_is_sure(rng):
    g = build(3, 2, 2)
    gold = random_mentions(g, rng)
    phi = np.where(g.is_spine, 0.0, -40.0)
    phi[list(encode(gold, g).edges)] = 40.0
    phi[g.is_spine] = 0.0
    _, dphi = sentence_loss(EdgeScoreTable(g, phi), gold, g, beta=1.5)
    assert np.max(np.abs(dphi)) < 1e-20


def test_l2_term():
    g = build(1, 1, 1)
    theta = np.full(g.num_edges, 0.5)
    theta[g.is_spine] = 0.0
    cfg = TrainConfig(l2=0.1)
    loss, grads = loss_and_grad(Sentence(("w",)), [], FixedScorer(theta), g, cfg)
    plain, dphi = sentence_loss(EdgeScoreTable(g, theta), [], g, 1.5)
    assert loss == pytest.approx(plain + 0.05 * np.sum(theta ** 2), abs=1e-12)
    np.testing.assert_allclose(grads["phi"], dphi + 0.1 * theta, atol=1e-15)


def test_adam_zero_gradient():
    params = {"w": np.array([1.0, -2.0])}
    opt = Adam(params, TrainConfig())
    opt.step({"w": np.array([0.5, 0.5])})
    m_before = opt.m["w"].copy()
    before = params["w"].copy()
    opt.step({"w": np.zeros(2)})
    # momentum still moves the parameters; the moments only decay
    np.testing.assert_allclose(opt.m["w"], 0.9 * m_before)
    fresh = {"w": np.array([1.0, -2.0])}
    Adam(fresh, TrainConfig()).step({"w": np.zeros(2)})
    assert np.array_equal(fresh["w"], [1.0, -2.0])
    assert not np.array_equal(before, params["w"])


def test_adam_clips_global_norm():
    params = {"a": np.zeros(2), "b": np.zeros(1)}
    grads = {"a": np.array([4.0, 0.0]), "b": SparseGrad(np.array([0]), np.array([2.0 * math.sqrt(5)]))}
    assert abs(global_norm(grads) - 6.0) < 1e-12
    opt = Adam(params, TrainConfig())
    opt.step(grads)
    # m = (1 - beta1) * g * 3 / 6
    np.testing.assert_allclose(opt.m["a"], [0.2, 0.0])
    np.testing.assert_allclose(opt.m["b"], [0.1 * math.sqrt(5)])


def test_adam_lazy_sparse_rows():
    params = {"w": np.ones(4)}
    opt = Adam(params, TrainConfig())
    opt.step({"w": SparseGrad(np.array([1, 3]), np.array([0.1, -0.1]))})
    assert params["w"][0] == 1.0 and params["w"][2] == 1.0
    assert params["w"][1] < 1.0 < params["w"][3]


def test_adam_first_step_size():
    params = {"w": np.zeros(3)}
    Adam(params, TrainConfig(lr=0.01)).step({"w": np.array([0.3, -0.1, 0.0])})
    np.testing.assert_allclose(params["w"], [-0.01, 0.01, 0.0], atol=1e-9)


def test_adam_non_finite():
    opt = Adam({"w": np.zeros(2)}, TrainConfig())
    with pytest.raises(NonFiniteGradient) as info:
        opt.step({"w": np.array([np.inf, 0.0])}, sentence_id="s7")
    assert info.value.sentence_id == "s7"


def test_adam_replay_is_bitwise(rng):
    g = rng.normal(size=(5, 3))
    runs = []
    for _ in range(2):
        params = {"w": np.ones(3)}
        opt = Adam(params, TrainConfig())
        for row in g:
            opt.step({"w": row})
        runs.append(params["w"].copy())
    assert np.array_equal(*runs)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(beta=0.5)
    with pytest.raises(ValueError):
        TrainConfig(clip=0)


def _one_sentence():
    s = Sentence(("the", "Seattle", "zoo", "is", "big"), ("DT", "NNP", "NN", "VB", "JJ"), "s0")
    gold = (Mention(0, 2, 0), Mention(1, 1, 1))
    return [(s, gold)]


def test_overfit_one_sentence():
    corpus = _one_sentence()
    types = TypeVocab(["FAC", "GPE"])
    cfg = TrainConfig(epochs=50, patience=100, lr=0.05, l2=0.0)
    model, log = train(corpus, corpus, types, cfg)
    assert len(log) == 50
    losses = [e["loss"] for e in log]
    assert all(b <= a for a, b in zip(losses[2:], losses[3:]))
    assert model.predict(corpus[0][0]) == corpus[0][1]


def test_patience_zero_runs_one_extra_epoch():
    corpus = _one_sentence()
    types = TypeVocab(["FAC", "GPE"])
    _, log = train(corpus, corpus, types, TrainConfig(epochs=10, patience=0, lr=0.0))
    assert len(log) == 2
    _, log = train(corpus, corpus, types, TrainConfig(epochs=10, patience=3, lr=0.0))
    assert len(log) == 5


def test_best_snapshot_restored():
    corpus = _one_sentence()
    types = TypeVocab(["FAC", "GPE"])
    model, log = train(corpus, corpus, types, TrainConfig(epochs=3, patience=0, lr=0.0))
    assert np.all(model.scorer.weights == 0.0)


def test_gold_violates_cap():
    corpus = _one_sentence()
    with pytest.raises(GoldViolatesCap) as info:
        train(corpus, corpus, TypeVocab(["FAC", "GPE"]), TrainConfig(max_len=2))
    assert info.value.offending == [("s0", Mention(0, 2, 0))]


def test_log_file(tmp_path):
    corpus = _one_sentence()
    path = tmp_path / "log.jsonl"
    _, log = train(corpus, corpus, TypeVocab(["FAC", "GPE"]), TrainConfig(epochs=3), log_path=path)
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert lines == log
    assert set(lines[0]) == {"epoch", "loss", "dev_p", "dev_r", "dev_f1"}


def test_neural_training_is_deterministic():
    from seghyp.model.neural import NeuralConfig
    corpus = _one_sentence()
    types = TypeVocab(["FAC", "GPE"])
    cfg = TrainConfig(scorer="neural", epochs=2, seed=5,
                      neural=NeuralConfig(word_dim=4, word_hidden=4, span_hidden=4, dropout=0.5))
    a, log_a = train(corpus, corpus, types, cfg)
    b, log_b = train(corpus, corpus, types, cfg)
    assert log_a == log_b and a.dumps() == b.dumps()
