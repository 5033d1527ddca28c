"""Recurrent edge scorer: word BiLSTM, span BiLSTM and linear score heads.

Pipeline for one sentence::

    v_i      = [word_emb, pos_emb, char BiLSTM]   (dropout on v during training)
    h^w_i    = [fwd_i, bwd_i] of a BiLSTM over v
    h^s_i:j  = [forward LSTM over h^w_i..h^w_j, backward LSTM over h^w_j..h^w_i]

Span states are built incrementally: one forward run per start position and one
backward run per end position, each at most ``c`` steps long.  The IBoth head
reuses the IContinue and IEnd weights, so its score is always their sum.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from ..inference import EdgeScoreTable
from .linear import SparseGrad
from .lstm import StepCounter, init_lstm, lstm_backward, lstm_forward

UNK = "<unk>"
POS_DIM = 32
EMBEDDING_PARAMS = ("word_emb", "pos_emb", "char_emb")


@dataclass
class NeuralConfig:
    word_dim: int = 100
    word_hidden: int = 200   # size of h^w, split evenly between directions
    span_hidden: int = 200   # size of h^s, split evenly between directions
    use_pos: bool = True
    use_char: bool = False
    char_dim: int = 30
    char_hidden: int = 50    # per direction
    dropout: float = 0.5

    def __post_init__(self):
        if self.word_hidden % 2 or self.span_hidden % 2:
            raise ValueError("word_hidden and span_hidden must be even")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def input_dim(self) -> int:
        return (self.word_dim + (POS_DIM if self.use_pos else 0)
                + (2 * self.char_hidden if self.use_char else 0))


class Vocab:
    """Symbol table with ``<unk>`` at index 0."""

    def __init__(self, symbols):
        self.symbols = [UNK] + [s for s in symbols if s != UNK]
        self.index = {s: i for i, s in enumerate(self.symbols)}

    def __len__(self):
        return len(self.symbols)

    def ids(self, items) -> np.ndarray:
        get = self.index.get
        return np.array([get(x, 0) for x in items], dtype=np.int64)


def load_embeddings(path) -> dict:
    """Read a whitespace-separated text embedding file: token then its values, one per line."""
    vectors = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip().split()
            if not parts:
                continue
            values = np.array([float(x) for x in parts[1:]])
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            vectors[parts[0]] = values
    return vectors


@dataclass
class SpanEmbeddingTable:
    spans: tuple
    forward: np.ndarray    # (S, span_hidden / 2)
    backward: np.ndarray   # (S, span_hidden / 2)

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.spans)}

    @property
    def vectors(self) -> np.ndarray:
        return np.hstack((self.forward, self.backward))

    def get(self, i: int, j: int) -> np.ndarray:
        idx = self._index[(i, j)]
        return np.concatenate((self.forward[idx], self.backward[idx]))

    def __len__(self):
        return len(self.spans)


class NeuralScorer:
    kind = "neural"

    def __init__(self, num_types: int, config: NeuralConfig, words: Vocab, tags: Vocab,
                 chars: Vocab, params: dict, rare_words=()):
        self.num_types = num_types
        self.config = config
        self.words, self.tags, self.chars = words, tags, chars
        self.params = params
        self.rare = np.zeros(len(words), dtype=bool)
        self.rare[list(rare_words)] = True
        self.counter = StepCounter()

    @classmethod
    def build(cls, sentences, num_types: int, config: NeuralConfig | None = None,
              seed: int = 0, embeddings: dict | None = None) -> "NeuralScorer":
        config = config or NeuralConfig()
        counts = Counter(tok for s in sentences for tok in s.tokens)
        words = Vocab(sorted(counts))
        tags = Vocab(sorted({p for s in sentences if s.pos for p in s.pos}))
        chars = Vocab(sorted({ch for tok in counts for ch in tok}))
        if embeddings:
            dim = len(next(iter(embeddings.values())))
            if dim != config.word_dim:
                raise ValueError(f"embedding file has dimension {dim}, config expects {config.word_dim}")
        rng = np.random.default_rng(seed)
        p = {}
        p["word_emb"] = rng.uniform(-0.1, 0.1, (len(words), config.word_dim))
        if embeddings:
            for idx, tok in enumerate(words.symbols):
                vec = embeddings.get(tok)
                if vec is None:
                    vec = embeddings.get(tok.lower())
                if vec is not None:
                    p["word_emb"][idx] = vec
        if config.use_pos:
            p["pos_emb"] = rng.uniform(-0.1, 0.1, (len(tags), POS_DIM))
        if config.use_char:
            p["char_emb"] = rng.uniform(-0.1, 0.1, (len(chars), config.char_dim))
            for side in ("char_fwd", "char_bwd"):
                p[side + "_W"], p[side + "_b"] = init_lstm(rng, config.char_dim, config.char_hidden)
        h1, h2 = config.word_hidden // 2, config.span_hidden // 2
        for side in ("word_fwd", "word_bwd"):
            p[side + "_W"], p[side + "_b"] = init_lstm(rng, config.input_dim, h1)
        for side in ("span_fwd", "span_bwd"):
            p[side + "_W"], p[side + "_b"] = init_lstm(rng, config.word_hidden, h2)
        d1, d2 = config.word_hidden, config.span_hidden
        p["W_TX"] = rng.uniform(-0.1, 0.1, (d1, num_types))
        p["W_TI"] = rng.uniform(-0.1, 0.1, (d1, num_types))
        p["W_II"] = rng.uniform(-0.1, 0.1, (2 * d2, num_types))
        p["W_IX"] = rng.uniform(-0.1, 0.1, (d2, num_types))
        rare = [words.index[tok] for tok, cnt in counts.items() if cnt <= 1]
        return cls(num_types, config, words, tags, chars, p, rare)

    def parameters(self) -> dict:
        return self.params

    def word_ids(self, sentence) -> np.ndarray:
        return self.words.ids(sentence.tokens)

    def sample_word_ids(self, sentence, rng, prob: float = 0.5) -> np.ndarray:
        """Word ids with each singleton training word replaced by UNK with probability ``prob``."""
        ids = self.word_ids(sentence)
        drop = self.rare[ids] & (rng.random(len(ids)) < prob)
        ids[drop] = 0
        return ids

    # -- forward ----------------------------------------------------------

    def embed_tokens(self, sentence, word_ids=None, train=False, rng=None):
        p, cfg = self.params, self.config
        ids = self.word_ids(sentence) if word_ids is None else word_ids
        parts = [p["word_emb"][ids]]
        cache = {"word_ids": ids}
        if cfg.use_pos:
            tag_ids = self.tags.ids(sentence.pos) if sentence.pos else np.zeros(len(ids), dtype=np.int64)
            parts.append(p["pos_emb"][tag_ids])
            cache["tag_ids"] = tag_ids
        if cfg.use_char:
            reps, runs = [], []
            for tok in sentence.tokens:
                cids = self.chars.ids(tok)
                embs = p["char_emb"][cids]
                hf, cf = lstm_forward(p["char_fwd_W"], p["char_fwd_b"], embs)
                hb, cb = lstm_forward(p["char_bwd_W"], p["char_bwd_b"], embs[::-1])
                reps.append(np.concatenate((hf[-1], hb[-1])))
                runs.append((cids, cf, cb))
            parts.append(np.array(reps))
            cache["char_runs"] = runs
        v = np.hstack(parts)
        if train and cfg.dropout > 0.0:
            if rng is None:
                raise ValueError("training-mode dropout needs an rng")
            scale = (rng.random(v.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
            v = v * scale
            cache["dropout"] = scale
        return v, cache

    def encode_words(self, v):
        p = self.params
        hf, cf = lstm_forward(p["word_fwd_W"], p["word_fwd_b"], v)
        hb, cb = lstm_forward(p["word_bwd_W"], p["word_bwd_b"], v[::-1])
        return np.hstack((hf, hb[::-1])), (cf, cb)

    def encode_spans(self, hw, graph):
        p = self.params
        h2 = self.config.span_hidden // 2
        S = len(graph.spans)
        fwd = np.empty((S, h2))
        bwd = np.empty((S, h2))
        fruns, bruns = [], []
        for i, idx in enumerate(graph.spans_by_start):
            hs, steps = lstm_forward(p["span_fwd_W"], p["span_fwd_b"], hw[i:i + len(idx)], self.counter)
            fwd[idx] = hs
            fruns.append(steps)
        for j, idx in enumerate(graph.spans_by_end):
            lo = j - len(idx) + 1
            seq = hw[lo:j + 1][::-1]
            hs, steps = lstm_forward(p["span_bwd_W"], p["span_bwd_b"], seq, self.counter)
            bwd[idx] = hs
            bruns.append(steps)
        return SpanEmbeddingTable(graph.spans, fwd, bwd), (fruns, bruns)

    def forward(self, sentence, graph, train: bool = False, seed=None, word_ids=None):
        p = self.params
        rng = np.random.default_rng(seed) if train and self.config.dropout > 0.0 else None
        v, ecache = self.embed_tokens(sentence, word_ids, train, rng)
        hw, wcache = self.encode_words(v)
        spans, scache = self.encode_spans(hw, graph)
        H = spans.vectors
        a, b = _pair_arrays(graph)
        Xp = np.hstack((H[a], H[b]))

        phi = np.zeros(graph.num_edges)
        phi[graph.tx] = (hw @ p["W_TX"]).T
        phi[graph.ti] = (hw @ p["W_TI"]).T
        s_ix = H @ p["W_IX"]
        phi[graph.i_end] = s_ix.T
        if len(a):
            s_ii = Xp @ p["W_II"]
            phi[graph.i_continue] = s_ii.T
            phi[graph.i_both] = (s_ii + s_ix[a]).T
        cache = {"graph": graph, "embed": ecache, "words": wcache, "spans": scache,
                 "hw": hw, "H": H, "Xp": Xp, "pairs": (a, b)}
        return EdgeScoreTable(graph, phi), cache

    def score(self, sentence, graph) -> EdgeScoreTable:
        return self.forward(sentence, graph)[0]

    # -- backward ---------------------------------------------------------

    def backward(self, cache, dphi: np.ndarray) -> dict:
        p, cfg = self.params, self.config
        graph = cache["graph"]
        hw, H, Xp = cache["hw"], cache["H"], cache["Xp"]
        a, b = cache["pairs"]
        grads = {}

        d_tx = dphi[graph.tx].T
        d_ti = dphi[graph.ti].T
        grads["W_TX"] = hw.T @ d_tx
        grads["W_TI"] = hw.T @ d_ti
        dhw = d_tx @ p["W_TX"].T + d_ti @ p["W_TI"].T

        d_ix = dphi[graph.i_end].T.copy()
        dH = np.zeros_like(H)
        if len(a):
            d_both = dphi[graph.i_both].T
            d_ii = dphi[graph.i_continue].T + d_both
            np.add.at(d_ix, a, d_both)
            grads["W_II"] = Xp.T @ d_ii
            dXp = d_ii @ p["W_II"].T
            d2 = H.shape[1]
            np.add.at(dH, a, dXp[:, :d2])
            np.add.at(dH, b, dXp[:, d2:])
        else:
            grads["W_II"] = np.zeros_like(p["W_II"])
        grads["W_IX"] = H.T @ d_ix
        dH += d_ix @ p["W_IX"].T

        # span encoder
        h2 = cfg.span_hidden // 2
        fruns, bruns = cache["spans"]
        dW, db = np.zeros_like(p["span_fwd_W"]), np.zeros_like(p["span_fwd_b"])
        for i, (idx, steps) in enumerate(zip(graph.spans_by_start, fruns)):
            dxs, w, bb = lstm_backward(p["span_fwd_W"], steps, dH[idx, :h2])
            dhw[i:i + len(idx)] += dxs
            dW += w
            db += bb
        grads["span_fwd_W"], grads["span_fwd_b"] = dW, db
        dW, db = np.zeros_like(p["span_bwd_W"]), np.zeros_like(p["span_bwd_b"])
        for j, (idx, steps) in enumerate(zip(graph.spans_by_end, bruns)):
            dxs, w, bb = lstm_backward(p["span_bwd_W"], steps, dH[idx, h2:])
            lo = j - len(idx) + 1
            dhw[lo:j + 1] += dxs[::-1]
            dW += w
            db += bb
        grads["span_bwd_W"], grads["span_bwd_b"] = dW, db

        # word encoder
        h1 = cfg.word_hidden // 2
        cf, cb = cache["words"]
        dv, grads["word_fwd_W"], grads["word_fwd_b"] = lstm_backward(p["word_fwd_W"], cf, dhw[:, :h1])
        dv_rev, grads["word_bwd_W"], grads["word_bwd_b"] = lstm_backward(p["word_bwd_W"], cb, dhw[::-1, h1:])
        dv = dv + dv_rev[::-1]

        # embeddings
        ecache = cache["embed"]
        if "dropout" in ecache:
            dv = dv * ecache["dropout"]
        grads["word_emb"] = _row_grad(ecache["word_ids"], dv[:, :cfg.word_dim])
        col = cfg.word_dim
        if cfg.use_pos:
            grads["pos_emb"] = _row_grad(ecache["tag_ids"], dv[:, col:col + POS_DIM])
            col += POS_DIM
        if cfg.use_char:
            ch = cfg.char_hidden
            d_char = np.zeros_like(p["char_emb"])
            for side in ("char_fwd", "char_bwd"):
                grads[side + "_W"] = np.zeros_like(p[side + "_W"])
                grads[side + "_b"] = np.zeros_like(p[side + "_b"])
            for t, (cids, cf_, cb_) in enumerate(ecache["char_runs"]):
                L = len(cids)
                dh = np.zeros((L, ch))
                dh[-1] = dv[t, col:col + ch]
                dx, w, bb = lstm_backward(p["char_fwd_W"], cf_, dh)
                grads["char_fwd_W"] += w
                grads["char_fwd_b"] += bb
                np.add.at(d_char, cids, dx)
                dh = np.zeros((L, ch))
                dh[-1] = dv[t, col + ch:col + 2 * ch]
                dx, w, bb = lstm_backward(p["char_bwd_W"], cb_, dh)
                grads["char_bwd_W"] += w
                grads["char_bwd_b"] += bb
                np.add.at(d_char, cids[::-1], dx)
            rows = np.unique(np.concatenate([r[0] for r in ecache["char_runs"]]))
            grads["char_emb"] = SparseGrad(rows, d_char[rows])
        return grads

    def config_dict(self) -> dict:
        return asdict(self.config)


def _pair_arrays(graph):
    if graph.pairs:
        a, b = zip(*graph.pairs)
        return np.array(a), np.array(b)
    return np.zeros(0, dtype=int), np.zeros(0, dtype=int)


def _row_grad(ids, drows) -> SparseGrad:
    uniq, inverse = np.unique(ids, return_inverse=True)
    values = np.zeros((len(uniq), drows.shape[1]))
    np.add.at(values, inverse, drows)
    return SparseGrad(uniq, values)
