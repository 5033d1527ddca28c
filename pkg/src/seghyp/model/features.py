"""Handcrafted feature templates for the linear scorer.

Every feature string has the form ``FAMILY:template=value:type=k`` where
FAMILY is ``TX``/``TI`` for features anchored at a start token, ``IX`` for a
complete span and ``II`` for extending a span by one token.  An IBoth edge
fires the union of the IX features of its span and the II features of its
extension, so its score is always the sum of the IEnd and IContinue scores.
"""

from __future__ import annotations

import itertools

from ..core import I_BOTH, I_CONTINUE, I_END, SPINE_KINDS, TI, TX, Edge

BOS, EOS = "<s>", "</s>"


def word_shape(word: str) -> str:
    """Map A-Z to A, a-z to a, digits to 0, anything else to -, collapsing runs to ``c+``."""
    classes = []
    for ch in word:
        if ch.isupper():
            classes.append("A")
        elif ch.islower():
            classes.append("a")
        elif ch.isdigit():
            classes.append("0")
        else:
            classes.append("-")
    out = []
    for ch, run in itertools.groupby(classes):
        out.append(ch + "+" if len(list(run)) > 1 else ch)
    return "".join(out)


def length_bucket(length: int) -> str:
    return str(length) if length <= 6 else "7+"


class _Context:
    """Per-sentence lookups shared by all templates."""

    def __init__(self, sentence):
        self.tokens = sentence.tokens
        self.lower = [t.lower() for t in sentence.tokens]
        self.pos = sentence.pos
        self.n = len(sentence.tokens)

    def low(self, i):
        if i < 0:
            return BOS
        if i >= self.n:
            return EOS
        return self.lower[i]

    def tag(self, i):
        if i < 0:
            return BOS
        if i >= self.n:
            return EOS
        return self.pos[i]

    def anchored(self, i):
        word = self.tokens[i]
        low = self.lower[i]
        feats = [f"word={word}", f"w0={low}", f"w-1={self.low(i - 1)}", f"w+1={self.low(i + 1)}"]
        if self.pos is not None:
            feats += [f"p-1={self.tag(i - 1)}", f"p0={self.tag(i)}", f"p+1={self.tag(i + 1)}"]
        feats.append(f"shape={word_shape(word)}")
        for size in (1, 2, 3):
            if len(low) >= size:
                feats.append(f"pre{size}={low[:size]}")
                feats.append(f"suf{size}={low[-size:]}")
        return feats

    def span(self, i, j):
        length = j - i + 1
        words = self.lower[i:j + 1]
        feats = [f"len={length_bucket(length)}", f"first={words[0]}", f"last={words[-1]}"]
        feats += [f"bow={w}" for w in words]
        if self.pos is not None:
            feats += [f"bop={p}" for p in self.pos[i:j + 1]]
        feats += [f"left={self.low(i - 1)}", f"right={self.low(j + 1)}"]
        if length <= 6:
            feats.append("span=" + "_".join(words))
        return feats

    def extend(self, i, j):
        feats = [f"next={self.low(j + 1)}"]
        if self.pos is not None:
            feats.append(f"nextpos={self.tag(j + 1)}")
        feats.append(f"len={length_bucket(j - i + 1)}")
        return feats


def _tagged(family, feats, k):
    return [f"{family}:{f}:type={k}" for f in feats]


def _edge_features(ctx, edge, anchored, spans, extends):
    kind, k, i, j = edge
    if kind in SPINE_KINDS:
        return []
    if kind in (TX, TI):
        return _tagged(kind, anchored(i), k)
    if kind == I_END:
        return _tagged("IX", spans(i, j), k)
    if kind == I_CONTINUE:
        return _tagged("II", extends(i, j), k)
    if kind == I_BOTH:
        return _tagged("IX", spans(i, j), k) + _tagged("II", extends(i, j), k)
    raise ValueError(f"unknown edge kind {kind!r}")


def extract_features(edge: Edge, sentence) -> list:
    ctx = _Context(sentence)
    return _edge_features(ctx, edge, ctx.anchored, ctx.span, ctx.extend)


def iter_sentence_features(sentence, graph):
    """Feature lists for the edges of ``graph`` in edge order, sharing template work."""
    ctx = _Context(sentence)
    anchored = _memo(ctx.anchored)
    spans = _memo(ctx.span)
    extends = _memo(ctx.extend)
    for edge in graph.edges:
        yield _edge_features(ctx, edge, anchored, spans, extends)


def sentence_features(sentence, graph) -> list:
    return list(iter_sentence_features(sentence, graph))


def _memo(fn):
    table = {}

    def wrapped(*args):
        if args not in table:
            table[args] = fn(*args)
        return table[args]
    return wrapped
