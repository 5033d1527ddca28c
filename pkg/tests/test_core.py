import pytest

from seghyp.core import (
    A, E, I, T, X, I_BOTH, I_END, TX, Edge, IndexOutOfRange, Mention, SegHypError,
    Sentence, TypeVocab, canonicalize, inside_cap, mention_length, mentions_from_spans,
    valid_edge, valid_node, validate_mentions,
)


def test_sentence_requires_tokens():
    with pytest.raises(SegHypError):
        Sentence(())


def test_sentence_pos_length_checked():
    with pytest.raises(SegHypError):
        Sentence(("a", "b"), ("DT",))
    assert len(Sentence(["a", "b"], ["DT", "NN"])) == 2


def test_mention_length():
    assert mention_length(Mention(2, 2, 0)) == 1
    assert mention_length(Mention(0, 3, 1)) == 4


def test_canonicalize_sorts_and_dedups():
    got = canonicalize([(3, 4, 0), (0, 2, 1), (3, 4, 0), (0, 2, 0)])
    assert got == (Mention(0, 2, 0), Mention(0, 2, 1), Mention(3, 4, 0))
    assert canonicalize(got) == got
    assert canonicalize([]) == ()


def test_validate_mentions():
    validate_mentions([Mention(0, 1, 0)], n=2, m=1)
    with pytest.raises(IndexOutOfRange):
        validate_mentions([Mention(0, 2, 0)], n=2, m=1)
    with pytest.raises(IndexOutOfRange):
        validate_mentions([Mention(0, 0, 1)], n=2, m=1)


def test_edge_heads_and_tails():
    n, m = 3, 2
    assert Edge("SpineA", i=2).tail(n, m) == (E(2),)
    assert Edge("SpineA", i=0).tail(n, m) == (A(1), E(0))
    assert Edge("SpineE", i=1).tail(n, m) == (T(0, 1), T(1, 1))
    assert Edge(TX, 1, 0).tail(n, m) == (X,)
    assert Edge(I_BOTH, 0, 0, 1).tail(n, m) == (X, I(0, 0, 2))
    assert Edge(I_END, 0, 0, 1).head() == I(0, 0, 1)


def test_validity_respects_cap():
    n, m, c = 4, 1, 2
    assert inside_cap(0, n, c) == 1
    assert inside_cap(3, n, c) == 3
    assert valid_node(I(0, 0, 1), n, m, c)
    assert not valid_node(I(0, 0, 2), n, m, c)
    assert valid_edge(Edge(I_END, 0, 0, 1), n, m, c)
    assert not valid_edge(Edge(I_BOTH, 0, 0, 1), n, m, c)
    assert not valid_node(T(1, 0), n, m, c)


def test_type_vocab():
    types = TypeVocab.from_names(["PER", "GPE", "PER"])
    assert types.to_list() == ["GPE", "PER"]
    assert types.index("PER") == 1 and types.name(0) == "GPE"
    with pytest.raises(SegHypError):
        types.index("ORG")
    assert mentions_from_spans([(1, 1, "PER"), (0, 0, "GPE")], types) == (
        Mention(0, 0, 0), Mention(1, 1, 1))
