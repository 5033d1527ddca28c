"""Domain types shared across the package.

Token indices are 0-based and span ends are inclusive everywhere inside the
package.  Hypergraph nodes and hyperedges are small named tuples so they can
be hashed, sorted and compared cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence


class SegHypError(ValueError):
    """Base class for all errors raised by this package."""


class IndexOutOfRange(SegHypError):
    pass


class MentionTooLong(SegHypError):
    pass


class MalformedHyperpath(SegHypError):
    pass


class NonFiniteScore(SegHypError):
    pass


@dataclass(frozen=True)
class Sentence:
    tokens: tuple
    pos: Optional[tuple] = None
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.pos is not None:
            object.__setattr__(self, "pos", tuple(self.pos))
        if len(self.tokens) < 1:
            raise SegHypError("sentence must contain at least one token")
        if self.pos is not None and len(self.pos) != len(self.tokens):
            raise SegHypError(
                f"pos length {len(self.pos)} != token count {len(self.tokens)}")

    def __len__(self):
        return len(self.tokens)


class Mention(NamedTuple):
    """A typed span ``tokens[start:end + 1]``."""
    start: int
    end: int
    type: int


# A mention set is a canonical (sorted, duplicate-free) tuple of mentions.
MentionSet = tuple


def mention_length(mention: Mention) -> int:
    return mention.end - mention.start + 1


def canonicalize(mentions: Iterable) -> MentionSet:
    return tuple(sorted({Mention(*m) for m in mentions}))


def validate_mentions(mentions: Iterable[Mention], n: int, m: int) -> None:
    for mention in mentions:
        if not (0 <= mention.start <= mention.end < n):
            raise IndexOutOfRange(f"span {mention.start}..{mention.end} outside sentence of length {n}")
        if not (0 <= mention.type < m):
            raise IndexOutOfRange(f"type {mention.type} outside [0, {m})")


# ---------------------------------------------------------------------------
# Hypergraph identifiers
#
# A(i)      mentions starting at token i or later
# E(i)      mentions starting exactly at token i
# T(k,i)    mentions of type k starting at token i
# I(k,i,j)  mentions of type k starting at i that contain token j
# X         end-of-mention sink

class Node(NamedTuple):
    kind: str
    k: int = -1
    i: int = -1
    j: int = -1

    def __repr__(self):
        if self.kind in ("A", "E"):
            return f"{self.kind}({self.i})"
        if self.kind == "T":
            return f"T({self.k},{self.i})"
        if self.kind == "I":
            return f"I({self.k},{self.i},{self.j})"
        return "X"


def A(i: int) -> Node:
    return Node("A", -1, i)


def E(i: int) -> Node:
    return Node("E", -1, i)


def T(k: int, i: int) -> Node:
    return Node("T", k, i)


def I(k: int, i: int, j: int) -> Node:  # noqa: E741,E743
    return Node("I", k, i, j)


X = Node("X")

SPINE_A = "SpineA"
SPINE_E = "SpineE"
TX = "TX"
TI = "TI"
I_CONTINUE = "IContinue"
I_END = "IEnd"
I_BOTH = "IBoth"

EDGE_KINDS = (SPINE_A, SPINE_E, TX, TI, I_CONTINUE, I_END, I_BOTH)
SPINE_KINDS = frozenset((SPINE_A, SPINE_E))

# Tie-break priority among the outgoing edges of one node (lower wins).
TIE_PRIORITY = {TX: 0, TI: 1, I_END: 0, I_CONTINUE: 1, I_BOTH: 2, SPINE_A: 0, SPINE_E: 0}


class Edge(NamedTuple):
    kind: str
    k: int = -1
    i: int = -1
    j: int = -1

    def __repr__(self):
        if self.kind in SPINE_KINDS:
            return f"{self.kind}({self.i})"
        if self.kind in (TX, TI):
            return f"{self.kind}({self.k},{self.i})"
        return f"{self.kind}({self.k},{self.i},{self.j})"

    def head(self) -> Node:
        if self.kind == SPINE_A:
            return A(self.i)
        if self.kind == SPINE_E:
            return E(self.i)
        if self.kind in (TX, TI):
            return T(self.k, self.i)
        return I(self.k, self.i, self.j)

    def tail(self, n: int, m: int) -> tuple:
        kind, k, i, j = self
        if kind == SPINE_A:
            return (A(i + 1), E(i)) if i + 1 < n else (E(i),)
        if kind == SPINE_E:
            return tuple(T(t, i) for t in range(m))
        if kind == TX:
            return (X,)
        if kind == TI:
            return (I(k, i, i),)
        if kind == I_CONTINUE:
            return (I(k, i, j + 1),)
        if kind == I_END:
            return (X,)
        return (X, I(k, i, j + 1))


def inside_cap(i: int, n: int, c: int) -> int:
    """Last token index an I-node chain starting at ``i`` may reach."""
    return min(i + c - 1, n - 1)


def valid_node(node: Node, n: int, m: int, c: int) -> bool:
    kind, k, i, j = node
    if kind == "X":
        return k == i == j == -1
    if not (0 <= i < n):
        return False
    if kind in ("A", "E"):
        return k == -1 and j == -1
    if not (0 <= k < m):
        return False
    if kind == "T":
        return j == -1
    if kind == "I":
        return i <= j <= inside_cap(i, n, c)
    return False


def valid_edge(edge: Edge, n: int, m: int, c: int) -> bool:
    kind, k, i, j = edge
    if kind not in EDGE_KINDS or not (0 <= i < n):
        return False
    if kind in SPINE_KINDS:
        return k == -1 and j == -1
    if not (0 <= k < m):
        return False
    if kind in (TX, TI):
        return j == -1
    cap = inside_cap(i, n, c)
    if kind == I_END:
        return i <= j <= cap
    return i <= j and j + 1 <= cap


@dataclass(frozen=True)
class Hyperpath:
    """A hyperpath, stored as indices into ``SegmentalHypergraph.edges``."""
    edges: frozenset

    def edge_ids(self, graph) -> set:
        return {graph.edges[e] for e in self.edges}

    def __len__(self):
        return len(self.edges)


@dataclass
class TypeVocab:
    """Bidirectional map between mention-type strings and dense indices."""
    names: list = field(default_factory=list)

    def __post_init__(self):
        self._index = {name: i for i, name in enumerate(self.names)}
        if len(self._index) != len(self.names):
            raise SegHypError("duplicate type names")

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "TypeVocab":
        return cls(sorted(set(names)))

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SegHypError(f"unknown mention type {name!r}") from None

    def name(self, index: int) -> str:
        return self.names[index]

    def to_list(self) -> list:
        return list(self.names)


def mentions_from_spans(spans: Sequence, types: TypeVocab) -> MentionSet:
    return canonicalize(Mention(s, e, types.index(t)) for s, e, t in spans)
