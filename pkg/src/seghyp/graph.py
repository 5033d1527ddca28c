"""The complete segmental hypergraph of a sentence, and the bijection between
its hyperpaths and mention sets.

Topology depends only on ``(n, m, c)``, so graphs are built once per shape and
cached.  Nodes are stored in topological order: ``X`` first, every child
before its heads, ``A(0)`` last.
"""

from __future__ import annotations

import functools
from collections import defaultdict

import numpy as np

from .core import (
    A, E, I, T, X, I_BOTH, I_CONTINUE, I_END, SPINE_A, SPINE_E, SPINE_KINDS, TI,
    TIE_PRIORITY, TX, Edge, Hyperpath, MalformedHyperpath, Mention, MentionTooLong,
    IndexOutOfRange, SegHypError, inside_cap,
)


class SegmentalHypergraph:
    def __init__(self, n: int, m: int, c: int):
        if n < 1 or m < 1:
            raise SegHypError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
        if not 1 <= c <= n:
            raise SegHypError(f"mention-length cap must satisfy 1 <= c <= n, got c={c}, n={n}")
        self.n, self.m, self.c = n, m, c

        nodes = [X]
        for i in range(n - 1, -1, -1):
            for k in range(m):
                for j in range(inside_cap(i, n, c), i - 1, -1):
                    nodes.append(I(k, i, j))
            for k in range(m):
                nodes.append(T(k, i))
            nodes.append(E(i))
            nodes.append(A(i))
        self.nodes = tuple(nodes)
        self.node_index = {node: idx for idx, node in enumerate(nodes)}
        self.root = len(nodes) - 1
        self.sink = 0
        self.topo_order = tuple(range(len(nodes)))

        # Spans (i, j) in ascending order; ``pairs`` links span (i, j) to (i, j + 1).
        spans = [(i, j) for i in range(n) for j in range(i, inside_cap(i, n, c) + 1)]
        self.spans = tuple(spans)
        self.span_index = {s: idx for idx, s in enumerate(spans)}
        pairs = [(self.span_index[(i, j)], self.span_index[(i, j + 1)])
                 for i, j in spans if (i, j + 1) in self.span_index]
        self.pairs = tuple(pairs)
        # span indices of (i, i), (i, i+1), ... and of (j, j), (j-1, j), ...
        self.spans_by_start = [
            [self.span_index[(i, j)] for j in range(i, inside_cap(i, n, c) + 1)] for i in range(n)]
        self.spans_by_end = [
            [self.span_index[(j - t, j)] for t in range(min(c, j + 1))] for j in range(n)]

        edges = []
        for i in range(n):
            edges.append(Edge(SPINE_A, -1, i))
            edges.append(Edge(SPINE_E, -1, i))
        for k in range(m):
            for i in range(n):
                edges.append(Edge(TX, k, i))
                edges.append(Edge(TI, k, i))
        for k in range(m):
            for i, j in spans:
                edges.append(Edge(I_END, k, i, j))
                if j + 1 <= inside_cap(i, n, c):
                    edges.append(Edge(I_CONTINUE, k, i, j))
                    edges.append(Edge(I_BOTH, k, i, j))
        self.edges = tuple(edges)
        self.edge_index = {e: idx for idx, e in enumerate(edges)}

        ni = self.node_index
        ei = self.edge_index
        self.head = [ni[e.head()] for e in edges]
        self.tails = [tuple(ni[t] for t in e.tail(n, m)) for e in edges]
        out = defaultdict(list)
        for idx, e in enumerate(edges):
            out[self.head[idx]].append(idx)
        self.out_edges = [
            tuple(sorted(out[v], key=lambda e: (TIE_PRIORITY[edges[e].kind], e)))
            for v in range(len(nodes))
        ]
        self.edge_mention = [
            Mention(e.i, e.j, e.k) if e.kind in (I_END, I_BOTH) else None for e in edges
        ]
        self.is_spine = np.array([e.kind in SPINE_KINDS for e in edges])
        self.spine_edges = tuple(idx for idx, e in enumerate(edges) if e.kind in SPINE_KINDS)
        # chain_edges[k][i][kind] -> list over j - i of edge indices (None when absent)
        chain = [[{TX: ei[Edge(TX, k, i)], TI: ei[Edge(TI, k, i)]} for i in range(n)] for k in range(m)]
        for k in range(m):
            for i in range(n):
                cap = inside_cap(i, n, c)
                for kind in (I_END, I_CONTINUE, I_BOTH):
                    chain[k][i][kind] = [ei.get(Edge(kind, k, i, j)) for j in range(i, cap + 1)]
        self.chain_edges = chain

        # Index arrays used by vectorized scorers.
        self.tx = np.array([[ei[Edge(TX, k, i)] for i in range(n)] for k in range(m)])
        self.ti = np.array([[ei[Edge(TI, k, i)] for i in range(n)] for k in range(m)])
        self.i_end = np.array([[ei[Edge(I_END, k, i, j)] for i, j in spans] for k in range(m)])
        pair_spans = [spans[a] for a, _ in pairs]
        self.i_continue = np.array(
            [[ei[Edge(I_CONTINUE, k, i, j)] for i, j in pair_spans] for k in range(m)],
            dtype=int).reshape(m, len(pairs))
        self.i_both = np.array(
            [[ei[Edge(I_BOTH, k, i, j)] for i, j in pair_spans] for k in range(m)],
            dtype=int).reshape(m, len(pairs))

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def __repr__(self):
        return f"SegmentalHypergraph(n={self.n}, m={self.m}, c={self.c})"


def expected_node_count(n: int, m: int, c: int) -> int:
    return 2 * n + m * n + m * sum(min(c, n - i) for i in range(n)) + 1


@functools.lru_cache(maxsize=512)
def build(n: int, m: int, c: int) -> SegmentalHypergraph:
    return SegmentalHypergraph(n, m, c)


def cap_for(n: int, max_len: int) -> int:
    """Effective cap for a sentence of length ``n``; ``max_len == 0`` is unrestricted."""
    return n if max_len <= 0 else min(max_len, n)


def encode(gold, graph: SegmentalHypergraph) -> Hyperpath:
    n, m, c = graph.n, graph.m, graph.c
    ends = {}
    for start, end, k in gold:
        if not (0 <= start <= end < n) or not (0 <= k < m):
            raise IndexOutOfRange(f"mention {(start, end, k)} out of range for n={n}, m={m}")
        if end - start + 1 > c:
            raise MentionTooLong(f"mention {(start, end, k)} longer than cap c={c}")
        ends.setdefault((k, start), set()).add(end)

    path = list(graph.spine_edges)
    for k, per_start in enumerate(graph.chain_edges):
        for i, chain in enumerate(per_start):
            chain_ends = ends.get((k, i))
            if not chain_ends:
                path.append(chain[TX])
                continue
            path.append(chain[TI])
            last = max(chain_ends)
            both, cont = chain[I_BOTH], chain[I_CONTINUE]
            for j in range(i, last):
                path.append(both[j - i] if j in chain_ends else cont[j - i])
            path.append(chain[I_END][last - i])
    return Hyperpath(frozenset(path))


def check_hyperpath(path: Hyperpath, graph: SegmentalHypergraph) -> None:
    """Raise MalformedHyperpath unless ``path`` is a rooted one-edge-per-node sub-structure.

    Every node other than the sink has a unique parent node and the graph is
    acyclic, so an edge set is a hyperpath exactly when its heads are distinct
    and coincide with the root plus the non-sink tail nodes of its edges.
    """
    edges = path.edges
    if not edges or min(edges) < 0 or max(edges) >= graph.num_edges:
        raise MalformedHyperpath("path is empty or references edges outside the graph")
    heads = set(map(graph.head.__getitem__, edges))
    if len(heads) != len(edges):
        raise MalformedHyperpath("some node has more than one outgoing edge")
    reached = set().union(*map(graph.tails.__getitem__, edges))
    reached.discard(graph.sink)
    reached.add(graph.root)
    if heads != reached:
        missing = sorted(reached - heads)
        if missing:
            raise MalformedHyperpath(f"node {graph.nodes[missing[0]]!r} has no outgoing edge")
        raise MalformedHyperpath("path contains edges unreachable from the root")


def decode(path: Hyperpath, graph: SegmentalHypergraph, validate: bool = True):
    if validate:
        check_hyperpath(path, graph)
    found = [mt for mt in map(graph.edge_mention.__getitem__, path.edges) if mt is not None]
    found.sort()
    return tuple(found)


def count_hyperpaths(graph: SegmentalHypergraph) -> int:
    count = [0] * graph.num_nodes
    count[graph.sink] = 1
    tails = graph.tails
    for v in graph.topo_order[1:]:
        total = 0
        for e in graph.out_edges[v]:
            prod = 1
            for t in tails[e]:
                prod *= count[t]
            total += prod
        count[v] = total
    return count[graph.root]


def closed_form_count(n: int, m: int, c: int) -> int:
    total = 1
    for i in range(n):
        total *= (2 ** min(c, n - i)) ** m
    return total


def gold_edge_indicator(gold, graph: SegmentalHypergraph) -> np.ndarray:
    ind = np.zeros(graph.num_edges, dtype=bool)
    ind[list(encode(gold, graph).edges)] = True
    return ind
