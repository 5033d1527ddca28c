"""Exact inference over a weighted segmental hypergraph.

All message passing is done in the log domain with 64-bit floats.  The loops
are plain Python over the cached topology; each node has at most three
outgoing hyperedges, so one pass costs O(number of nodes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Hyperpath, NonFiniteScore
from .graph import SegmentalHypergraph

NEG_INF = float("-inf")


@dataclass
class EdgeScoreTable:
    """Per-edge feature scores ``phi`` and optional cost ``delta``.

    Spine edges always carry zero feature score; scorers never write them.
    """
    graph: SegmentalHypergraph
    phi: np.ndarray
    delta: Optional[np.ndarray] = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.shape != (self.graph.num_edges,):
            raise ValueError(f"phi has shape {self.phi.shape}, expected ({self.graph.num_edges},)")
        if self.delta is not None:
            self.delta = np.asarray(self.delta, dtype=np.float64)
            if self.delta.shape != self.phi.shape:
                raise ValueError("delta shape does not match phi")

    @property
    def psi(self) -> np.ndarray:
        return self.phi if self.delta is None else self.phi + self.delta

    def values(self, use_cost: bool) -> np.ndarray:
        scores = self.psi if use_cost else self.phi
        if not np.all(np.isfinite(scores)):
            bad = [repr(self.graph.edges[e]) for e in np.flatnonzero(~np.isfinite(scores))[:5]]
            raise NonFiniteScore(f"non-finite edge scores on {', '.join(bad)}")
        return scores


@dataclass
class InferenceResult:
    inside: np.ndarray
    outside: np.ndarray
    log_z: float
    edge_marginals: np.ndarray


def _logsumexp(vals):
    if len(vals) == 1:
        return vals[0]
    hi = max(vals)
    if hi == NEG_INF:
        return NEG_INF
    return hi + math.log(math.fsum(math.exp(v - hi) for v in vals))


def inside(graph: SegmentalHypergraph, scores: EdgeScoreTable, use_cost: bool = False):
    """Return ``(inside table, log Z)``."""
    psi = scores.values(use_cost).tolist()
    tails, out = graph.tails, graph.out_edges
    mu = [0.0] * graph.num_nodes
    for v in graph.topo_order[1:]:
        vals = []
        for e in out[v]:
            s = psi[e]
            for t in tails[e]:
                s += mu[t]
            vals.append(s)
        mu[v] = _logsumexp(vals)
    return np.array(mu), mu[graph.root]


def outside(graph: SegmentalHypergraph, scores: EdgeScoreTable, inside_table,
            use_cost: bool = False) -> np.ndarray:
    psi = scores.values(use_cost).tolist()
    mu = inside_table.tolist() if isinstance(inside_table, np.ndarray) else list(inside_table)
    tails, out = graph.tails, graph.out_edges
    # Collect every contribution to a node, then reduce once, to keep the sum stable.
    incoming = [[] for _ in range(graph.num_nodes)]
    alpha = [NEG_INF] * graph.num_nodes
    alpha[graph.root] = 0.0
    for v in reversed(graph.topo_order):
        if v != graph.root:
            alpha[v] = _logsumexp(incoming[v]) if incoming[v] else NEG_INF
        if alpha[v] == NEG_INF:
            continue
        for e in out[v]:
            tail = tails[e]
            base = alpha[v] + psi[e]
            for t in tail:
                s = base
                for u in tail:
                    if u != t:
                        s += mu[u]
                incoming[t].append(s)
    return np.array(alpha)


def marginals(graph: SegmentalHypergraph, scores: EdgeScoreTable,
              use_cost: bool = False) -> InferenceResult:
    beta, log_z = inside(graph, scores, use_cost)
    alpha = outside(graph, scores, beta, use_cost)
    psi = scores.values(use_cost)
    tail_sum = np.array([sum(beta[t] for t in tail) for tail in graph.tails])
    logm = alpha[graph.head] + psi + tail_sum - log_z
    return InferenceResult(beta, alpha, log_z, np.exp(logm))


def map_decode(graph: SegmentalHypergraph, scores: EdgeScoreTable):
    """Max-sum decoding on feature scores alone.

    Ties go to the earliest edge in each node's priority order
    (TX before TI; IEnd before IContinue before IBoth).
    """
    phi = scores.values(False).tolist()
    tails, out = graph.tails, graph.out_edges
    best = [0.0] * graph.num_nodes
    back = [-1] * graph.num_nodes
    for v in graph.topo_order[1:]:
        top, arg = NEG_INF, -1
        for e in out[v]:
            s = phi[e]
            for t in tails[e]:
                s += best[t]
            if s > top:
                top, arg = s, e
        best[v], back[v] = top, arg
    chosen = []
    stack = [graph.root]
    while stack:
        v = stack.pop()
        if v == graph.sink:
            continue
        e = back[v]
        chosen.append(e)
        stack.extend(t for t in tails[e] if t != graph.sink)
    return Hyperpath(frozenset(chosen)), best[graph.root]
