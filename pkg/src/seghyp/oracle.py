"""Brute-force ground truth for small hypergraphs.

Two enumerators are provided.  The factored one uses the fact that the spine
is forced, so a hyperpath is exactly one independent choice of chain per
(type, start) pair; it scales to about 10^6 paths.  The walk enumerator makes
no such assumption and recursively picks one outgoing edge per reached node;
it is only used to cross-check the factored one on tiny graphs.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (
    Edge, Hyperpath, I_BOTH, I_CONTINUE, I_END, Mention, SegHypError, SPINE_A, SPINE_E,
    TI, TX, inside_cap,
)
from .graph import (
    SegmentalHypergraph, build, closed_form_count, count_hyperpaths, decode, encode,
)
from .inference import EdgeScoreTable, map_decode, marginals

DEFAULT_PATH_LIMIT = 10 ** 6


class TooManyPaths(SegHypError):
    pass


def _decision_key(ends, i):
    if not ends:
        return (0,)
    last = max(ends)
    key = [1]
    for j in range(i, last):
        key.append(2 if j in ends else 1)
    key.append(0)
    return tuple(key)


def chain_choices(graph: SegmentalHypergraph, k: int, i: int):
    """All chain options for (k, i) as ``(ends, edge indices)``, in tie-break order."""
    ei = graph.edge_index
    positions = range(i, inside_cap(i, graph.n, graph.c) + 1)
    subsets = []
    for r in range(len(positions) + 1):
        subsets.extend(frozenset(s) for s in itertools.combinations(positions, r))
    subsets.sort(key=lambda s: _decision_key(s, i))
    choices = []
    for ends in subsets:
        if not ends:
            choices.append((ends, (ei[Edge(TX, k, i)],)))
            continue
        last = max(ends)
        edges = [ei[Edge(TI, k, i)]]
        for j in range(i, last):
            edges.append(ei[Edge(I_BOTH if j in ends else I_CONTINUE, k, i, j)])
        edges.append(ei[Edge(I_END, k, i, last)])
        choices.append((ends, tuple(edges)))
    return choices


class FactoredEnumeration:
    """Every hyperpath of ``graph`` as a row of per-chain choice indices."""

    def __init__(self, graph: SegmentalHypergraph, limit: int = DEFAULT_PATH_LIMIT):
        self.graph = graph
        self.count = closed_form_count(graph.n, graph.m, graph.c)
        if self.count > limit:
            raise TooManyPaths(f"{self.count} hyperpaths exceed the limit of {limit}")
        ei = graph.edge_index
        self.spine = tuple(ei[Edge(kind, -1, i)] for i in range(graph.n) for kind in (SPINE_A, SPINE_E))
        self.chains = [(k, i) for k in range(graph.m) for i in range(graph.n)]
        self.choices = [chain_choices(graph, k, i) for k, i in self.chains]
        self._table = None

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            sizes = [len(ch) for ch in self.choices]
            grid = np.indices(sizes, dtype=np.int16 if max(sizes) < 2 ** 15 else np.int32)
            self._table = grid.reshape(len(sizes), -1).T
        return self._table

    def path(self, row) -> Hyperpath:
        edges = list(self.spine)
        for ch, pick in enumerate(row):
            edges.extend(self.choices[ch][int(pick)][1])
        return Hyperpath(frozenset(edges))

    def __iter__(self):
        spine = frozenset(self.spine)
        sets = [[frozenset(edges) for _, edges in ch] for ch in self.choices]
        for combo in itertools.product(*sets):
            yield Hyperpath(spine.union(*combo))

    def __len__(self):
        return self.count

    def path_scores(self, psi: np.ndarray) -> np.ndarray:
        """Score of every path: the sum of psi over its edges, grouped by chain."""
        table = self.table
        total = np.full(len(table), float(sum(psi[e] for e in self.spine)))
        for ch, options in enumerate(self.choices):
            chain_score = np.array([math.fsum(psi[e] for e in edges) for _, edges in options])
            total += chain_score[table[:, ch]]
        return total


def enumerate_hyperpaths(graph: SegmentalHypergraph, limit: int = DEFAULT_PATH_LIMIT) -> list:
    return list(FactoredEnumeration(graph, limit))


def walk_hyperpaths(graph: SegmentalHypergraph):
    """Enumerate hyperpaths by recursively choosing an outgoing edge for each pending node."""
    def expand(pending, chosen):
        if not pending:
            yield Hyperpath(frozenset(chosen))
            return
        v, rest = pending[0], pending[1:]
        if v == graph.sink:
            yield from expand(rest, chosen)
            return
        for e in graph.out_edges[v]:
            new = [t for t in graph.tails[e] if t != graph.sink]
            yield from expand(rest + tuple(new), chosen + (e,))
    yield from expand((graph.root,), ())


def _logsumexp(values: np.ndarray) -> float:
    hi = values.max()
    return float(hi + np.log(np.sum(np.exp(values - hi))))


def brute_log_z(graph, scores: EdgeScoreTable, use_cost: bool = False, enum=None) -> float:
    enum = enum or FactoredEnumeration(graph)
    return _logsumexp(enum.path_scores(scores.values(use_cost)))


def brute_marginals(graph, scores: EdgeScoreTable, use_cost: bool = False, enum=None) -> np.ndarray:
    enum = enum or FactoredEnumeration(graph)
    path_scores = enum.path_scores(scores.values(use_cost))
    probs = np.exp(path_scores - _logsumexp(path_scores))
    out = np.zeros(graph.num_edges)
    out[list(enum.spine)] = probs.sum()
    for ch, options in enumerate(enum.choices):
        mass = np.bincount(enum.table[:, ch], weights=probs, minlength=len(options))
        for pick, (_, edges) in enumerate(options):
            out[list(edges)] += mass[pick]
    return out


def brute_map(graph, scores: EdgeScoreTable, enum=None):
    """Best path by summed phi; ties go to the first path in tie-break order."""
    enum = enum or FactoredEnumeration(graph)
    path_scores = enum.path_scores(scores.values(False))
    best = int(np.argmax(path_scores))
    return enum.path(enum.table[best]), float(path_scores[best])


def explicit_log_z(paths, scores: EdgeScoreTable, use_cost: bool = False) -> float:
    """log-sum-exp over an explicit list of hyperpaths."""
    psi = scores.values(use_cost)
    return _logsumexp(np.array([math.fsum(psi[e] for e in p.edges) for p in paths]))


def random_scores(graph: SegmentalHypergraph, rng, low=-3.0, high=3.0) -> np.ndarray:
    phi = rng.uniform(low, high, graph.num_edges)
    phi[graph.is_spine] = 0.0
    return phi


def random_mentions(graph: SegmentalHypergraph, rng, p: float = 0.3):
    picks = [Mention(i, j, k) for k in range(graph.m) for i, j in graph.spans]
    return tuple(mt for mt in picks if rng.random() < p)


@dataclass
class EnumerationReport:
    n: int
    m: int
    c: int
    hyperpath_count: int = 0
    semiring_count: int = 0
    distinct_decoded_sets: int = 0
    combination_count: int = 0
    bijection_holds: bool = False
    roundtrip_holds: bool = False
    walk_agrees: bool | None = None
    max_abs_log_z_error: float = 0.0
    max_rel_log_z_error: float = 0.0
    max_marginal_error: float = 0.0
    map_agrees: bool = True
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


VERIFY_PATH_LIMIT = 2 ** 21


def verify_cell(n: int, m: int, c: int, seeds: int = 10,
                log_z_tol: float = 1e-8, marginal_tol: float = 1e-10) -> EnumerationReport:
    from .training import build_cost

    start = time.perf_counter()
    graph = build(n, m, c)
    rep = EnumerationReport(n, m, c)
    enum = FactoredEnumeration(graph, VERIFY_PATH_LIMIT)
    rep.combination_count = closed_form_count(n, m, c)
    rep.semiring_count = count_hyperpaths(graph)

    candidates = [Mention(i, j, k) for k in range(m) for i, j in graph.spans]
    bit = {mt: 1 << idx for idx, mt in enumerate(candidates)}
    decoded = set()
    roundtrip = True
    count = 0
    for path in enum:
        count += 1
        mentions = decode(path, graph)
        key = 0
        for mt in mentions:
            key |= bit[mt]
        decoded.add(key)
        # encode(decode(p)) == p on every path also gives decode(encode(s)) == s on every
        # decoded set s, and the decoded sets are all combinations once the bijection holds.
        if encode(mentions, graph) != path:
            roundtrip = False
    rep.hyperpath_count = count
    rep.distinct_decoded_sets = len(decoded)
    # Every decoded set is a subset of the candidates, so distinctness plus the count
    # 2**len(candidates) means the decoded sets are exactly all mention combinations.
    all_subsets = 2 ** len(candidates)
    rep.bijection_holds = (count == rep.distinct_decoded_sets == rep.combination_count
                           == rep.semiring_count == all_subsets)
    rep.roundtrip_holds = roundtrip
    if not rep.bijection_holds:
        rep.failures.append("bijection")
    if not roundtrip:
        rep.failures.append("roundtrip")

    if n <= 3:
        walked = set(walk_hyperpaths(graph))
        rep.walk_agrees = walked == set(enum) and len(walked) == count
        if not rep.walk_agrees:
            rep.failures.append("walk enumeration")

    for seed in range(seeds):
        rng = np.random.default_rng([seed, n, m, c])
        gold = random_mentions(graph, rng)
        beta = float(rng.choice([1.0, 1.5, 2.0, 2.5, 3.0]))
        table = EdgeScoreTable(graph, random_scores(graph, rng), build_cost(gold, graph, beta))
        for use_cost in (False, True):
            res = marginals(graph, table, use_cost)
            ref = brute_log_z(graph, table, use_cost, enum)
            err = abs(res.log_z - ref)
            rep.max_abs_log_z_error = max(rep.max_abs_log_z_error, err)
            rep.max_rel_log_z_error = max(rep.max_rel_log_z_error, err / max(abs(ref), 1.0))
            merr = float(np.max(np.abs(res.edge_marginals - brute_marginals(graph, table, use_cost, enum))))
            rep.max_marginal_error = max(rep.max_marginal_error, merr)

        noisy = EdgeScoreTable(graph, table.phi + np.where(graph.is_spine, 0.0, rng.uniform(0, 1e-6, graph.num_edges)))
        path, score = map_decode(graph, noisy)
        scores = enum.path_scores(noisy.phi)
        best = int(np.argmax(scores))
        unique = np.sum(scores == scores[best]) == 1
        if not unique or path != enum.path(enum.table[best]) or abs(score - scores[best]) > 1e-9:
            rep.map_agrees = False

    zero = EdgeScoreTable(graph, np.zeros(graph.num_edges))
    if map_decode(graph, zero)[0] != brute_map(graph, zero, enum)[0]:
        rep.map_agrees = False

    if rep.max_rel_log_z_error >= log_z_tol:
        rep.failures.append("log Z")
    if rep.max_marginal_error >= marginal_tol:
        rep.failures.append("marginals")
    if not rep.map_agrees:
        rep.failures.append("MAP")
    rep.seconds = time.perf_counter() - start
    return rep


def grid(max_n: int = 4, max_m: int = 2, caps=(2, None)):
    """Grid cells (n, m, c); a cap of ``None`` means c = n, and caps are clamped to n."""
    cells = []
    for n in range(1, max_n + 1):
        for m in range(1, max_m + 1):
            for c in sorted({n if cap is None else min(cap, n) for cap in caps}):
                cells.append((n, m, c))
    return cells


@dataclass
class VerifyReport:
    cells: list
    seconds: float

    @property
    def ok(self) -> bool:
        return all(cell.ok for cell in self.cells)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "seconds": self.seconds,
            "max_rel_log_z_error": max(c.max_rel_log_z_error for c in self.cells),
            "max_marginal_error": max(c.max_marginal_error for c in self.cells),
            "cells": [dict(asdict(c), ok=c.ok) for c in self.cells],
        }


def verify(max_n: int = 4, max_m: int = 2, caps=(2, None), seeds: int = 10, workers: int = 1) -> VerifyReport:
    start = time.perf_counter()
    cells = grid(max_n, max_m, caps)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            reports = list(pool.map(verify_cell, *zip(*cells), [seeds] * len(cells)))
    else:
        reports = [verify_cell(n, m, c, seeds) for n, m, c in cells]
    return VerifyReport(reports, time.perf_counter() - start)
