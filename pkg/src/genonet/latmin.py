"""Node-weighted latency computations and target selection heuristics.

Traversal cost lives on nodes: a path pays the latency of every node it
leaves, never the destination's.  Equivalently each edge (u, v) carries
weight latency(u), and pair latency is the Dijkstra minimum under that
transform.  Targeting a node sets its latency to 0, which can only
shrink pair latencies.

Selecting k targets that minimize the average pair latency is NP-hard,
so three heuristics are provided (descending latency, descending
betweenness, greedy marginal improvement) next to an exact enumerator
for small instances.
"""

from __future__ import annotations

import heapq
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .graph import DirectedGraph, betweenness_centrality, strongly_connected_components

__all__ = [
    "LatencyGraph",
    "Heuristic",
    "MinimizationTrace",
    "path_latency",
    "pair_latency",
    "average_network_latency",
    "count_reachable_pairs",
    "minimize",
    "exact_k_latmin",
    "write_trace_tsv",
    "UNREACHABLE",
]

UNREACHABLE = math.inf
ENUMERATION_BUDGET = 10**6


class Heuristic(Enum):
    MAX_LAT = "MaxLat"
    MAX_BC = "MaxBC"
    GREEDY = "Greedy"

    @classmethod
    def from_tag(cls, tag: str) -> "Heuristic":
        for h in cls:
            if h.value.lower() == tag.strip().lower():
                return h
        valid = ", ".join(h.value for h in cls)
        raise DataError(f"unknown heuristic {tag!r}; valid: {valid}")


@dataclass(frozen=True)
class LatencyGraph:
    graph: DirectedGraph
    latency: Mapping[object, float]
    targeted: frozenset = frozenset()

    def __post_init__(self):
        for node in self.graph.nodes:
            lat = self.latency.get(node)
            if lat is None:
                raise DataError(f"node {node!r} has no latency")
            if lat < 0:
                raise DataError(f"negative latency on {node!r}")
        for node in self.targeted:
            if self.latency[node] != 0:
                raise DataError(f"targeted node {node!r} has nonzero latency")

    def with_zeroed(self, nodes) -> "LatencyGraph":
        nodes = frozenset(nodes)
        latency = {n: (0.0 if n in nodes else v) for n, v in self.latency.items()}
        return LatencyGraph(
            graph=self.graph, latency=latency, targeted=self.targeted | nodes
        )


@dataclass(frozen=True)
class MinimizationTrace:
    heuristic: Heuristic
    selected: tuple
    relative: tuple[float, ...]  # average latency after each pick / original

    @property
    def final_relative(self) -> float:
        return self.relative[-1] if self.relative else 1.0


def path_latency(g: LatencyGraph, path: Sequence) -> float:
    """Sum of latencies along a path, destination excluded."""
    for a, b in zip(path, path[1:]):
        if not g.graph.has_edge(a, b):
            raise DataError(f"no edge ({a!r}, {b!r}) on path")
    return float(sum(g.latency[n] for n in path[:-1]))


def _single_source(g: LatencyGraph, source_idx: int) -> list[float]:
    """Dijkstra over w(u -> v) = latency(u); returns distances by node index."""
    nodes = g.graph.nodes
    adj = g.graph.adjacency()
    lat = [g.latency[n] for n in nodes]
    dist = [math.inf] * len(nodes)
    dist[source_idx] = 0.0
    heap = [(0.0, source_idx)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        step = d + lat[u]
        for v, _w in adj[u]:
            if step < dist[v]:
                dist[v] = step
                heapq.heappush(heap, (step, v))
    return dist


def pair_latency(g: LatencyGraph, s, t) -> float:
    """Minimum latency over all directed s -> t paths; inf if unreachable."""
    if s == t:
        raise DataError("pair latency needs distinct endpoints")
    dist = _single_source(g, g.graph.index_of(s))
    return dist[g.graph.index_of(t)]


def _apsp_matrix(g: LatencyGraph) -> np.ndarray:
    n = g.graph.n
    d = np.empty((n, n))
    for i in range(n):
        d[i] = _single_source(g, i)
    np.fill_diagonal(d, 0.0)
    return d


def _masked_mean(d: np.ndarray, mask: np.ndarray) -> float:
    return float(d[mask].mean())


def _offdiag_finite_mask(d: np.ndarray) -> np.ndarray:
    mask = np.isfinite(d)
    np.fill_diagonal(mask, False)
    return mask


def average_network_latency(g: LatencyGraph, strict: bool = True) -> float:
    """Mean pair latency over ordered pairs s != t.

    Strict mode requires a strongly connected graph; permissive mode
    averages over the reachable pairs only (see
    :func:`count_reachable_pairs` for the denominator).
    """
    n = g.graph.n
    if n < 2:
        raise DataError("average latency needs at least 2 nodes")
    if strict:
        comps = strongly_connected_components(g.graph)
        if len(comps) != 1:
            raise DataError(
                f"graph is not strongly connected ({len(comps)} components); "
                "use permissive mode to average over reachable pairs"
            )
    d = _apsp_matrix(g)
    mask = _offdiag_finite_mask(d)
    if not mask.any():
        raise DataError("no reachable ordered pairs")
    return _masked_mean(d, mask)


def count_reachable_pairs(g: LatencyGraph) -> int:
    """Ordered pairs s != t with a directed s -> t path."""
    return int(_offdiag_finite_mask(_apsp_matrix(g)).sum())


def _zero_update(d: np.ndarray, idx: int, lat: float) -> np.ndarray:
    """Exact APSP after zeroing one node's latency.

    Any path improved by the zeroing leaves the node at some point, so
    d'(s, t) = min(d(s, t), d(s, c) + d(c, t) - latency(c)).  Distances
    INTO the node never pay its latency and stay as they were.
    """
    detour = d[:, idx, None] + (d[None, idx, :] - lat)
    out = np.minimum(d, detour)
    out[:, idx] = d[:, idx]
    np.fill_diagonal(out, 0.0)
    return out


def _candidate_average(
    d: np.ndarray,
    idx: int,
    lat: float,
    mask: np.ndarray,
    denom: float,
    all_finite: bool,
) -> float:
    out = _zero_update(d, idx, lat)
    # fully reachable case: diagonal zeros contribute nothing to the sum
    total = out.sum() if all_finite else out[mask].sum()
    return float(total / denom)


def minimize(
    g: LatencyGraph,
    k: int,
    heuristic: Heuristic,
    strict: bool = True,
    workers: int = 1,
) -> MinimizationTrace:
    """Select k nodes to zero and trace the relative average latency.

    MaxLat and MaxBC fix their full ordering up front; Greedy re-scores
    every remaining candidate at each step.  All ties break on the node
    identifier.  The trace is relative to the original average, which
    must be positive.
    """
    if k <= 0:
        raise DataError(f"k must be positive, got {k}")
    n = g.graph.n
    if k > n:
        raise DataError(f"k={k} exceeds node count {n}")
    if strict:
        comps = strongly_connected_components(g.graph)
        if len(comps) != 1:
            raise DataError("graph is not strongly connected; use permissive mode")
    d = _apsp_matrix(g)
    mask = _offdiag_finite_mask(d)
    if not mask.any():
        raise DataError("no reachable ordered pairs")
    denom = float(mask.sum())
    all_finite = int(denom) == n * (n - 1)
    base_avg = float(d[mask].sum() / denom)
    if base_avg == 0:
        raise DataError("original average latency is zero; relative trace undefined")

    nodes = g.graph.nodes
    lat = np.array([g.latency[nd] for nd in nodes], dtype=float)

    order: list[int] | None = None
    if heuristic is Heuristic.MAX_LAT:
        order = sorted(range(n), key=lambda i: (-lat[i], nodes[i]))[:k]
    elif heuristic is Heuristic.MAX_BC:
        bc = betweenness_centrality(g.graph)
        order = sorted(range(n), key=lambda i: (-bc[nodes[i]], nodes[i]))[:k]

    selected: list = []
    relative: list[float] = []
    remaining = list(range(n))
    for step in range(k):
        if order is not None:
            pick = order[step]
        else:
            def score(i: int) -> tuple[float, object]:
                return (
                    _candidate_average(d, i, lat[i], mask, denom, all_finite),
                    nodes[i],
                )

            if workers > 1 and len(remaining) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    scored = list(pool.map(score, remaining))
            else:
                scored = [score(i) for i in remaining]
            best = min(scored)
            pick = g.graph.index_of(best[1])
        d = _zero_update(d, pick, float(lat[pick]))
        lat[pick] = 0.0
        remaining.remove(pick)
        selected.append(nodes[pick])
        relative.append(float(d[mask].sum() / denom) / base_avg)
    return MinimizationTrace(
        heuristic=heuristic, selected=tuple(selected), relative=tuple(relative)
    )


def exact_k_latmin(g: LatencyGraph, k: int) -> tuple[frozenset, float]:
    """Exhaustive optimum over all k-subsets of nodes.

    Ties resolve to the lexicographically first subset.  Refuses
    instances with more than 10^6 subsets.
    """
    if k <= 0:
        raise DataError(f"k must be positive, got {k}")
    n = g.graph.n
    if k > n:
        raise DataError(f"k={k} exceeds node count {n}")
    total = math.comb(n, k)
    if total > ENUMERATION_BUDGET:
        raise DataError(
            f"C({n},{k}) = {total} subsets exceeds the enumeration budget "
            f"of {ENUMERATION_BUDGET}"
        )
    d0 = _apsp_matrix(g)
    mask = _offdiag_finite_mask(d0)
    if not mask.any():
        raise DataError("no reachable ordered pairs")
    denom = float(mask.sum())
    lat = {node: float(g.latency[node]) for node in g.graph.nodes}

    best_set: tuple | None = None
    best_value = math.inf
    for subset in itertools.combinations(sorted(g.graph.nodes), k):
        d = d0
        for node in subset:
            d = _zero_update(d, g.graph.index_of(node), lat[node])
        value = float(d[mask].sum() / denom)
        if value < best_value:
            best_value = value
            best_set = subset
    return frozenset(best_set), best_value


def write_trace_tsv(traces: Sequence[MinimizationTrace], fh) -> None:
    fh.write("heuristic\tstep\tnode\trelative_avg_latency\n")
    for trace in traces:
        for step, (node, rel) in enumerate(zip(trace.selected, trace.relative), 1):
            fh.write(f"{trace.heuristic.value}\t{step}\t{node}\t{rel!r}\n")
