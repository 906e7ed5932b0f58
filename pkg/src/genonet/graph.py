"""Directed-graph kernel: connectivity, centralities, rank statistics.

All operations are pure functions over an immutable :class:`DirectedGraph`.
Node identifiers must be mutually orderable (all str or all int); node
order inside a graph is the sorted identifier order, which fixes every
tie-break downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection, Hashable, Iterable, Mapping

from scipy.stats import kendalltau as _scipy_kendalltau

from .errors import DataError

Node = Hashable

__all__ = [
    "DirectedGraph",
    "strongly_connected_components",
    "weakly_connected_components",
    "pagerank",
    "betweenness_centrality",
    "kendall_tau",
    "jaccard_edge_similarity",
]


@dataclass(frozen=True)
class DirectedGraph:
    """Adjacency-list digraph with non-negative edge weights."""

    nodes: tuple[Node, ...]
    _index: dict[Node, int] = field(repr=False)
    _adj: tuple[tuple[tuple[int, float], ...], ...] = field(repr=False)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple],
        nodes: Iterable[Node] = (),
    ) -> "DirectedGraph":
        """Build from (u, v) or (u, v, weight) tuples plus extra nodes.

        Unweighted edges get weight 1.0.  Duplicate (u, v) pairs and
        negative weights are rejected.
        """
        edge_list: list[tuple[Node, Node, float]] = []
        node_set: set[Node] = set(nodes)
        seen: set[tuple[Node, Node]] = set()
        for e in edges:
            if len(e) == 2:
                u, v = e
                w = 1.0
            else:
                u, v, w = e
            if (u, v) in seen:
                raise DataError(f"duplicate edge ({u!r}, {v!r})")
            if w < 0:
                raise DataError(f"negative weight on ({u!r}, {v!r})")
            seen.add((u, v))
            edge_list.append((u, v, float(w)))
            node_set.add(u)
            node_set.add(v)
        order = tuple(sorted(node_set))
        index = {n: i for i, n in enumerate(order)}
        adj: list[list[tuple[int, float]]] = [[] for _ in order]
        for u, v, w in edge_list:
            adj[index[u]].append((index[v], w))
        for lst in adj:
            lst.sort()
        return cls(nodes=order, _index=index, _adj=tuple(tuple(a) for a in adj))

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index_of(self, node: Node) -> int:
        return self._index[node]

    def __contains__(self, node: Node) -> bool:
        return node in self._index

    def out_neighbors(self, node: Node) -> tuple[tuple[Node, float], ...]:
        i = self._index[node]
        return tuple((self.nodes[j], w) for j, w in self._adj[i])

    def adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        """Index-based adjacency, aligned with ``nodes``."""
        return self._adj

    def has_edge(self, u: Node, v: Node) -> bool:
        iu = self._index.get(u)
        iv = self._index.get(v)
        if iu is None or iv is None:
            return False
        return any(j == iv for j, _ in self._adj[iu])

    def edge_set(self) -> frozenset[tuple[Node, Node]]:
        return frozenset(
            (self.nodes[i], self.nodes[j])
            for i, row in enumerate(self._adj)
            for j, _ in row
        )

    def edge_weights(self) -> dict[tuple[Node, Node], float]:
        return {
            (self.nodes[i], self.nodes[j]): w
            for i, row in enumerate(self._adj)
            for j, w in row
        }

    def out_degree(self, node: Node) -> int:
        return len(self._adj[self._index[node]])

    def in_degrees(self) -> dict[Node, int]:
        counts = [0] * self.n
        for row in self._adj:
            for j, _ in row:
                counts[j] += 1
        return {self.nodes[i]: c for i, c in enumerate(counts)}


def strongly_connected_components(g: DirectedGraph) -> list[frozenset]:
    """Tarjan's algorithm, iterative.  Components sorted by their members."""
    n = g.n
    adj = g.adjacency()
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[frozenset] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            v, ei = work[-1]
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while ei < len(adj[v]):
                w = adj[v][ei][0]
                ei += 1
                if index[w] == -1:
                    work[-1] = (v, ei)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(g.nodes[w])
                    if w == v:
                        break
                components.append(frozenset(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    components.sort(key=lambda c: sorted(c))
    return components


def weakly_connected_components(g: DirectedGraph) -> list[frozenset]:
    """Connected components ignoring edge direction."""
    n = g.n
    undirected: list[list[int]] = [[] for _ in range(n)]
    for i, row in enumerate(g.adjacency()):
        for j, _ in row:
            undirected[i].append(j)
            undirected[j].append(i)
    seen = [False] * n
    components: list[frozenset] = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        frontier = [start]
        while frontier:
            v = frontier.pop()
            for w in undirected[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    frontier.append(w)
        components.append(frozenset(g.nodes[i] for i in comp))
    components.sort(key=lambda c: sorted(c))
    return components


def pagerank(
    g: DirectedGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> dict[Node, float]:
    """Power iteration on the unweighted structure.

    Dangling mass is redistributed uniformly; iteration stops when the
    L1 change drops below ``tol``.  Scores sum to 1.
    """
    if g.n == 0:
        raise DataError("pagerank undefined on an empty graph")
    if not (0.0 < damping < 1.0):
        raise DataError(f"damping must be in (0, 1), got {damping}")
    if tol <= 0:
        raise DataError("tol must be positive")
    n = g.n
    adj = g.adjacency()
    out_deg = [len(row) for row in adj]
    scores = [1.0 / n] * n
    for _ in range(max_iter):
        nxt = [0.0] * n
        dangling = 0.0
        for i, row in enumerate(adj):
            if not row:
                dangling += scores[i]
                continue
            share = scores[i] / out_deg[i]
            for j, _ in row:
                nxt[j] += share
        base = (1.0 - damping) / n + damping * dangling / n
        nxt = [base + damping * x for x in nxt]
        delta = sum(abs(a - b) for a, b in zip(nxt, scores))
        scores = nxt
        if delta < tol:
            break
    return {g.nodes[i]: s for i, s in enumerate(scores)}


def betweenness_centrality(g: DirectedGraph) -> dict[Node, float]:
    """Exact directed betweenness on hop-count shortest paths.

    Brandes accumulation; endpoints excluded, no normalization, edge
    weights ignored.
    """
    n = g.n
    adj = g.adjacency()
    bc = [0.0] * n
    for s in range(n):
        sigma = [0.0] * n
        dist = [-1] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma[s] = 1.0
        dist[s] = 0
        queue = [s]
        order: list[int] = []
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            order.append(v)
            for w, _ in adj[v]:
                if dist[w] == -1:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return {g.nodes[i]: b for i, b in enumerate(bc)}


def kendall_tau(a: Mapping[Node, float], b: Mapping[Node, float]) -> float:
    """Tie-corrected Kendall tau-b between two score maps.

    Both maps must cover the same node set of size >= 2.  Returns NaN
    when either side is entirely tied (tau-b undefined).
    """
    if set(a) != set(b):
        raise DataError("rank vectors cover different node sets")
    if len(a) < 2:
        raise DataError("kendall_tau needs at least 2 nodes")
    keys = sorted(a)
    xs = [float(a[k]) for k in keys]
    ys = [float(b[k]) for k in keys]
    return float(_scipy_kendalltau(xs, ys, variant="b").statistic)


def jaccard_edge_similarity(e1: Collection, e2: Collection) -> float:
    """|E1 ∩ E2| / |E1 ∪ E2| over edge sets."""
    s1, s2 = set(e1), set(e2)
    if not s1 and not s2:
        raise DataError("jaccard undefined for two empty edge sets")
    return len(s1 & s2) / len(s1 | s2)
