"""Topic influence backbones and their comparison with the follower net.

A backbone keeps the follower edges (u, v) along which adoption
precedence occurred for the topic: the followee u first-used at least
one topic hashtag strictly before the follower v.  The edge weight is
the number of such hashtags.  The backbone graph contains exactly the
nodes incident to at least one backbone edge, so "isolated in the
influence network" is the same as absence from it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Mapping, Sequence

from .errors import DataError
from .graph import (
    DirectedGraph,
    jaccard_edge_similarity,
    kendall_tau,
    pagerank,
    strongly_connected_components,
    weakly_connected_components,
)
from .ingest import AdoptionIndex, FollowerNetwork, TopicMap

__all__ = [
    "InfluenceBackbone",
    "BackboneReport",
    "OverlapMatrix",
    "extract_backbone",
    "exclude_hashtag",
    "compare_with_follower",
    "cross_topic_overlap",
    "write_backbone_tsv",
]


@dataclass(frozen=True)
class InfluenceBackbone:
    topic: str
    graph: DirectedGraph
    weights: Mapping[tuple[str, str], int]

    def edge_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(self.weights)

    @property
    def node_count(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class BackboneReport:
    topic: str
    influence_edges: int
    follower_edges: int
    jaccard: float
    scc_fraction: Mapping[str, float]
    wcc_fraction: Mapping[str, float]
    kendall: Mapping[str, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scc_fraction"] = dict(self.scc_fraction)
        d["wcc_fraction"] = dict(self.wcc_fraction)
        # NaN is not valid JSON; degenerate rank correlations become null
        d["kendall"] = {
            k: (None if math.isnan(v) else v) for k, v in self.kendall.items()
        }
        return d


@dataclass(frozen=True)
class OverlapMatrix:
    topics: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]


def _extract(
    topic: str,
    hashtags: Sequence[str],
    index: AdoptionIndex,
    net: FollowerNetwork,
) -> InfluenceBackbone:
    first_use = index.first_use
    weights: dict[tuple[str, str], int] = {}
    for u, v in net.edges:
        count = 0
        for h in hashtags:
            tu = first_use.get((u, h))
            if tu is None:
                continue
            tv = first_use.get((v, h))
            if tv is not None and tu < tv:
                count += 1
        if count:
            weights[(u, v)] = count
    graph = DirectedGraph.from_edges((u, v, w) for (u, v), w in weights.items())
    return InfluenceBackbone(topic=topic, graph=graph, weights=weights)


def extract_backbone(
    topic: str,
    index: AdoptionIndex,
    net: FollowerNetwork,
    topics: TopicMap,
) -> InfluenceBackbone:
    """Backbone for one topic: precedence-carrying follower edges."""
    return _extract(topic, topics.hashtags_for(topic), index, net)


def extract_all_backbones(
    index: AdoptionIndex,
    net: FollowerNetwork,
    topics: TopicMap,
    workers: int = 1,
) -> dict[str, InfluenceBackbone]:
    """Per-topic extraction; topics are independent."""
    if workers > 1 and len(topics.topics) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(
                lambda t: extract_backbone(t, index, net, topics), topics.topics
            )
            return dict(zip(topics.topics, results))
    return {t: extract_backbone(t, index, net, topics) for t in topics.topics}


def exclude_hashtag(
    b: InfluenceBackbone,
    hashtag: str,
    index: AdoptionIndex,
    net: FollowerNetwork,
    topics: TopicMap,
) -> InfluenceBackbone:
    """Backbone recomputed over the topic's hashtags minus one.

    Weights drop accordingly and zero-weight edges disappear; equivalent
    to extracting from a topic map with the hashtag deleted.
    """
    if topics.topic_of(hashtag) != b.topic:
        raise DataError(f"hashtag {hashtag!r} is not in topic {b.topic!r}")
    remaining = [h for h in topics.hashtags_for(b.topic) if h != hashtag]
    return _extract(b.topic, remaining, index, net)


def _largest_fraction(components: list[frozenset], node_count: int) -> float:
    if node_count == 0:
        return 0.0
    return max(len(c) for c in components) / node_count


def compare_with_follower(b: InfluenceBackbone, net: FollowerNetwork) -> BackboneReport:
    """Compare a backbone with its follower counterpart.

    The counterpart keeps every follower edge whose both endpoints touch
    a backbone edge.  Rank correlations compare follower counts,
    followee counts and PageRank across the two graphs on the shared
    node set.
    """
    if not b.weights:
        raise DataError(f"backbone for {b.topic!r} is empty")
    touched = set(b.graph.nodes)
    follower_edges = [(u, v) for (u, v) in net.edges if u in touched and v in touched]
    follower_graph = DirectedGraph.from_edges(follower_edges, nodes=touched)

    influence_edge_set = b.edge_set()
    jac = jaccard_edge_similarity(influence_edge_set, follower_edges)

    scc = {
        "influence": _largest_fraction(
            strongly_connected_components(b.graph), b.graph.n
        ),
        "follower": _largest_fraction(
            strongly_connected_components(follower_graph), follower_graph.n
        ),
    }
    wcc = {
        "influence": _largest_fraction(
            weakly_connected_components(b.graph), b.graph.n
        ),
        "follower": _largest_fraction(
            weakly_connected_components(follower_graph), follower_graph.n
        ),
    }

    # edge (followee, follower): out-degree counts followers, in-degree followees
    inf_in = b.graph.in_degrees()
    fol_in = follower_graph.in_degrees()
    followers_inf = {n: float(b.graph.out_degree(n)) for n in b.graph.nodes}
    followers_fol = {n: float(follower_graph.out_degree(n)) for n in follower_graph.nodes}
    followees_inf = {n: float(inf_in[n]) for n in b.graph.nodes}
    followees_fol = {n: float(fol_in[n]) for n in follower_graph.nodes}
    kendall = {
        "followers": kendall_tau(followers_inf, followers_fol),
        "followees": kendall_tau(followees_inf, followees_fol),
        "pagerank": kendall_tau(pagerank(b.graph), pagerank(follower_graph)),
    }
    return BackboneReport(
        topic=b.topic,
        influence_edges=len(b.weights),
        follower_edges=len(follower_edges),
        jaccard=jac,
        scc_fraction=scc,
        wcc_fraction=wcc,
        kendall=kendall,
    )


def cross_topic_overlap(backbones: Sequence[InfluenceBackbone]) -> OverlapMatrix:
    """Pairwise Jaccard edge overlap; unit diagonal, empty-empty pairs 0."""
    if len(backbones) < 2:
        raise DataError("cross_topic_overlap needs at least 2 backbones")
    edge_sets = [b.edge_set() for b in backbones]
    rows = []
    for i, ei in enumerate(edge_sets):
        row = []
        for j, ej in enumerate(edge_sets):
            if i == j:
                row.append(1.0)
            elif not ei and not ej:
                row.append(0.0)
            else:
                row.append(jaccard_edge_similarity(ei, ej))
        rows.append(tuple(row))
    return OverlapMatrix(
        topics=tuple(b.topic for b in backbones), values=tuple(rows)
    )


def write_backbone_tsv(b: InfluenceBackbone, fh) -> None:
    fh.write("topic\tfollowee\tfollower\tweight\n")
    for (u, v) in sorted(b.weights):
        fh.write(f"{b.topic}\t{u}\t{v}\t{b.weights[(u, v)]}\n")
