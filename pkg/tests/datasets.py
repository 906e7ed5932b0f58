"""Planted syngen configurations shared by unit and acceptance tests."""

import numpy as np

from genonet.graph import DirectedGraph
from genonet.latmin import LatencyGraph
from genonet.syngen import PREFERENTIAL, UNIFORM, GenParams, TopicProfile

# Per-topic delay shifts for the separated classification dataset.  On the
# attachment tree every LAT value is 1/(shift + g - 1) with a small
# geometric g, so classes are tight and well apart.
SEPARATED_SHIFTS = (30, 45, 68, 102, 153)
FLAT_SHIFTS = (60, 60, 60, 60, 60)


def classification_params(seed: int, shifts=SEPARATED_SHIFTS) -> GenParams:
    """5 topics x 20 hashtags, 300 users, LAT separated via delay shifts.

    The attachment tree gives every user exactly one followee, so the
    timeline count inside an adoption window is exactly the trigger's
    repeat stream and LAT is pinned to the topic's delay shift.
    """
    profiles = tuple(
        TopicProfile(
            latency_mean=(float(s), float(s)),
            latency_jitter=2.0,
            adoption_prob=(1.0, 1.0),
            repeat_rate=(1.0, 1.0),
            repeat_horizon=s + 25,
        )
        for s in shifts
    )
    return GenParams(
        n_users=300,
        seed=seed,
        graph_model=PREFERENTIAL,
        attach_count=1,
        n_topics=len(shifts),
        hashtags_per_topic=20,
        cascades_per_hashtag=8,
        topic_profiles=profiles,
    )


def time_separated_params(seed: int, n_topics: int = 3) -> GenParams:
    """Dense graph with enormous TIME separation between topics."""
    shifts = [10 * 30**i for i in range(n_topics)]
    profiles = tuple(
        TopicProfile(
            latency_mean=(float(s), float(s)),
            latency_jitter=2.0,
            adoption_prob=(1.0, 1.0),
            repeat_rate=(0.0, 0.0),
            repeat_horizon=0,
        )
        for s in shifts
    )
    return GenParams(
        n_users=60,
        seed=seed,
        graph_model=UNIFORM,
        edge_prob=0.15,
        n_topics=n_topics,
        hashtags_per_topic=8,
        cascades_per_hashtag=4,
        topic_profiles=profiles,
        cascade_gap=10_000_000,
    )


def activity_params(seed: int) -> GenParams:
    """Adoption driven by per-user topic engagement (criterion 5 substrate)."""
    profile = TopicProfile(
        latency_mean=(2.0, 40.0),
        latency_jitter=2.0,
        adoption_prob=(0.05, 0.95),
        repeat_rate=(0.0, 0.5),
        repeat_horizon=4,
        engagement_coupling=True,
    )
    return GenParams(
        n_users=120,
        seed=seed,
        graph_model=UNIFORM,
        edge_prob=0.12,
        n_topics=3,
        hashtags_per_topic=10,
        cascades_per_hashtag=2,
        topic_profiles=(profile,) * 3,
    )


def latency_benchmark(seed: int, n: int = 500) -> LatencyGraph:
    """Hub-dominated strongly connected graph with Pareto(1.5) latencies.

    Bidirectional superlinear preferential-attachment tree: a handful of
    hubs sit on most shortest paths, the regime where joint structural
    and latency information pays off.
    """
    rng = np.random.default_rng(seed)
    counts = np.zeros(n)
    edges = []
    for new in range(1, n):
        w = (counts[:new] + 1.0) ** 2
        c = int(rng.choice(new, p=w / w.sum()))
        edges.append((c, new))
        edges.append((new, c))
        counts[c] += 1
        counts[new] += 1
    lat = rng.pareto(1.5, n) + 1.0
    graph = DirectedGraph.from_edges(edges)
    return LatencyGraph(graph=graph, latency={i: float(lat[i]) for i in range(n)})
