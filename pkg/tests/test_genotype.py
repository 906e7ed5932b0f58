import math

import numpy as np
import pytest

from genonet.errors import DataError
from genonet.genotype import (
    MetricKind,
    build_genome,
    compute_metric,
    hashtag_mean_lats,
    node_topic_latency,
)
from genonet.ingest import build_adoption_index, load_events, load_follower_edges, load_topic_map

import oracles


def metric(toy, kind, user="B", hashtag="x", **kw):
    net, events, topics, index = toy
    return compute_metric(kind, user, hashtag, events, index, net, topics, **kw)


def test_time_toy(toy):
    assert metric(toy, MetricKind.TIME) == 10.0


def test_n_uses_toy(toy):
    assert metric(toy, MetricKind.N_USES) == 2.0


def test_n_par_f_par_toy(toy):
    assert metric(toy, MetricKind.N_PAR) == 2.0
    assert metric(toy, MetricKind.F_PAR) == 1.0


def test_lat_toy(toy):
    # posts by B's followees with topic-T hashtags strictly inside (10, 20):
    # (C,x,12) and (C,y,14)
    assert metric(toy, MetricKind.LAT) == 0.5


def test_log_lat_toy(toy):
    assert metric(toy, MetricKind.LOG_LAT, hashtag_mean_lat=0.5) == 0.0


def test_log_lat_requires_positive_mean(toy):
    with pytest.raises(DataError):
        metric(toy, MetricKind.LOG_LAT, hashtag_mean_lat=0.0)
    with pytest.raises(DataError):
        metric(toy, MetricKind.LOG_LAT)


def test_originator_metrics_undefined(toy):
    # A was never exposed before first use: reaction metrics excluded
    for kind in (MetricKind.TIME, MetricKind.N_PAR, MetricKind.F_PAR, MetricKind.LAT):
        assert metric(toy, kind, user="A") is None
    assert metric(toy, MetricKind.N_USES, user="A") == 1.0


def test_unknown_pair_rejected(toy):
    with pytest.raises(DataError):
        metric(toy, MetricKind.TIME, user="A", hashtag="y")


def test_simultaneous_adoption_is_not_exposure():
    net = load_follower_edges(["A\tB"])
    events = load_events(["10\tA\t#x", "10\tB\t#x"])
    topics = load_topic_map(["x\tT"])
    index = build_adoption_index(events, net)
    assert compute_metric(MetricKind.TIME, "B", "x", events, index, net, topics) is None


def test_build_genome_toy(toy):
    net, events, topics, index = toy
    genome = build_genome(events, index, net, topics)
    assert set(genome.genotypes) == {"A", "B", "C"}
    assert genome["B"].values("T", MetricKind.N_USES) == (2.0,)
    assert genome["A"].values("T", MetricKind.TIME) == ()
    cell = genome["B"].cell("T", MetricKind.TIME)
    assert cell.mean == 10.0 and cell.count == 1


def test_build_genome_empty_log():
    net = load_follower_edges(["A\tB"])
    events = load_events([])
    topics = load_topic_map(["x\tT"])
    genome = build_genome(events, build_adoption_index(events, net), net, topics)
    assert genome.genotypes == {}


def test_node_topic_latency(toy):
    net, events, topics, index = toy
    genome = build_genome(events, index, net, topics)
    assert node_topic_latency(genome, "T") == {"B": 10.0}
    assert node_topic_latency(genome, "other_topic") == {}


def test_mean_of_multiset():
    net = load_follower_edges(["A\tB"])
    events = load_events(["0\tA\t#x", "0\tA\t#y", "4\tB\t#x", "6\tB\t#y"])
    topics = load_topic_map(["x\tT", "y\tT"])
    index = build_adoption_index(events, net)
    genome = build_genome(events, index, net, topics)
    cell = genome["B"].cell("T", MetricKind.TIME)
    assert sorted(cell.values) == [4.0, 6.0]
    assert cell.mean == 5.0
    assert node_topic_latency(genome, "T")["B"] == 5.0


def _random_setup(rng, **kw):
    edge_lines, event_lines, topic_lines = oracles.random_log(rng, **kw)
    net = load_follower_edges(edge_lines)
    events = load_events(event_lines)
    topics = load_topic_map(topic_lines)
    index = build_adoption_index(events, net)
    return net, events, topics, index


def test_metric_invariants_random():
    rng = np.random.default_rng(11)
    for _ in range(8):
        net, events, topics, index = _random_setup(rng, n_users=18, n_lines=150)
        for (u, h) in index.first_use:
            if topics.topic_of(h) is None:
                continue
            t = compute_metric(MetricKind.TIME, u, h, events, index, net, topics)
            npar = compute_metric(MetricKind.N_PAR, u, h, events, index, net, topics)
            fpar = compute_metric(MetricKind.F_PAR, u, h, events, index, net, topics)
            lat = compute_metric(MetricKind.LAT, u, h, events, index, net, topics)
            if t is not None:
                assert t >= 0
            if lat is not None:
                assert 0 < lat <= 1
            if fpar is not None:
                assert 0 <= fpar <= 1
                assert fpar * len(net.followees_of(u)) == pytest.approx(npar, abs=1e-12)


def test_log_lat_normalization_identity():
    # mean over adopters of exp(LOG-LAT(w,h)) is exactly 1 per hashtag
    rng = np.random.default_rng(12)
    net, events, topics, index = _random_setup(rng, n_users=20, n_lines=250)
    means = hashtag_mean_lats(events, index, net, topics)
    for h, mean_lat in means.items():
        ratios = []
        for u in index.adopters_of(h):
            v = compute_metric(
                MetricKind.LOG_LAT, u, h, events, index, net, topics,
                hashtag_mean_lat=mean_lat,
            )
            if v is not None:
                ratios.append(math.exp(v))
        assert np.mean(ratios) == pytest.approx(1.0, abs=1e-9)


def test_build_genome_matches_per_pair_composition():
    rng = np.random.default_rng(13)
    net, events, topics, index = _random_setup(rng, n_users=15, n_lines=120)
    genome = build_genome(events, index, net, topics)
    means = hashtag_mean_lats(events, index, net, topics)
    expected: dict = {}
    for (u, h) in index.first_use:
        topic = topics.topic_of(h)
        if topic is None:
            continue
        for kind in MetricKind:
            if kind is MetricKind.LOG_LAT:
                if h not in means:
                    continue
                v = compute_metric(
                    kind, u, h, events, index, net, topics, hashtag_mean_lat=means[h]
                )
            else:
                v = compute_metric(kind, u, h, events, index, net, topics)
            if v is not None:
                expected.setdefault((u, topic, kind), []).append(v)
    for (u, topic, kind), vals in expected.items():
        got = genome[u].values(topic, kind)
        assert sorted(got) == pytest.approx(sorted(vals))
        assert genome[u].cell(topic, kind).mean == pytest.approx(np.mean(vals))
    # no extra cells
    total_cells = sum(len(gt.cells) for gt in genome.genotypes.values())
    assert total_cells == len(expected)


def test_build_genome_worker_count_invariance():
    rng = np.random.default_rng(14)
    net, events, topics, index = _random_setup(rng, n_users=15, n_lines=120)
    g1 = build_genome(events, index, net, topics, workers=1)
    g3 = build_genome(events, index, net, topics, workers=3)
    assert g1.genotypes == g3.genotypes
    assert g1.provenance == g3.provenance
