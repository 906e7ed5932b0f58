"""Topic-specific adoption behavior analytics over follower networks.

The pipeline: load a follower graph, a timestamped hashtag event log
and a hashtag-to-topic map; index first uses and first exposures;
compute per-user per-topic behavioral genotypes; extract per-topic
influence backbones; and use genotypes plus backbones for hashtag-topic
classification, influencer/adopter ranking, and network latency
minimization.
"""

from .errors import DataError, DegenerateTrainingError, ParseError, TrainingError
from .ingest import (
    AdoptionIndex,
    Event,
    EventLog,
    FollowerNetwork,
    TopicMap,
    build_adoption_index,
    load_dataset,
    load_events,
    load_follower_edges,
    load_manifest,
    load_topic_map,
)
from .graph import (
    DirectedGraph,
    betweenness_centrality,
    jaccard_edge_similarity,
    kendall_tau,
    pagerank,
    strongly_connected_components,
    weakly_connected_components,
)
from .genotype import (
    Genome,
    Genotype,
    MetricKind,
    build_genome,
    compute_metric,
    hashtag_mean_lats,
    node_topic_latency,
)
from .backbone import (
    BackboneReport,
    InfluenceBackbone,
    compare_with_follower,
    cross_topic_overlap,
    exclude_hashtag,
    extract_backbone,
)
from .classify import (
    AccuracyCurve,
    ConsensusResult,
    ErrorTable,
    LeaveOneOutResult,
    LocalClassifier,
    LogisticFit,
    accuracy_curve,
    classify_local,
    fit_logistic,
    leave_one_out,
    nb_consensus,
    train_local,
)
from .predict import (
    Direction,
    PredictionContext,
    PredictionInstance,
    PredictorKind,
    build_instances,
    evaluate,
    roc_auc,
    score_candidates,
)
from .latmin import (
    Heuristic,
    LatencyGraph,
    MinimizationTrace,
    average_network_latency,
    exact_k_latmin,
    minimize,
    pair_latency,
    path_latency,
)
from .syngen import GenParams, GeneratedDataset, PlantedTruth, TopicProfile, generate

__version__ = "0.1.0"
