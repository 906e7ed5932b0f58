"""Command-line pipelines over a dataset manifest.

Every command reads the three dataset files named by ``--manifest``,
writes only into ``--out``, and embeds the input digests (plus the seed,
where sampling is involved) into each output for provenance.  Outputs
are byte-identical across re-runs with the same inputs, seed and any
worker count.

Exit codes: 0 success, 1 usage/config error, 2 data/parse error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Mapping, Sequence

from . import backbone as bb
from . import classify as cl
from . import genotype as gt
from . import latmin as lm
from . import predict as pr
from . import syngen as sg
from .errors import DataError, ParseError
from .graph import (
    DirectedGraph,
    strongly_connected_components,
    weakly_connected_components,
)
from .ingest import build_adoption_index, load_dataset, load_manifest


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise UsageError(message)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_digests(manifest: Path) -> dict[str, str]:
    paths = load_manifest(manifest)
    return {key: _sha256_file(Path(p)) for key, p in sorted(paths.items())}


def _provenance(args, extra: Mapping[str, object] | None = None) -> dict[str, object]:
    prov: dict[str, object] = {"command": args.command}
    if getattr(args, "manifest", None):
        prov["inputs"] = _input_digests(Path(args.manifest))
    if getattr(args, "seed", None) is not None:
        prov["seed"] = args.seed
    if extra:
        prov.update(extra)
    return prov


def _prov_comment(prov: Mapping[str, object]) -> str:
    return "# provenance: " + json.dumps(prov, sort_keys=True) + "\n"


def _write_tsv(path: Path, prov: Mapping[str, object], body_writer) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_prov_comment(prov))
        body_writer(fh)


def _write_json(path: Path, prov: Mapping[str, object], doc: dict) -> None:
    doc = dict(doc)
    doc["provenance"] = dict(prov)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _load(args):
    net, events, topics = load_dataset(Path(args.manifest))
    index = build_adoption_index(events, net)
    return net, events, topics, index


# --- commands -------------------------------------------------------------


def cmd_ingest_check(args) -> None:
    out = _outdir(args)
    net, events, topics, index = _load(args)
    unmapped = sorted(h for h in events.hashtags if topics.topic_of(h) is None)
    doc = {
        "nodes": len(net.nodes),
        "edges": len(net.edges),
        "events": len(events.events),
        "users_posting": len(events.users),
        "hashtags_seen": len(events.hashtags),
        "hashtags_mapped": len(topics.assignment),
        "unmapped_hashtags": unmapped,
        "skipped_event_lines": events.skipped_lines,
        "adopted_pairs": len(index.first_use),
        "exposed_pairs": len(index.first_exposure),
        "topics": list(topics.topics),
    }
    _write_json(out / "ingest_check.json", _provenance(args), doc)


def cmd_genome(args) -> None:
    out = _outdir(args)
    net, events, topics, index = _load(args)
    genome = gt.build_genome(events, index, net, topics, workers=args.workers)
    prov = _provenance(args, {"workers": "any"})
    _write_tsv(out / "genome_values.tsv", prov, lambda fh: gt.write_genome_values(genome, fh))
    _write_tsv(
        out / "genome_summary.tsv", prov, lambda fh: gt.write_genome_summary(genome, fh)
    )


def cmd_backbone(args) -> None:
    out = _outdir(args)
    net, events, topics, index = _load(args)
    wanted = [args.topic] if args.topic else list(topics.topics)
    for t in wanted:
        if t not in topics.topics:
            raise DataError(f"unknown topic {t!r}; dataset has {list(topics.topics)}")
    prov = _provenance(args, {"workers": "any"})
    backbones = {t: bb.extract_backbone(t, index, net, topics) for t in wanted}
    for t, b in backbones.items():
        _write_tsv(out / f"backbone_{t}.tsv", prov, lambda fh, b=b: bb.write_backbone_tsv(b, fh))
        if b.weights:
            report = bb.compare_with_follower(b, net).to_dict()
        else:
            report = {"topic": t, "empty": True}
        _write_json(out / f"backbone_report_{t}.json", prov, report)
    if len(wanted) >= 2:
        overlap = bb.cross_topic_overlap([backbones[t] for t in wanted])

        def body(fh):
            fh.write("topic\t" + "\t".join(overlap.topics) + "\n")
            for t, row in zip(overlap.topics, overlap.values):
                fh.write(t + "\t" + "\t".join(repr(v) for v in row) + "\n")

        _write_tsv(out / "overlap_matrix.tsv", prov, body)


def _parse_metrics(raw: str | None) -> list[gt.MetricKind]:
    if not raw:
        return list(gt.MetricKind)
    try:
        return [gt.MetricKind.from_tag(tag) for tag in raw.split(",")]
    except DataError as exc:
        raise UsageError(str(exc)) from exc


def cmd_classify(args) -> None:
    out = _outdir(args)
    metrics = _parse_metrics(args.metric)
    sizes = None
    if args.ensemble_sizes:
        try:
            sizes = [int(s) for s in args.ensemble_sizes.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --ensemble-sizes: {exc}") from exc
        if args.seed is None:
            raise UsageError("--seed is required with --ensemble-sizes")
    net, events, topics, index = _load(args)
    results: dict[str, cl.LeaveOneOutResult] = {}
    curves: dict[str, cl.AccuracyCurve] = {}
    fits: dict[str, dict] = {}
    for metric in metrics:
        res = cl.leave_one_out(metric, events, index, net, topics)
        results[metric.value] = res
        if sizes:
            curve = cl.accuracy_curve(
                metric, events, index, net, topics, sizes, args.repetitions, args.seed
            )
            curves[metric.value] = curve
            if len(curve.points) >= 3:
                fit = cl.fit_logistic(curve.points)
                fits[metric.value] = {
                    "l": fit.l, "k": fit.k, "x0": fit.x0, "residual": fit.residual,
                }
    prov = _provenance(args)
    topic_order = topics.topics
    _write_tsv(
        out / "error_table_test.tsv",
        prov,
        lambda fh: cl.write_error_tables(results, topic_order, "test", fh),
    )
    _write_tsv(
        out / "error_table_train.tsv",
        prov,
        lambda fh: cl.write_error_tables(results, topic_order, "train", fh),
    )
    skipped = {m: list(r.skipped) for m, r in results.items() if r.skipped}
    _write_json(out / "classify_summary.json", prov, {"skipped_hashtags": skipped})
    if sizes:
        _write_tsv(
            out / "accuracy_curves.tsv",
            prov,
            lambda fh: cl.write_accuracy_rows(curves, fh),
        )
        _write_json(out / "logistic_fits.json", prov, {"fits": fits})


def cmd_predict(args) -> None:
    out = _outdir(args)
    net, events, topics, index = _load(args)
    ctx = pr.PredictionContext(events, index, net, topics)
    directions = {
        "influencer": [pr.Direction.INFLUENCER],
        "adopter": [pr.Direction.ADOPTER],
        "both": [pr.Direction.INFLUENCER, pr.Direction.ADOPTER],
    }[args.direction]
    results = []
    for direction in directions:
        instances = pr.build_instances(direction, events, index, net, topics, ctx)
        for kind in pr.PredictorKind:
            results.append(pr.evaluate(kind, instances, ctx))
    _write_tsv(
        out / "predictor_auc.tsv",
        _provenance(args),
        lambda fh: pr.write_evaluation_tsv(results, fh),
    )


def cmd_latmin(args) -> None:
    out = _outdir(args)
    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    net, events, topics, index = _load(args)
    if args.topic not in topics.topics:
        raise DataError(f"unknown topic {args.topic!r}; dataset has {list(topics.topics)}")
    genome = gt.build_genome(events, index, net, topics, workers=args.workers)
    latencies = gt.node_topic_latency(genome, args.topic)
    b = bb.extract_backbone(args.topic, index, net, topics)
    if not b.weights:
        raise DataError(f"backbone for topic {args.topic!r} is empty")
    if args.permissive:
        comps = weakly_connected_components(b.graph)
    else:
        comps = strongly_connected_components(b.graph)
    keep = max(comps, key=lambda c: (len(c), sorted(c)))
    keep = {n for n in keep if n in latencies}
    edges = [
        (u, v, w) for (u, v), w in b.weights.items() if u in keep and v in keep
    ]
    graph = DirectedGraph.from_edges(edges, nodes=keep)
    lgraph = lm.LatencyGraph(
        graph=graph, latency={n: latencies[n] for n in graph.nodes}
    )
    k = min(args.k, graph.n)
    if k < 1:
        raise DataError("latency component too small to target")
    traces = [
        lm.minimize(lgraph, k, h, strict=not args.permissive, workers=args.workers)
        for h in lm.Heuristic
    ]
    prov = _provenance(args, {"workers": "any", "mode": "permissive" if args.permissive else "strict"})
    _write_tsv(out / "latmin_trace.tsv", prov, lambda fh: lm.write_trace_tsv(traces, fh))
    summary = {
        "topic": args.topic,
        "component_nodes": graph.n,
        "component_edges": len(edges),
        "k": k,
        "original_avg_latency": lm.average_network_latency(
            lgraph, strict=not args.permissive
        ),
        "reachable_pairs": lm.count_reachable_pairs(lgraph),
    }
    _write_json(out / "latmin_summary.json", prov, summary)


def _parse_profiles(path: str | None, n_topics: int) -> tuple[sg.TopicProfile, ...] | None:
    if not path:
        return None
    with Path(path).open(encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or len(raw) != n_topics:
        raise UsageError(f"profiles file must hold a list of {n_topics} objects")
    profiles = []
    for entry in raw:
        profiles.append(
            sg.TopicProfile(
                latency_mean=tuple(entry.get("latency_mean", (5.0, 15.0))),
                latency_jitter=entry.get("latency_jitter", 2.0),
                adoption_prob=tuple(entry.get("adoption_prob", (0.3, 0.9))),
                repeat_rate=tuple(entry.get("repeat_rate", (0.0, 0.3))),
                repeat_horizon=entry.get("repeat_horizon", 5),
            )
        )
    return tuple(profiles)


def cmd_syngen(args) -> None:
    out = _outdir(args)
    params = sg.GenParams(
        n_users=args.users,
        seed=args.seed,
        graph_model=args.graph_model,
        edge_prob=args.edge_prob,
        attach_count=args.attach_count,
        n_topics=args.topics,
        hashtags_per_topic=args.hashtags_per_topic,
        cascades_per_hashtag=args.cascades,
        topic_profiles=_parse_profiles(args.profiles_file, args.topics),
    )
    dataset = sg.generate(params)
    dataset.write(out)
    prov = {"command": args.command, "seed": args.seed}
    echo = {
        "users": args.users,
        "graph_model": args.graph_model,
        "edge_prob": args.edge_prob,
        "attach_count": args.attach_count,
        "topics": args.topics,
        "hashtags_per_topic": args.hashtags_per_topic,
        "cascades_per_hashtag": args.cascades,
        "outputs": {
            name: _sha256_file(out / name)
            for name in ("edges.tsv", "events.tsv", "topics.tsv", "truth.json")
        },
    }
    _write_json(out / "syngen_config.json", prov, echo)


def cmd_report(args) -> None:
    out = _outdir(args)
    entries: dict[str, dict] = {}
    for path in sorted(out.iterdir()):
        if not path.is_file() or path.name == "report.json":
            continue
        entry: dict[str, object] = {
            "sha256": _sha256_file(path),
            "bytes": path.stat().st_size,
        }
        if path.suffix == ".json":
            with path.open(encoding="utf-8") as fh:
                entry["content"] = json.load(fh)
        elif path.suffix == ".tsv":
            with path.open(encoding="utf-8") as fh:
                entry["rows"] = sum(
                    1 for line in fh if line.strip() and not line.startswith("#")
                )
        entries[path.name] = entry
    _write_json(out / "report.json", {"command": args.command}, {"outputs": entries})


# --- parser ---------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="genonet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, needs_manifest=True):
        p = sub.add_parser(name)
        p.set_defaults(func=func, command=name)
        if needs_manifest:
            p.add_argument("--manifest", required=True, help="dataset manifest path")
        p.add_argument("--out", required=True, help="output directory")
        return p

    add("ingest-check", cmd_ingest_check)

    p = add("genome", cmd_genome)
    p.add_argument("--workers", type=int, default=1)

    p = add("backbone", cmd_backbone)
    p.add_argument("--topic", default=None)
    p.add_argument("--workers", type=int, default=1)

    p = add("classify", cmd_classify)
    p.add_argument("--metric", default=None, help="comma-separated metric tags")
    p.add_argument("--ensemble-sizes", default=None, help="e.g. 1,4,16,64")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)

    p = add("predict", cmd_predict)
    p.add_argument(
        "--direction", choices=("influencer", "adopter", "both"), default="both"
    )

    p = add("latmin", cmd_latmin)
    p.add_argument("--topic", required=True)
    p.add_argument("--k", type=int, default=5)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="permissive", action="store_false")
    mode.add_argument("--permissive", dest="permissive", action="store_true")
    p.set_defaults(permissive=False)
    p.add_argument("--workers", type=int, default=1)

    p = add("syngen", cmd_syngen, needs_manifest=False)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--users", type=int, default=60)
    p.add_argument("--topics", type=int, default=2)
    p.add_argument("--hashtags-per-topic", type=int, default=4)
    p.add_argument("--cascades", type=int, default=2)
    p.add_argument(
        "--graph-model",
        choices=(sg.UNIFORM, sg.PREFERENTIAL),
        default=sg.UNIFORM,
    )
    p.add_argument("--edge-prob", type=float, default=0.08)
    p.add_argument("--attach-count", type=int, default=1)
    p.add_argument("--profiles-file", default=None)

    add("report", cmd_report, needs_manifest=False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # invariant violation / bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
