# main.py - Command-line entry point: read, refine (WCC or CM), write
import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass
from typing import List, Optional

from dotenv import load_dotenv

from engine.cluster_refiner import ClusterRefiner, Criterion, RefinementConfig, RefinementMode, env_int
from engine.community_detector import CdaConfig, CdaKind
from engine.errors import InputError, RefinementError
from tools.graph_io import read_clustering, read_edge_list_report, write_clustering, write_stats

logger = logging.getLogger(__name__)

_CDA_KINDS = {
    "cpm": CdaKind.CPM_HEURISTIC,
    "leiden": CdaKind.LEIDEN_CPM,
    "labels": CdaKind.EXTERNAL_LABELS,
}


@dataclass(frozen=True)
class RunManifest:
    """One pipeline run: where to read, where to write, and how to refine."""

    graph_path: str
    clustering_path: str
    output_path: str
    config: RefinementConfig
    stats_path: Optional[str] = None

    def __post_init__(self):
        for name in ("graph_path", "clustering_path", "output_path"):
            if not getattr(self, name):
                raise InputError(f"{name} must not be empty")
        if self.stats_path == "":
            raise InputError("stats_path must not be empty when given")
        if self.config.mode is RefinementMode.CM and self.config.cda is None:
            raise InputError("cm mode needs a CDA configuration")


def _criterion(text: str) -> Criterion:
    try:
        return Criterion.parse(text)
    except InputError as e:
        raise argparse.ArgumentTypeError(str(e))


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wellconnected",
        description="Refine a graph clustering until every cluster is connected and its "
                    "minimum cut exceeds the chosen criterion (WCC or CM).",
    )
    parser.add_argument("--graph", required=True, help="edge list, one 'u v' pair per line")
    parser.add_argument("--clusters", required=True, help="input clustering, 'vertex<TAB>cluster' per line")
    parser.add_argument("--out", required=True, help="where to write the refined clustering")
    parser.add_argument("--mode", choices=[m.value for m in RefinementMode], default="wcc")
    parser.add_argument("--criterion", type=_criterion, default=Criterion(),
                        help="log10 | log2 | sqrt | linear:K (default log10)")
    parser.add_argument("--s-pre", type=_non_negative, default=1, help="CCR size threshold (strict)")
    parser.add_argument("--s-post", type=_non_negative, default=1, help="recursion size threshold (strict)")
    parser.add_argument("--threads", type=_positive,
                        default=env_int("WCC_THREADS", os.cpu_count() or 1),
                        help="worker processes (default: WCC_THREADS or machine width)")
    parser.add_argument("--cda", choices=sorted(_CDA_KINDS), default="cpm",
                        help="CDA used by CM mode: built-in CPM heuristic, Leiden-CPM, or a labels file")
    parser.add_argument("--cda-resolution", type=float, default=0.01,
                        help="CPM resolution for the cpm and leiden CDAs")
    parser.add_argument("--cda-labels", help="labels file for --cda labels")
    parser.add_argument("--cda-max-passes", type=_positive, default=16)
    parser.add_argument("--seed", type=int, default=0, help="CDA tie-break seed")
    parser.add_argument("--inline-threshold", type=_positive,
                        default=env_int("WCC_INLINE_THRESHOLD", 1000),
                        help="children smaller than this stay in the current task")
    parser.add_argument("--stats", help="write run statistics (key: value) here")
    parser.add_argument("--list-discarded", action="store_true", help="list unclustered vertices in --stats")
    parser.add_argument("--log-level", default=os.getenv("WCC_LOG_LEVEL", "INFO"))
    return parser


def _manifest_from_args(args: argparse.Namespace) -> RunManifest:
    mode = RefinementMode(args.mode)
    if mode is RefinementMode.CM:
        cda = CdaConfig(
            kind=_CDA_KINDS[args.cda],
            resolution=args.cda_resolution,
            max_passes=args.cda_max_passes,
            seed=args.seed,
            labels_path=args.cda_labels,
        )
    else:
        if args.cda == "labels" or args.cda_labels:
            logger.warning("⚠️ CDA flags are ignored in wcc mode")
        cda = CdaConfig()
    config = RefinementConfig(
        mode=mode,
        criterion=args.criterion,
        s_pre=args.s_pre,
        s_post=args.s_post,
        cda=cda,
        parallelism=args.threads,
        inline_threshold=args.inline_threshold,
    )
    return RunManifest(args.graph, args.clusters, args.out, config, args.stats)


def _fail(stage: str, error: Exception) -> int:
    logger.error(f"❌ {stage} failed: {error}")
    print(f"error: {stage} failed: {error}", file=sys.stderr)
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    try:
        parser = build_parser()
    except RefinementError as e:
        return _fail("configuration", e)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)

    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO))
    start_time = time.time()

    try:
        manifest = _manifest_from_args(args)
    except RefinementError as e:
        return _fail("configuration", e)

    try:
        graph, report = read_edge_list_report(manifest.graph_path)
    except (RefinementError, OSError) as e:
        return _fail("reading graph", e)
    print(f"📥 Graph: {graph.num_vertices} vertices, {graph.num_edges} edges "
          f"({report.self_loops_dropped} self-loops, {report.duplicates_dropped} duplicates dropped)")

    try:
        clustering = read_clustering(manifest.clustering_path)
    except (RefinementError, OSError) as e:
        return _fail("reading clustering", e)

    try:
        result = ClusterRefiner(manifest.config).run(graph, clustering)
    except (RefinementError, OSError) as e:
        return _fail("refinement", e)

    try:
        write_clustering(result.clustering, manifest.output_path)
    except OSError as e:
        return _fail("writing output", e)

    if manifest.stats_path:
        try:
            write_stats(result.stats, manifest.stats_path, include_discarded=args.list_discarded)
        except OSError as e:
            return _fail("writing statistics", e)

    stats = result.stats
    print(f"📊 {stats.mode.upper()}: {stats.input_clusters} input clusters -> {stats.ccr_components} CCR components "
          f"-> {stats.output_clusters} output clusters")
    print(f"📊 Vertices clustered: {stats.vertices_in_clustered} before, {stats.vertices_out} after "
          f"({stats.vertices_discarded} discarded)")
    print(f"📊 Min-cut calls: {stats.mincut_invocations}, CDA calls: {stats.cda_invocations}, "
          f"max depth: {stats.max_depth}, workers: {stats.parallelism}")
    print(f"✅ Done in {time.time() - start_time:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
