# tools/benchmark.py - Leiden-CPM input clusterings and strong-scaling sweeps
import argparse
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from engine.cluster_refiner import ClusterRefiner, RefinementConfig, RefinementMode
from engine.clustering import Clustering
from engine.community_detector import CdaConfig, CdaKind, CommunityDetector
from engine.errors import ContractViolation, RefinementError
from engine.graph import Graph, build_graph
from tools.graph_generators import clustered_graph
from tools.graph_io import read_edge_list, write_clustering

logger = logging.getLogger(__name__)


def leiden_clustering(graph: Graph, resolution: float, seed: int = 0) -> Clustering:
    """Leiden-CPM over the whole graph, the usual input for WCC and CM runs."""
    detector = CommunityDetector(CdaConfig(kind=CdaKind.LEIDEN_CPM, resolution=resolution, seed=seed))
    found = detector.get_communities(graph)
    logger.info(f"🎯 Leiden-CPM at resolution {resolution}: {len(found)} clusters")
    return Clustering.from_clusters(found.communities)


@dataclass
class SweepPoint:
    workers: int
    seconds: float
    speedup: float
    output_clusters: int


def scaling_sweep(graph: Graph, clustering: Clustering, worker_counts: Sequence[int],
                  config: RefinementConfig) -> List[SweepPoint]:
    """
    Time the same refinement at each worker count.

    The first count is the baseline for speedups. Every run must produce the
    same clustering; a mismatch is a ContractViolation.
    """
    points: List[SweepPoint] = []
    baseline: Optional[Clustering] = None
    baseline_seconds = 0.0
    for workers in worker_counts:
        start = time.perf_counter()
        result = ClusterRefiner(dataclasses.replace(config, parallelism=workers)).run(graph, clustering)
        seconds = time.perf_counter() - start
        if baseline is None:
            baseline, baseline_seconds = result.clustering, seconds
        elif result.clustering.assignments != baseline.assignments:
            raise ContractViolation(f"output with {workers} workers differs from the {worker_counts[0]}-worker run")
        points.append(SweepPoint(workers, seconds, baseline_seconds / seconds if seconds > 0 else 0.0,
                                 result.clustering.num_clusters))
        logger.info(f"⏱️ {workers} workers: {seconds:.2f}s")
    return points


def _worker_counts(text: str) -> List[int]:
    try:
        counts = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated worker counts, got {text!r}")
    if not counts or min(counts) < 1:
        raise argparse.ArgumentTypeError(f"worker counts must be positive, got {text!r}")
    return counts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m tools.benchmark",
                                     description="Input clusterings and scaling runs for the refiner.")
    commands = parser.add_subparsers(dest="command", required=True)

    clustering = commands.add_parser("clustering", help="write a Leiden-CPM clustering of an edge list")
    clustering.add_argument("--graph", required=True)
    clustering.add_argument("--out", required=True)
    clustering.add_argument("--resolution", type=float, default=0.01, help="typically 0.001 or 0.01")
    clustering.add_argument("--seed", type=int, default=0)

    sweep = commands.add_parser("sweep", help="strong-scaling sweep on a synthetic clustered graph")
    sweep.add_argument("--clusters", type=int, default=2000)
    sweep.add_argument("--cluster-size", type=int, default=25)
    sweep.add_argument("--p-in", type=float, default=0.7)
    sweep.add_argument("--inter-edges", type=int, default=10_000)
    sweep.add_argument("--workers", type=_worker_counts, default=[1, 2, 4, 8])
    sweep.add_argument("--mode", choices=[m.value for m in RefinementMode], default="wcc")
    sweep.add_argument("--input-resolution", type=float,
                       help="recluster with Leiden-CPM at this resolution instead of the planted blocks")
    sweep.add_argument("--seed", type=int, default=0)
    return parser


def _run_clustering(args: argparse.Namespace) -> None:
    graph = read_edge_list(args.graph)
    clustering = leiden_clustering(graph, args.resolution, args.seed)
    write_clustering(clustering, args.out)
    print(f"✅ {clustering.num_clusters} clusters over {graph.num_vertices} vertices written to {args.out}")


def _run_sweep(args: argparse.Namespace) -> None:
    rng = np.random.default_rng(args.seed)
    edges, clustering = clustered_graph(args.clusters, args.cluster_size, args.p_in, args.inter_edges, rng)
    graph = build_graph(edges, num_vertices=args.clusters * args.cluster_size)
    if args.input_resolution is not None:
        clustering = leiden_clustering(graph, args.input_resolution, args.seed)
    print(f"📥 Graph: {graph.num_vertices} vertices, {graph.num_edges} edges, "
          f"{clustering.num_clusters} input clusters")
    config = RefinementConfig(mode=RefinementMode(args.mode), cda=CdaConfig(seed=args.seed))
    for point in scaling_sweep(graph, clustering, args.workers, config):
        print(f"📊 {point.workers:>3} workers: {point.seconds:8.2f}s  speedup {point.speedup:5.2f}x  "
              f"{point.output_clusters} output clusters")


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)
    logging.basicConfig(level=logging.INFO)
    try:
        if args.command == "clustering":
            _run_clustering(args)
        else:
            _run_sweep(args)
    except (RefinementError, OSError) as e:
        logger.error(f"❌ {args.command} failed: {e}")
        print(f"error: {args.command} failed: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
