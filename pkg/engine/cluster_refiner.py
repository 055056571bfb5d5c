# engine/cluster_refiner.py - CCR plus the recursive WCC and CM refinement drivers
import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from engine.clustering import Clustering
from engine.community_detector import CdaConfig, CommunityDetector
from engine.errors import InputError
from engine.graph import Graph, Subgraph, connected_component_arrays, induced_subgraph
from engine.mincut import global_min_cut
from engine.task_pool import ClusterTaskPool, TaskOutcome, WorkUnit

logger = logging.getLogger(__name__)


class RefinementMode(Enum):
    WCC = "wcc"
    CM = "cm"


class CriterionKind(Enum):
    LOG10 = "log10"
    LOG2 = "log2"
    SQRT = "sqrt"
    LINEAR = "linear"


@dataclass(frozen=True)
class Criterion:
    """Connectivity bar f(n); a cluster passes when its min cut is strictly above it."""

    kind: CriterionKind = CriterionKind.LOG10
    k: float = 1.0  # linear only

    def __post_init__(self):
        if self.kind is CriterionKind.LINEAR and not self.k > 0:
            raise InputError(f"linear criterion needs k > 0, got {self.k}")

    @classmethod
    def parse(cls, text: str) -> "Criterion":
        """Parse 'log10', 'log2', 'sqrt' or 'linear:K'."""
        name, _, argument = text.strip().partition(":")
        try:
            kind = CriterionKind(name.lower())
        except ValueError:
            raise InputError(f"unknown criterion {text!r} (expected log10, log2, sqrt or linear:K)")
        if kind is CriterionKind.LINEAR:
            try:
                k = float(argument)
            except ValueError:
                raise InputError(f"linear criterion needs a numeric k, got {text!r}")
            return cls(kind, k)
        if argument:
            raise InputError(f"criterion {name} takes no argument, got {text!r}")
        return cls(kind)

    def evaluate(self, n: int) -> float:
        if self.kind is CriterionKind.LOG10:
            return math.log10(n)
        if self.kind is CriterionKind.LOG2:
            return math.log2(n)
        if self.kind is CriterionKind.SQRT:
            return math.sqrt(n)
        return self.k * n

    def __str__(self) -> str:
        if self.kind is CriterionKind.LINEAR:
            return f"linear:{self.k:g}"
        return self.kind.value


def compute_criterion(subgraph_size: int, criterion: Criterion) -> float:
    if subgraph_size < 1:
        raise InputError(f"criterion needs a subgraph size of at least 1, got {subgraph_size}")
    return criterion.evaluate(subgraph_size)


def env_int(name: str, default: int) -> int:
    """Integer setting from the environment (or .env); a malformed value is an InputError."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"environment variable {name} must be an integer, got {raw!r}")


def _default_inline_threshold() -> int:
    return env_int("WCC_INLINE_THRESHOLD", 1000)


@dataclass(frozen=True)
class RefinementConfig:
    mode: RefinementMode = RefinementMode.WCC
    criterion: Criterion = field(default_factory=Criterion)
    s_pre: int = 1
    s_post: int = 1
    cda: CdaConfig = field(default_factory=CdaConfig)
    parallelism: int = 1
    inline_threshold: int = field(default_factory=_default_inline_threshold)

    def __post_init__(self):
        if self.s_pre < 0 or self.s_post < 0:
            raise InputError(f"size thresholds must be non-negative (s_pre={self.s_pre}, s_post={self.s_post})")
        if self.parallelism < 1:
            raise InputError(f"parallelism must be at least 1, got {self.parallelism}")
        if self.inline_threshold < 1:
            raise InputError(f"inline_threshold must be at least 1, got {self.inline_threshold}")
        if self.s_post < self.s_pre:
            logger.warning(f"⚠️ s_post={self.s_post} is below s_pre={self.s_pre}; "
                           f"recursion keeps smaller pieces than CCR")


class ClusterSink:
    """Append-only collector of accepted clusters, safe to share between threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._clusters: List[Tuple[int, ...]] = []

    def emit(self, vertex_ids) -> None:
        members = tuple(sorted(int(v) for v in vertex_ids))
        with self._lock:
            self._clusters.append(members)

    def clusters(self) -> List[Tuple[int, ...]]:
        with self._lock:
            return list(self._clusters)

    def __len__(self) -> int:
        with self._lock:
            return len(self._clusters)


@dataclass
class RunStats:
    mode: str
    parallelism: int
    input_clusters: int
    ccr_components: int
    output_clusters: int
    vertices_in_clustered: int
    vertices_out: int
    vertices_discarded: int
    mincut_invocations: int
    cda_invocations: int
    max_depth: int
    tasks: int
    duration_seconds: float
    discarded_vertices: List[int] = field(default_factory=list)
    lineage: Dict[int, int] = field(default_factory=dict)  # output cluster ID -> input cluster ID

    def to_lines(self, include_discarded: bool = False) -> List[str]:
        lines = [
            f"mode: {self.mode}",
            f"parallelism: {self.parallelism}",
            f"input_clusters: {self.input_clusters}",
            f"ccr_components: {self.ccr_components}",
            f"output_clusters: {self.output_clusters}",
            f"vertices_in_clustered: {self.vertices_in_clustered}",
            f"vertices_out: {self.vertices_out}",
            f"vertices_discarded: {self.vertices_discarded}",
            f"mincut_invocations: {self.mincut_invocations}",
            f"cda_invocations: {self.cda_invocations}",
            f"max_depth: {self.max_depth}",
            f"tasks: {self.tasks}",
            f"duration_seconds: {self.duration_seconds:.3f}",
        ]
        if include_discarded:
            lines.append("discarded_vertices: " + ",".join(str(v) for v in self.discarded_vertices))
        lines.extend(f"lineage.{out_id}: {in_id}" for out_id, in_id in sorted(self.lineage.items()))
        return lines


@dataclass
class RefinementResult:
    clustering: Clustering
    stats: RunStats


@dataclass
class RefinementContext:
    """Everything a worker needs; shipped to each worker process once."""

    graph: Graph
    config: RefinementConfig
    detector: Optional[object] = None  # None means plain WCC bisection


def _cluster_components(graph: Graph, members, s_pre: int) -> List[Subgraph]:
    cluster = induced_subgraph(graph, members)
    if cluster.num_edges == 0:
        return []
    components = connected_component_arrays(cluster.local_graph)
    if len(components) == 1:
        return [cluster] if cluster.num_vertices > s_pre else []
    return [cluster.restrict(component) for component in components if len(component) > s_pre]


def _refine_subgraph(
    sub: Subgraph,
    config: RefinementConfig,
    detector,
    accept: Callable[[np.ndarray], None],
    counters: TaskOutcome,
    spawn: Optional[Callable[[Subgraph, int], None]] = None,
    depth: int = 0,
) -> None:
    """
    The well-connectedness check, WCC flavor when detector is None, CM otherwise.

    An explicit stack replaces recursion; every child is strictly smaller than
    its parent, so the loop ends. Children at or above the inline threshold go
    to spawn when one is given.
    """

    stack: List[Tuple[Subgraph, int]] = [(sub, depth)]
    while stack:
        current, level = stack.pop()
        counters.max_depth = max(counters.max_depth, level)
        if current.num_edges == 0:
            continue

        cut = global_min_cut(current.local_graph)
        counters.mincut_calls += 1
        if cut.cut_weight > compute_criterion(current.num_vertices, config.criterion):
            accept(current.parent_vertex_ids)
            continue

        for side in (cut.side_one, cut.side_two):
            if len(side) <= config.s_post:
                continue
            part = current.restrict(side)
            children = [part]
            if detector is not None:
                found = detector.get_communities(part.local_graph, part.parent_vertex_ids)
                counters.cda_calls += 1
                if len(found) > 1:
                    children = [part.restrict(community) for community in found.communities
                                if len(community) > config.s_post]
            for child in children:
                if spawn is not None and child.num_vertices >= config.inline_threshold:
                    spawn(child, level + 1)
                else:
                    stack.append((child, level + 1))


def wcc_check(sub: Subgraph, cfg: RefinementConfig, sink: ClusterSink) -> None:
    _refine_subgraph(sub, cfg, None, sink.emit, TaskOutcome())


def cm_check(sub: Subgraph, cfg: RefinementConfig, sink: ClusterSink, detector=None) -> None:
    detector = detector or CommunityDetector(cfg.cda)
    _refine_subgraph(sub, cfg, detector, sink.emit, TaskOutcome())


def refine_units(context: RefinementContext, units: List[WorkUnit]) -> TaskOutcome:
    """Pool handler: CCR for fresh input clusters, then the check on every piece."""

    outcome = TaskOutcome()
    config = context.config
    for unit in units:
        def accept(vertex_ids, origin=unit.origin):
            outcome.accepted.append((origin, tuple(int(v) for v in vertex_ids)))

        def spawn(child: Subgraph, depth: int, origin=unit.origin):
            outcome.spawned.append(WorkUnit(origin, np.array(child.parent_vertex_ids), depth, needs_ccr=False))

        if unit.needs_ccr:
            pieces = _cluster_components(context.graph, unit.vertex_ids, config.s_pre)
            outcome.ccr_components += len(pieces)
        else:
            pieces = [induced_subgraph(context.graph, unit.vertex_ids)]
        for piece in pieces:
            _refine_subgraph(piece, config, context.detector, accept, outcome, spawn, unit.depth)
    return outcome


def _check_cluster_ranges(g: Graph, clusters: Dict[int, List[int]]) -> None:
    for cluster_id, members in clusters.items():
        for vertex in (members[0], members[-1]):
            if not 0 <= vertex < g.num_vertices:
                raise InputError(
                    f"cluster {cluster_id} contains vertex {vertex} outside the graph (num_vertices={g.num_vertices})"
                )


def refine_connected_components(g: Graph, clustering: Clustering, s_pre: int) -> List[frozenset]:
    """Replace each input cluster by its connected components larger than s_pre."""
    clusters = clustering.clusters()
    _check_cluster_ranges(g, clusters)
    components: List[frozenset] = []
    for members in clusters.values():
        for piece in _cluster_components(g, members, s_pre):
            components.append(frozenset(piece.parent_vertex_ids.tolist()))
    return components


class ClusterRefiner:
    """Runs WCC or CM over a whole clustering and reports what happened."""

    def __init__(self, config: RefinementConfig, detector=None):
        self.config = config
        self.detector = detector
        if config.mode is RefinementMode.CM and self.detector is None:
            self.detector = CommunityDetector(config.cda)

    def run(self, graph: Graph, clustering: Clustering) -> RefinementResult:
        start_time = time.time()
        config = self.config
        clusters = clustering.clusters()
        _check_cluster_ranges(graph, clusters)

        logger.info(f"🚀 {config.mode.value.upper()} on {len(clusters)} input clusters "
                    f"(criterion={config.criterion}, s_pre={config.s_pre}, s_post={config.s_post}, "
                    f"parallelism={config.parallelism})")

        units = [WorkUnit(cluster_id, np.asarray(members, dtype=np.int64)) for cluster_id, members in clusters.items()]
        detector = self.detector if config.mode is RefinementMode.CM else None
        pool = ClusterTaskPool(refine_units, RefinementContext(graph, config, detector), config.parallelism)
        outcome = pool.run(units)

        # IDs come from a canonical sort, never from completion order
        accepted = sorted(outcome.accepted, key=lambda item: item[1][0])
        assignments: Dict[int, int] = {}
        lineage: Dict[int, int] = {}
        for cluster_id, (origin, members) in enumerate(accepted):
            lineage[cluster_id] = origin
            for vertex in members:
                assignments[vertex] = cluster_id
        discarded = sorted(set(clustering.assignments) - set(assignments))

        stats = RunStats(
            mode=config.mode.value,
            parallelism=config.parallelism,
            input_clusters=len(clusters),
            ccr_components=outcome.ccr_components,
            output_clusters=len(accepted),
            vertices_in_clustered=len(clustering.assignments),
            vertices_out=len(assignments),
            vertices_discarded=len(discarded),
            mincut_invocations=outcome.mincut_calls,
            cda_invocations=outcome.cda_calls,
            max_depth=outcome.max_depth,
            tasks=pool.get_pool_stats()["total_tasks"],
            duration_seconds=time.time() - start_time,
            discarded_vertices=discarded,
            lineage=lineage,
        )
        logger.info(f"✅ {stats.output_clusters} well-connected clusters from {stats.ccr_components} CCR components "
                    f"in {stats.duration_seconds:.2f}s ({stats.vertices_discarded} vertices unclustered)")
        return RefinementResult(Clustering(assignments), stats)


def run_wcc(g: Graph, clustering: Clustering, cfg: RefinementConfig) -> Clustering:
    if cfg.mode is not RefinementMode.WCC:
        raise InputError(f"run_wcc needs mode=wcc, got {cfg.mode.value}")
    return ClusterRefiner(cfg).run(g, clustering).clustering


def run_cm(g: Graph, clustering: Clustering, cfg: RefinementConfig, detector=None) -> Clustering:
    if cfg.mode is not RefinementMode.CM:
        raise InputError(f"run_cm needs mode=cm, got {cfg.mode.value}")
    return ClusterRefiner(cfg, detector).run(g, clustering).clustering
