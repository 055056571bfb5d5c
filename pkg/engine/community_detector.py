# engine/community_detector.py - Pluggable CDA used by the connectivity modifier
import heapq
import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import igraph as ig
import leidenalg
import numpy as np

from engine.errors import InputError
from engine.graph import Graph, component_labels, group_by_label

logger = logging.getLogger(__name__)

_GAIN_EPSILON = 1e-12


class CdaKind(Enum):
    CPM_HEURISTIC = "cpm_heuristic"
    LEIDEN_CPM = "leiden_cpm"
    EXTERNAL_LABELS = "external_labels"


@dataclass(frozen=True)
class CdaConfig:
    kind: CdaKind = CdaKind.CPM_HEURISTIC
    resolution: float = 0.01
    max_passes: int = 16
    max_sweeps: int = 32
    seed: int = 0
    labels_path: Optional[str] = None

    def __post_init__(self):
        if not self.resolution > 0:
            raise InputError(f"CPM resolution must be positive, got {self.resolution}")
        if self.max_passes < 1 or self.max_sweeps < 1:
            raise InputError("max_passes and max_sweeps must be at least 1")
        if self.kind is CdaKind.EXTERNAL_LABELS and not self.labels_path:
            raise InputError("external_labels CDA needs a labels_path")


@dataclass(frozen=True)
class CommunityAssignment:
    communities: Tuple[frozenset, ...]

    def __len__(self) -> int:
        return len(self.communities)

    def membership(self, num_vertices: int) -> np.ndarray:
        """Community index per vertex; raises InputError unless this is a partition."""
        labels = np.full(num_vertices, -1, dtype=np.int64)
        for index, community in enumerate(self.communities):
            if not community:
                raise InputError(f"community {index} is empty")
            for vertex in community:
                if not 0 <= vertex < num_vertices:
                    raise InputError(f"community {index} holds vertex {vertex} outside 0..{num_vertices - 1}")
                if labels[vertex] != -1:
                    raise InputError(f"vertex {vertex} appears in communities {labels[vertex]} and {index}")
                labels[vertex] = index
        missing = np.flatnonzero(labels == -1)
        if len(missing):
            raise InputError(f"vertex {int(missing[0])} is not covered by any community")
        return labels


def score_cpm(g: Graph, assignment: CommunityAssignment, resolution: float) -> float:
    """Constant Potts Model quality: sum over communities of internal edges - resolution * C(n, 2)."""
    labels = assignment.membership(g.num_vertices)
    edges = g.edge_array()
    internal = np.bincount(labels[edges[:, 0]][labels[edges[:, 0]] == labels[edges[:, 1]]],
                           minlength=len(assignment))
    score = 0.0
    for index, community in enumerate(assignment.communities):
        size = len(community)
        score += int(internal[index]) - resolution * size * (size - 1) / 2
    return score


class _LevelGraph:
    """Aggregated graph for one Louvain level: node sizes plus weighted links."""

    def __init__(self, sizes: List[int], links: List[Dict[int, int]]):
        self.sizes = sizes
        self.links = links

    @classmethod
    def from_graph(cls, g: Graph) -> "_LevelGraph":
        links: List[Dict[int, int]] = [{} for _ in range(g.num_vertices)]
        for u, v in zip(g.edge_sources.tolist(), g.neighbors.tolist()):
            links[u][v] = 1
        return cls([1] * g.num_vertices, links)

    def __len__(self) -> int:
        return len(self.sizes)

    def aggregate(self, membership: List[int]) -> Tuple["_LevelGraph", List[int]]:
        relabel = {label: index for index, label in enumerate(sorted(set(membership)))}
        node_map = [relabel[label] for label in membership]
        sizes = [0] * len(relabel)
        links: List[Dict[int, int]] = [defaultdict(int) for _ in relabel]
        for node, community in enumerate(node_map):
            sizes[community] += self.sizes[node]
            for neighbor, weight in self.links[node].items():
                other = node_map[neighbor]
                if other != community:
                    links[community][other] += weight
        return _LevelGraph(sizes, [dict(link) for link in links]), node_map


class CommunityDetector:
    """
    Community detection for parts produced by a min-cut split.

    The CPM heuristic is Louvain-style: local moves from singletons, then
    aggregation, repeated until a level merges nothing or max_passes is hit.
    The Leiden variant hands the same CPM objective to leidenalg.
    Any community that comes out disconnected is split into its components.
    """

    def __init__(self, config: Optional[CdaConfig] = None):
        self.config = config or CdaConfig()
        self.labels: Dict[int, int] = {}
        if self.config.kind is CdaKind.EXTERNAL_LABELS:
            from tools.graph_io import read_labels
            self.labels = read_labels(self.config.labels_path)
            logger.info(f"✅ Loaded {len(self.labels)} external community labels from {self.config.labels_path}")

    def get_communities(self, g: Graph, vertex_ids: Optional[Iterable[int]] = None) -> CommunityAssignment:
        if g.num_vertices == 0:
            return CommunityAssignment(())
        if self.config.kind is CdaKind.EXTERNAL_LABELS:
            membership = self._labels_membership(g, vertex_ids)
        elif self.config.kind is CdaKind.LEIDEN_CPM:
            membership = self._leiden_membership(g)
        else:
            membership = self._cpm_membership(g)
        return _connected_assignment(g, membership)

    def _labels_membership(self, g: Graph, vertex_ids) -> np.ndarray:
        keys = list(range(g.num_vertices)) if vertex_ids is None else [int(v) for v in vertex_ids]
        groups: Dict[Tuple[int, int], int] = {}
        membership = np.empty(g.num_vertices, dtype=np.int64)
        for local, key in enumerate(keys):
            label = self.labels.get(key)
            # unlabeled vertices stay on their own
            group = (0, label) if label is not None else (1, local)
            membership[local] = groups.setdefault(group, len(groups))
        return membership

    def _leiden_membership(self, g: Graph) -> np.ndarray:
        graph = ig.Graph(n=g.num_vertices, edges=g.edge_array().tolist())
        partition = leidenalg.find_partition(
            graph,
            leidenalg.CPMVertexPartition,
            resolution_parameter=self.config.resolution,
            n_iterations=self.config.max_passes,
            seed=self.config.seed & 0x7FFFFFFF,  # C int seed
        )
        return np.asarray(partition.membership, dtype=np.int64)

    def _cpm_membership(self, g: Graph) -> np.ndarray:
        rng = np.random.default_rng(self.config.seed)
        level = _LevelGraph.from_graph(g)
        vertex_community = list(range(g.num_vertices))
        for _ in range(self.config.max_passes):
            membership = self._move_nodes(level, rng)
            if len(set(membership)) == len(level):
                break
            level, node_map = level.aggregate(membership)
            vertex_community = [node_map[c] for c in vertex_community]
        return np.asarray(vertex_community, dtype=np.int64)

    def _move_nodes(self, level: _LevelGraph, rng: np.random.Generator,
                    on_sweep: Optional[Callable[[List[int]], None]] = None) -> List[int]:
        """Local moves until a sweep moves nothing; on_sweep sees the membership after each sweep."""
        resolution = self.config.resolution
        count = len(level)
        membership = list(range(count))
        community_size = list(level.sizes)
        empty: List[int] = []
        order = rng.permutation(count).tolist()

        for _ in range(self.config.max_sweeps):
            moved = False
            for node in order:
                current = membership[node]
                size = level.sizes[node]
                link: Dict[int, int] = defaultdict(int)
                for neighbor, weight in level.links[node].items():
                    link[membership[neighbor]] += weight
                stay = link.get(current, 0) - resolution * size * (community_size[current] - size)

                while empty and community_size[empty[0]] != 0:
                    heapq.heappop(empty)
                candidates = set(link)
                if empty and community_size[current] > size:
                    candidates.add(empty[0])

                best, best_gain = current, 0.0
                for label in sorted(candidates):
                    if label == current:
                        continue
                    gain = link.get(label, 0) - resolution * size * community_size[label] - stay
                    if gain > best_gain + _GAIN_EPSILON:
                        best, best_gain = label, gain
                if best == current:
                    continue

                community_size[current] -= size
                community_size[best] += size
                membership[node] = best
                if community_size[current] == 0:
                    heapq.heappush(empty, current)
                moved = True
            if on_sweep is not None:
                on_sweep(list(membership))
            if not moved:
                break
        return membership


def _connected_assignment(g: Graph, membership: np.ndarray) -> CommunityAssignment:
    inside = membership[g.edge_sources] == membership[g.neighbors]
    kept = Graph.from_csr(
        np.concatenate([[0], np.cumsum(np.bincount(g.edge_sources[inside], minlength=g.num_vertices))]),
        g.neighbors[inside],
    )
    _, labels = component_labels(kept)
    return CommunityAssignment(tuple(frozenset(group.tolist()) for group in group_by_label(labels)))


def get_communities(g: Graph, cfg: CdaConfig, vertex_ids: Optional[Iterable[int]] = None) -> CommunityAssignment:
    return CommunityDetector(cfg).get_communities(g, vertex_ids)
