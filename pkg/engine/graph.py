# engine/graph.py - Double-index graph storage, induced subgraphs, components
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _scipy_components

from engine.errors import ContractViolation, InputError

logger = logging.getLogger(__name__)


def _frozen_int_array(values) -> np.ndarray:
    array = np.ascontiguousarray(values, dtype=np.int64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Immutable undirected simple graph in double-index layout.

    CSR row pointers plus a flat neighbor array, extended with an edge-to-source
    array so the endpoints of any edge index are recovered in O(1). Every
    undirected edge is stored once per direction; each row is sorted.
    """

    num_vertices: int
    neighbor_offsets: np.ndarray
    neighbors: np.ndarray
    edge_sources: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "num_vertices", int(self.num_vertices))
        for name in ("neighbor_offsets", "neighbors", "edge_sources"):
            object.__setattr__(self, name, _frozen_int_array(getattr(self, name)))

    @classmethod
    def from_csr(cls, neighbor_offsets, neighbors) -> "Graph":
        offsets = np.asarray(neighbor_offsets, dtype=np.int64)
        num_vertices = len(offsets) - 1
        sources = np.repeat(np.arange(num_vertices, dtype=np.int64), np.diff(offsets))
        return cls(num_vertices, offsets, neighbors, sources)

    @classmethod
    def empty(cls, num_vertices: int = 0) -> "Graph":
        return cls(num_vertices, np.zeros(num_vertices + 1), np.empty(0), np.empty(0))

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return len(self.neighbors) // 2

    def degree(self, vertex: int) -> int:
        return int(self.neighbor_offsets[vertex + 1] - self.neighbor_offsets[vertex])

    def degrees(self) -> np.ndarray:
        return np.diff(self.neighbor_offsets)

    def neighbors_of(self, vertex: int) -> np.ndarray:
        return self.neighbors[self.neighbor_offsets[vertex]:self.neighbor_offsets[vertex + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
            return False
        row = self.neighbors_of(u)
        position = int(np.searchsorted(row, v))
        return position < len(row) and int(row[position]) == v

    def edge_endpoints(self, edge_index: int) -> Tuple[int, int]:
        return int(self.edge_sources[edge_index]), int(self.neighbors[edge_index])

    def edge_array(self) -> np.ndarray:
        """(m, 2) array of undirected edges with u < v, sorted."""
        forward = self.edge_sources < self.neighbors
        return np.stack([self.edge_sources[forward], self.neighbors[forward]], axis=1)

    def edges(self) -> Iterator[Tuple[int, int]]:
        for u, v in self.edge_array():
            yield int(u), int(v)

    def check_invariants(self) -> None:
        """Raise ContractViolation if any storage invariant is broken."""
        offsets, neighbors, sources = self.neighbor_offsets, self.neighbors, self.edge_sources
        n = self.num_vertices
        if len(offsets) != n + 1 or offsets[0] != 0 or offsets[-1] != len(neighbors):
            raise ContractViolation("neighbor_offsets do not frame the neighbor array")
        if np.any(np.diff(offsets) < 0):
            raise ContractViolation("neighbor_offsets are not non-decreasing")
        if len(sources) != len(neighbors):
            raise ContractViolation("edge_sources is not parallel to neighbors")
        if not np.array_equal(sources, np.repeat(np.arange(n), np.diff(offsets))):
            raise ContractViolation("edge_sources disagrees with the offset ranges")
        if len(neighbors) and (neighbors.min() < 0 or neighbors.max() >= n):
            raise ContractViolation("neighbor ID out of range")
        if np.any(sources == neighbors):
            raise ContractViolation("self-loop stored")
        # strictly increasing inside each row: no duplicates, sorted
        same_row = sources[1:] == sources[:-1]
        if np.any(neighbors[1:][same_row] <= neighbors[:-1][same_row]):
            raise ContractViolation("row not strictly ascending")
        forward = np.lexsort((neighbors, sources))
        backward = np.lexsort((sources, neighbors))
        if not (np.array_equal(sources[forward], neighbors[backward])
                and np.array_equal(neighbors[forward], sources[backward])):
            raise ContractViolation("adjacency is not symmetric")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_vertices == other.num_vertices
                and np.array_equal(self.neighbor_offsets, other.neighbor_offsets)
                and np.array_equal(self.neighbors, other.neighbors))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Graph(num_vertices={self.num_vertices}, num_edges={self.num_edges})"


@dataclass(frozen=True, eq=False)
class Subgraph:
    """A vertex subset of a parent graph with its induced edges relabeled to 0..k-1."""

    parent_vertex_ids: np.ndarray
    local_graph: Graph

    def __post_init__(self):
        ids = _frozen_int_array(self.parent_vertex_ids)
        if len(ids) != self.local_graph.num_vertices:
            raise ContractViolation("parent_vertex_ids length differs from local vertex count")
        if len(ids) > 1 and np.any(np.diff(ids) <= 0):
            raise ContractViolation("parent_vertex_ids must be strictly increasing")
        object.__setattr__(self, "parent_vertex_ids", ids)

    @property
    def num_vertices(self) -> int:
        return self.local_graph.num_vertices

    @property
    def num_edges(self) -> int:
        return self.local_graph.num_edges

    def restrict(self, local_ids: Iterable[int]) -> "Subgraph":
        """Induced subgraph on some local vertices, still labeled by root-graph IDs."""
        inner = induced_subgraph(self.local_graph, local_ids)
        return Subgraph(self.parent_vertex_ids[inner.parent_vertex_ids], inner.local_graph)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subgraph):
            return NotImplemented
        return (np.array_equal(self.parent_vertex_ids, other.parent_vertex_ids)
                and self.local_graph == other.local_graph)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Subgraph(num_vertices={self.num_vertices}, num_edges={self.num_edges})"


@dataclass(frozen=True)
class EdgeBuildReport:
    records: int
    self_loops_dropped: int
    duplicates_dropped: int
    edges: int


def _is_vertex_pair(record) -> bool:
    try:
        u, v = record
    except (TypeError, ValueError):
        return False
    for value in (u, v):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
            return False
    return True


def _edge_records(edge_list) -> np.ndarray:
    records = edge_list if isinstance(edge_list, np.ndarray) else list(edge_list)
    if len(records) == 0:
        return np.empty((0, 2), dtype=np.int64)
    try:
        array = np.asarray(records)
    except (TypeError, ValueError):
        array = None
    if array is None or array.ndim != 2 or array.shape[1] != 2 or array.dtype.kind not in "iu":
        for index, record in enumerate(records):
            if not _is_vertex_pair(record):
                raise InputError(f"malformed edge record at index {index}: {record!r}")
        raise InputError("malformed edge list")
    negative = (array < 0).any(axis=1)
    if negative.any():
        index = int(np.argmax(negative))
        raise InputError(f"malformed edge record at index {index}: negative vertex ID {records[index]!r}")
    return array.astype(np.int64, copy=False)


def build_graph_report(edge_list: Sequence[Tuple[int, int]],
                       num_vertices: Optional[int] = None) -> Tuple[Graph, EdgeBuildReport]:
    """Canonicalize an edge list into a Graph and report what was dropped."""

    records = _edge_records(edge_list)
    needed = int(records.max()) + 1 if len(records) else 0
    if num_vertices is None:
        num_vertices = needed
    elif num_vertices < needed:
        raise InputError(f"num_vertices={num_vertices} but edge list references vertex {needed - 1}")

    loops = records[:, 0] == records[:, 1]
    kept = records[~loops]
    if len(kept):
        low = np.minimum(kept[:, 0], kept[:, 1])
        high = np.maximum(kept[:, 0], kept[:, 1])
        pairs = np.unique(np.stack([low, high], axis=1), axis=0)
    else:
        pairs = np.empty((0, 2), dtype=np.int64)

    sources = np.concatenate([pairs[:, 0], pairs[:, 1]])
    targets = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((targets, sources))
    sources, targets = sources[order], targets[order]

    offsets = np.zeros(num_vertices + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(np.bincount(sources, minlength=num_vertices))

    report = EdgeBuildReport(
        records=len(records),
        self_loops_dropped=int(loops.sum()),
        duplicates_dropped=len(kept) - len(pairs),
        edges=len(pairs),
    )
    return Graph(num_vertices, offsets, targets, sources), report


def build_graph(edge_list: Sequence[Tuple[int, int]], num_vertices: Optional[int] = None) -> Graph:
    graph, _ = build_graph_report(edge_list, num_vertices)
    return graph


def _vertex_array(vertex_ids) -> np.ndarray:
    if isinstance(vertex_ids, np.ndarray):
        array = vertex_ids.astype(np.int64, copy=False).ravel()
    else:
        array = np.fromiter((int(v) for v in vertex_ids), dtype=np.int64)
    return np.unique(array)


def induced_subgraph(g: Graph, vertex_ids: Iterable[int]) -> Subgraph:
    """
    Extract the subgraph induced by vertex_ids in O(sum of degrees).

    Membership of each neighbor is decided by binary search against the sorted
    member list, so no per-call array of size |V(g)| is allocated.
    """

    ids = _vertex_array(vertex_ids)
    count = len(ids)
    if count and (ids[0] < 0 or ids[-1] >= g.num_vertices):
        bad = ids[0] if ids[0] < 0 else ids[-1]
        raise InputError(f"vertex {int(bad)} is outside the graph (num_vertices={g.num_vertices})")

    starts = g.neighbor_offsets[ids]
    lengths = g.neighbor_offsets[ids + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return Subgraph(ids, Graph.empty(count))

    first_slot = np.cumsum(lengths) - lengths
    flat = np.repeat(starts - first_slot, lengths) + np.arange(total)
    found = g.neighbors[flat]
    local_sources = np.repeat(np.arange(count, dtype=np.int64), lengths)

    positions = np.searchsorted(ids, found)
    inside = positions < count
    inside[inside] = ids[positions[inside]] == found[inside]

    local_sources = local_sources[inside]
    local_targets = positions[inside]
    offsets = np.zeros(count + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(np.bincount(local_sources, minlength=count))
    return Subgraph(ids, Graph(count, offsets, local_targets, local_sources))


def component_labels(g: Graph) -> Tuple[int, np.ndarray]:
    if g.num_vertices == 0:
        return 0, np.empty(0, dtype=np.int64)
    matrix = csr_matrix(
        (np.ones(len(g.neighbors), dtype=np.int8), g.neighbors, g.neighbor_offsets),
        shape=(g.num_vertices, g.num_vertices),
    )
    count, labels = _scipy_components(matrix, directed=False)
    return int(count), labels


def group_by_label(labels: np.ndarray) -> List[np.ndarray]:
    """Split 0..n-1 by label; groups sorted inside and ordered by smallest member."""
    if len(labels) == 0:
        return []
    order = np.argsort(labels, kind="stable")
    cuts = np.flatnonzero(np.diff(labels[order])) + 1
    groups = np.split(order, cuts)
    groups.sort(key=lambda group: int(group[0]))
    return groups


def connected_component_arrays(g: Graph) -> List[np.ndarray]:
    _, labels = component_labels(g)
    return group_by_label(labels)


def connected_components(g: Graph) -> List[frozenset]:
    return [frozenset(int(v) for v in group) for group in connected_component_arrays(g)]


def is_connected(g: Graph) -> bool:
    if g.num_vertices <= 1:
        return True
    count, _ = component_labels(g)
    return count == 1
