# engine/clustering.py
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping

from engine.errors import InputError


@dataclass(frozen=True)
class Clustering:
    """Vertex ID -> cluster ID. Vertices missing from the mapping are unclustered."""

    assignments: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]]) -> "Clustering":
        """Number clusters 0..k-1 in order of their smallest member."""
        ordered = sorted(filter(None, (sorted(int(v) for v in cluster) for cluster in clusters)),
                         key=lambda members: members[0])
        assignments: Dict[int, int] = {}
        for cluster_id, members in enumerate(ordered):
            for vertex in members:
                if vertex in assignments:
                    raise InputError(f"vertex {vertex} is in clusters {assignments[vertex]} and {cluster_id}")
                assignments[vertex] = cluster_id
        return cls(assignments)

    def clusters(self) -> Dict[int, List[int]]:
        """Cluster ID -> sorted members, keyed in ascending cluster ID order."""
        grouped: Dict[int, List[int]] = {}
        for vertex in sorted(self.assignments):
            grouped.setdefault(self.assignments[vertex], []).append(vertex)
        return {cluster_id: grouped[cluster_id] for cluster_id in sorted(grouped)}

    def canonical(self) -> "Clustering":
        return Clustering.from_clusters(self.clusters().values())

    def partition(self) -> frozenset:
        """The clusters as a set of vertex sets, ignoring cluster IDs."""
        return frozenset(frozenset(members) for members in self.clusters().values())

    @property
    def num_clusters(self) -> int:
        return len(set(self.assignments.values()))

    def __len__(self) -> int:
        return len(self.assignments)

    __hash__ = None
