# engine/mincut.py - Exact global minimum cut with partition recovery
import heapq
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from engine.errors import ContractViolation, InputError
from engine.graph import Graph, is_connected

logger = logging.getLogger(__name__)

# Above this many vertices the dense n x n phase engine would cost too much memory.
DENSE_LIMIT = 2048
BRUTE_FORCE_LIMIT = 20
_BRUTE_FORCE_CHUNK = 1 << 14


@dataclass(frozen=True)
class MinCutResult:
    cut_weight: int
    side_one: frozenset  # always holds local vertex 0
    side_two: frozenset


def _oriented(cut_weight: int, side, num_vertices: int) -> MinCutResult:
    side = frozenset(int(v) for v in side)
    rest = frozenset(range(num_vertices)) - side
    if 0 in side:
        return MinCutResult(int(cut_weight), side, rest)
    return MinCutResult(int(cut_weight), rest, side)


def global_min_cut(g: Graph) -> MinCutResult:
    """
    Exact global minimum edge cut of a connected graph (Stoer-Wagner).

    Maximum-adjacency ties go to the lowest vertex index, so the returned
    partition is a pure function of the graph.
    """

    n = g.num_vertices
    if n < 2:
        raise InputError(f"min cut needs at least 2 vertices, got {n}")
    if g.num_edges == 0 or not is_connected(g):
        raise ContractViolation(f"min cut called on a disconnected graph ({n} vertices, {g.num_edges} edges)")

    leaves = np.flatnonzero(g.degrees() == 1)
    if len(leaves):
        return _oriented(1, [int(leaves[0])], n)

    if n <= DENSE_LIMIT:
        weight, side = _stoer_wagner_dense(g)
    else:
        weight, side = _stoer_wagner_sparse(g)
    return _oriented(weight, side, n)


def _stoer_wagner_dense(g: Graph) -> Tuple[int, List[int]]:
    n = g.num_vertices
    weights = np.zeros((n, n), dtype=np.int32)
    weights[g.edge_sources, g.neighbors] = 1
    active = np.ones(n, dtype=bool)
    members: List[List[int]] = [[v] for v in range(n)]

    best_weight = None
    best_side: List[int] = []
    for remaining in range(n, 1, -1):
        start = int(np.argmax(active))
        added = ~active
        added[start] = True
        connection = weights[start].astype(np.int64)
        previous = last = start
        last_weight = 0
        for _ in range(remaining - 1):
            candidates = np.where(added, -1, connection)
            chosen = int(np.argmax(candidates))
            last_weight = int(candidates[chosen])
            added[chosen] = True
            connection += weights[chosen]
            previous, last = last, chosen

        if best_weight is None or last_weight < best_weight:
            best_weight = last_weight
            best_side = list(members[last])

        # contract last into previous
        weights[previous] += weights[last]
        weights[:, previous] += weights[:, last]
        weights[previous, previous] = 0
        weights[last, :] = 0
        weights[:, last] = 0
        active[last] = False
        members[previous].extend(members[last])

    return best_weight, best_side


def _stoer_wagner_sparse(g: Graph) -> Tuple[int, List[int]]:
    n = g.num_vertices
    adjacency: List[Dict[int, int]] = [{} for _ in range(n)]
    for u, v in g.edges():
        adjacency[u][v] = 1
        adjacency[v][u] = 1
    active = set(range(n))
    members: List[List[int]] = [[v] for v in range(n)]

    best_weight = None
    best_side: List[int] = []
    while len(active) > 1:
        start = min(active)
        added = {start}
        connection: Dict[int, int] = dict(adjacency[start])
        heap = [(-w, v) for v, w in connection.items()]
        heapq.heapify(heap)
        previous = last = start
        last_weight = 0
        while len(added) < len(active):
            negative, chosen = heapq.heappop(heap)
            if chosen in added or -negative != connection[chosen]:
                continue
            last_weight = -negative
            added.add(chosen)
            for neighbor, w in adjacency[chosen].items():
                if neighbor not in added:
                    connection[neighbor] = connection.get(neighbor, 0) + w
                    heapq.heappush(heap, (-connection[neighbor], neighbor))
            previous, last = last, chosen

        if best_weight is None or last_weight < best_weight:
            best_weight = last_weight
            best_side = list(members[last])

        merged = adjacency[previous]
        for neighbor, w in adjacency[last].items():
            del adjacency[neighbor][last]
            if neighbor == previous:
                continue
            merged[neighbor] = merged.get(neighbor, 0) + w
            adjacency[neighbor][previous] = merged[neighbor]
        adjacency[last] = {}
        active.remove(last)
        members[previous].extend(members[last])

    return best_weight, best_side


def brute_force_min_cut(g: Graph) -> MinCutResult:
    """Exhaustive oracle; ties go to the lexicographically least side holding vertex 0."""

    n = g.num_vertices
    if n < 2:
        raise InputError(f"min cut needs at least 2 vertices, got {n}")
    if n > BRUTE_FORCE_LIMIT:
        raise InputError(f"brute-force min cut refused for {n} vertices (limit {BRUTE_FORCE_LIMIT})")

    edges = g.edge_array()
    u, v = edges[:, 0], edges[:, 1]
    bits = np.arange(n - 1, dtype=np.int64)
    # bit i of a mask puts vertex i + 1 on vertex 0's side; the all-ones mask would empty side two
    total = (1 << (n - 1)) - 1

    best_weight = None
    best_masks: List[np.ndarray] = []
    for begin in range(0, total, _BRUTE_FORCE_CHUNK):
        masks = np.arange(begin, min(begin + _BRUTE_FORCE_CHUNK, total), dtype=np.int64)
        on_one = np.ones((len(masks), n), dtype=bool)
        on_one[:, 1:] = ((masks[:, None] >> bits) & 1).astype(bool)
        weights = (on_one[:, u] != on_one[:, v]).sum(axis=1)
        chunk_best = int(weights.min())
        if best_weight is None or chunk_best < best_weight:
            best_weight = chunk_best
            best_masks = [masks[weights == chunk_best]]
        elif chunk_best == best_weight:
            best_masks.append(masks[weights == chunk_best])

    sides = []
    for mask in np.concatenate(best_masks):
        sides.append((0,) + tuple(int(i) + 1 for i in bits if (int(mask) >> int(i)) & 1))
    return _oriented(best_weight, min(sides), n)


def cut_edges(g: Graph, result: MinCutResult) -> List[Tuple[int, int]]:
    return [(u, v) for u, v in g.edges() if (u in result.side_one) != (v in result.side_one)]
