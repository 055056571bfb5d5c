# tools/graph_generators.py - Synthetic graphs and clusterings with known structure
from itertools import combinations
from typing import List, Sequence, Tuple

import numpy as np

from engine.clustering import Clustering

Edge = Tuple[int, int]


def clique_edges(members: Sequence[int]) -> List[Edge]:
    return [(int(u), int(v)) for u, v in combinations(members, 2)]


def clique_chain(num_cliques: int, clique_size: int) -> Tuple[List[Edge], List[List[int]]]:
    """Cliques 0..k-1 in a row, each joined to the next by one bridge edge."""
    blocks = [list(range(i * clique_size, (i + 1) * clique_size)) for i in range(num_cliques)]
    edges: List[Edge] = []
    for block in blocks:
        edges.extend(clique_edges(block))
    for left, right in zip(blocks, blocks[1:]):
        edges.append((left[-1], right[0]))
    return edges, blocks


def erdos_renyi_edges(n: int, p: float, rng: np.random.Generator) -> List[Edge]:
    upper = np.triu(rng.random((n, n)) < p, k=1)
    u, v = np.nonzero(upper)
    return list(zip(u.tolist(), v.tolist()))


def planted_partition_edges(block_sizes: Sequence[int], p_in: float, p_out: float,
                            rng: np.random.Generator) -> Tuple[List[Edge], List[List[int]]]:
    n = int(sum(block_sizes))
    block_of = np.repeat(np.arange(len(block_sizes)), block_sizes)
    same = block_of[:, None] == block_of[None, :]
    chosen = np.triu(rng.random((n, n)) < np.where(same, p_in, p_out), k=1)
    u, v = np.nonzero(chosen)
    starts = np.concatenate([[0], np.cumsum(block_sizes)])
    blocks = [list(range(int(starts[i]), int(starts[i + 1]))) for i in range(len(block_sizes))]
    return list(zip(u.tolist(), v.tolist())), blocks


def random_clustering(n: int, num_clusters: int, rng: np.random.Generator) -> Clustering:
    labels = rng.integers(0, num_clusters, size=n)
    return Clustering({vertex: int(label) for vertex, label in enumerate(labels)})


def clustered_graph(num_clusters: int, cluster_size: int, p_in: float, inter_edges: int,
                    rng: np.random.Generator) -> Tuple[np.ndarray, Clustering]:
    """
    Many dense random blocks plus sparse random edges between them.

    Returns an (m, 2) edge array (duplicates possible) and the block clustering.
    """
    pairs = np.array(list(combinations(range(cluster_size), 2)), dtype=np.int64)
    keep = rng.random((num_clusters, len(pairs))) < p_in
    offsets = np.arange(num_clusters, dtype=np.int64)[:, None] * cluster_size
    block_index, pair_index = np.nonzero(keep)
    inside = pairs[pair_index] + offsets[block_index]
    n = num_clusters * cluster_size
    across = rng.integers(0, n, size=(inter_edges, 2))
    edges = np.concatenate([inside, across])
    clustering = Clustering({vertex: vertex // cluster_size for vertex in range(n)})
    return edges, clustering
