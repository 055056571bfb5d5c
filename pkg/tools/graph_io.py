# tools/graph_io.py - Edge lists, clusterings, labels and run statistics on disk
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from engine.clustering import Clustering
from engine.errors import InputError
from engine.graph import Graph, build_graph_report

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
_COMMENT_PREFIXES = ("#", "%")


@dataclass(frozen=True)
class EdgeListReport:
    lines: int
    comment_lines: int
    edges_read: int
    self_loops_dropped: int
    duplicates_dropped: int
    num_vertices: int
    num_edges: int


def _read_lines(path: PathLike) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.readlines()
    except UnicodeDecodeError as e:
        raise InputError(f"{path}: not valid UTF-8 text (byte {e.start}: {e.reason})") from e


def _data_lines(raw_lines: List[str]) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line number, tokens) for every non-blank, non-comment line."""
    for line_number, raw in enumerate(raw_lines, start=1):
        line = raw.strip()
        if not line or line.startswith(_COMMENT_PREFIXES):
            continue
        yield line_number, line.split()


def _int_pair(path: PathLike, line_number: int, tokens: List[str], what: str) -> Tuple[int, int]:
    if len(tokens) < 2:
        raise InputError(f"{path}:{line_number}: expected two integers ({what}), got {' '.join(tokens)!r}")
    try:
        first, second = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise InputError(f"{path}:{line_number}: non-integer token in {' '.join(tokens[:2])!r}")
    if first < 0 or second < 0:
        raise InputError(f"{path}:{line_number}: negative ID in {' '.join(tokens[:2])!r}")
    return first, second


def read_edge_list_report(path: PathLike) -> Tuple[Graph, EdgeListReport]:
    raw_lines = _read_lines(path)
    sources: List[int] = []
    targets: List[int] = []
    for line_number, tokens in _data_lines(raw_lines):
        u, v = _int_pair(path, line_number, tokens, "edge")
        sources.append(u)
        targets.append(v)
    data_lines = len(sources)
    lines = len(raw_lines)

    records = np.stack([np.asarray(sources, dtype=np.int64), np.asarray(targets, dtype=np.int64)], axis=1)
    graph, built = build_graph_report(records)
    report = EdgeListReport(
        lines=lines,
        comment_lines=lines - data_lines,
        edges_read=data_lines,
        self_loops_dropped=built.self_loops_dropped,
        duplicates_dropped=built.duplicates_dropped,
        num_vertices=graph.num_vertices,
        num_edges=graph.num_edges,
    )
    logger.info(f"✅ Read {path}: {report.lines} lines, {graph.num_vertices} vertices, {graph.num_edges} edges, "
                f"{report.duplicates_dropped} duplicates dropped")
    if report.self_loops_dropped:
        logger.warning(f"⚠️ Dropped {report.self_loops_dropped} self-loops from {path}")
    return graph, report


def read_edge_list(path: PathLike) -> Graph:
    graph, _ = read_edge_list_report(path)
    return graph


def read_clustering(path: PathLike) -> Clustering:
    """Read 'vertex<TAB>cluster' lines; a vertex listed twice is an error."""
    assignments: Dict[int, int] = {}
    for line_number, tokens in _data_lines(_read_lines(path)):
        vertex, cluster_id = _int_pair(path, line_number, tokens, "vertex and cluster")
        if vertex in assignments:
            raise InputError(f"{path}:{line_number}: vertex {vertex} already assigned to cluster {assignments[vertex]}")
        assignments[vertex] = cluster_id
    logger.info(f"✅ Read {path}: {len(assignments)} vertices in {len(set(assignments.values()))} clusters")
    return Clustering(assignments)


def read_labels(path: PathLike) -> Dict[int, int]:
    """Community labels for the external_labels CDA; same format as a clustering."""
    return dict(read_clustering(path).assignments)


def write_clustering(clustering: Clustering, path: PathLike) -> None:
    """Rows sorted by vertex ID, clusters renumbered by smallest member."""
    canonical = clustering.canonical()
    rows = [f"{vertex}\t{canonical.assignments[vertex]}\n" for vertex in sorted(canonical.assignments)]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.writelines(rows)
    logger.info(f"✅ Wrote {canonical.num_clusters} clusters ({len(rows)} vertices) to {path}")


def write_stats(stats, path: PathLike, include_discarded: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(stats.to_lines(include_discarded)) + "\n")
    logger.info(f"📊 Wrote run statistics to {path}")
