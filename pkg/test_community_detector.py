# test_community_detector.py - CPM scoring and community detection for CM
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from engine.community_detector import (CdaConfig, CdaKind, CommunityAssignment, CommunityDetector, _LevelGraph,
                                       get_communities, score_cpm)
from engine.errors import InputError
from engine.graph import build_graph, induced_subgraph, is_connected
from tools.graph_generators import clique_chain, clique_edges, erdos_renyi_edges

TRIANGLE = [(0, 1), (1, 2), (0, 2)]


def assignment(*groups):
    return CommunityAssignment(tuple(frozenset(group) for group in groups))


def as_sets(found):
    return {frozenset(community) for community in found.communities}


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        yield [[first]] + partition
        for index in range(len(partition)):
            yield partition[:index] + [[first] + partition[index]] + partition[index + 1:]


def best_cpm_score(graph, resolution):
    return max(score_cpm(graph, assignment(*partition), resolution)
               for partition in set_partitions(list(range(graph.num_vertices))))


def test_score_whole_triangle_without_penalty():
    assert score_cpm(build_graph(TRIANGLE), assignment({0, 1, 2}), 0.0) == pytest.approx(3.0, abs=1e-12)


def test_score_singletons_is_zero():
    graph = build_graph(TRIANGLE)
    for resolution in (0.0, 0.01, 0.5, 3.0):
        assert score_cpm(graph, assignment({0}, {1}, {2}), resolution) == pytest.approx(0.0, abs=1e-12)


def test_score_split_triangle():
    assert score_cpm(build_graph(TRIANGLE), assignment({0, 1}, {2}), 0.5) == pytest.approx(0.5, abs=1e-12)


def test_score_rejects_invalid_partitions():
    graph = build_graph(TRIANGLE)
    with pytest.raises(InputError):
        score_cpm(graph, assignment({0, 1}, {1, 2}), 0.5)
    with pytest.raises(InputError):
        score_cpm(graph, assignment({0, 1}), 0.5)
    with pytest.raises(InputError):
        score_cpm(graph, assignment({0, 1, 2}, {5}), 0.5)


def test_bridged_cliques_split_at_high_resolution():
    edges, blocks = clique_chain(2, 5)
    found = get_communities(build_graph(edges), CdaConfig(resolution=0.5))
    assert as_sets(found) == {frozenset(block) for block in blocks}


def test_bridged_cliques_merge_at_low_resolution():
    # one bridge edge outweighs the 0.01 * 25 penalty for merging
    edges, _ = clique_chain(2, 5)
    found = get_communities(build_graph(edges), CdaConfig(resolution=0.01))
    assert as_sets(found) == {frozenset(range(10))}


def test_edgeless_graph_gives_singletons():
    found = get_communities(build_graph([], num_vertices=3), CdaConfig(resolution=0.5))
    assert as_sets(found) == {frozenset({0}), frozenset({1}), frozenset({2})}


def test_triangle_is_one_community():
    found = get_communities(build_graph(TRIANGLE), CdaConfig(resolution=0.5))
    assert as_sets(found) == {frozenset({0, 1, 2})}


def test_empty_graph_has_no_communities():
    assert len(get_communities(build_graph([]), CdaConfig())) == 0


@pytest.mark.parametrize("edges", [
    TRIANGLE,
    clique_edges(range(3)) + clique_edges(range(3, 6)) + [(2, 3)],
    [(0, leaf) for leaf in range(1, 5)],
    clique_edges(range(4)) + [(3, 4), (4, 5), (5, 6), (6, 4)],
])
def test_matches_exhaustive_optimum_on_small_fixtures(edges):
    graph = build_graph(edges)
    found = get_communities(graph, CdaConfig(resolution=0.5))
    assert score_cpm(graph, found, 0.5) == pytest.approx(best_cpm_score(graph, 0.5), abs=1e-9)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.01, 0.1, 0.5, 1.0]))
def test_communities_are_connected_partitions(seed, resolution):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 41))
    graph = build_graph(erdos_renyi_edges(n, float(rng.choice([0.05, 0.15, 0.4])), rng), num_vertices=n)
    found = get_communities(graph, CdaConfig(resolution=resolution, seed=seed))
    found.membership(n)
    for community in found.communities:
        assert is_connected(induced_subgraph(graph, community).local_graph)
    # starts from singletons and only keeps improving moves
    assert score_cpm(graph, found, resolution) >= -1e-9


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_same_seed_same_communities(seed):
    rng = np.random.default_rng(seed)
    graph = build_graph(erdos_renyi_edges(30, 0.15, rng), num_vertices=30)
    config = CdaConfig(resolution=0.1, seed=seed)
    assert as_sets(get_communities(graph, config)) == as_sets(CommunityDetector(config).get_communities(graph))


def test_config_validation():
    with pytest.raises(InputError):
        CdaConfig(resolution=0.0)
    with pytest.raises(InputError):
        CdaConfig(max_passes=0)
    with pytest.raises(InputError):
        CdaConfig(kind=CdaKind.EXTERNAL_LABELS)


def test_external_labels_use_global_ids(tmp_path):
    labels = tmp_path / "labels.tsv"
    labels.write_text("10\t5\n11\t5\n12\t7\n13\t7\n")
    detector = CommunityDetector(CdaConfig(kind=CdaKind.EXTERNAL_LABELS, labels_path=str(labels)))
    path = build_graph([(0, 1), (1, 2), (2, 3)])
    found = detector.get_communities(path, [10, 11, 12, 13])
    assert as_sets(found) == {frozenset({0, 1}), frozenset({2, 3})}


def test_external_labels_split_disconnected_groups_and_isolate_unlabeled(tmp_path):
    labels = tmp_path / "labels.tsv"
    labels.write_text("# vertex label\n0\t1\n3\t1\n1\t2\n2\t2\n")
    config = CdaConfig(kind=CdaKind.EXTERNAL_LABELS, labels_path=str(labels))
    found = get_communities(build_graph([(0, 1), (1, 2), (2, 3), (3, 4)]), config)
    assert as_sets(found) == {frozenset({0}), frozenset({3}), frozenset({1, 2}), frozenset({4})}


def random_connected_graph(n, p, rng):
    edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    return build_graph(edges + erdos_renyi_edges(n, p, rng), num_vertices=n)


def grouped(membership):
    groups = {}
    for vertex, label in enumerate(membership):
        groups.setdefault(label, set()).add(vertex)
    return assignment(*groups.values())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.01, 0.05, 0.1]))
def test_heuristic_reaches_near_optimum_when_whole_graph_is_best(seed, resolution):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    graph = random_connected_graph(n, float(rng.choice([0.1, 0.3, 0.6])), rng)
    best = best_cpm_score(graph, resolution)
    assume(score_cpm(graph, assignment(range(n)), resolution) >= best - 1e-9)
    found = get_communities(graph, CdaConfig(resolution=resolution, seed=seed))
    assert score_cpm(graph, found, resolution) >= 0.9 * best - 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.05, 0.2, 0.5, 1.0]))
def test_local_move_sweeps_never_lower_the_score(seed, resolution):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 31))
    graph = build_graph(erdos_renyi_edges(n, float(rng.choice([0.1, 0.3])), rng), num_vertices=n)
    detector = CommunityDetector(CdaConfig(resolution=resolution, seed=seed))
    snapshots = []
    detector._move_nodes(_LevelGraph.from_graph(graph), np.random.default_rng(seed), on_sweep=snapshots.append)
    assert snapshots
    scores = [0.0] + [score_cpm(graph, grouped(membership), resolution) for membership in snapshots]
    for before, after in zip(scores, scores[1:]):
        assert after >= before - 1e-9


def leiden(resolution, seed=0):
    return CdaConfig(kind=CdaKind.LEIDEN_CPM, resolution=resolution, seed=seed)


def test_leiden_splits_bridged_cliques():
    edges, blocks = clique_chain(2, 5)
    found = get_communities(build_graph(edges), leiden(0.5))
    assert as_sets(found) == {frozenset(block) for block in blocks}


def test_leiden_keeps_triangle_whole():
    found = get_communities(build_graph(TRIANGLE), leiden(0.5))
    assert as_sets(found) == {frozenset({0, 1, 2})}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([0.01, 0.1, 0.5]))
def test_leiden_communities_are_connected_partitions(seed, resolution):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 41))
    graph = build_graph(erdos_renyi_edges(n, float(rng.choice([0.05, 0.15, 0.4])), rng), num_vertices=n)
    found = get_communities(graph, leiden(resolution, seed))
    found.membership(n)
    for community in found.communities:
        assert is_connected(induced_subgraph(graph, community).local_graph)


def test_leiden_is_deterministic_for_a_seed():
    rng = np.random.default_rng(11)
    graph = build_graph(erdos_renyi_edges(40, 0.15, rng), num_vertices=40)
    first = as_sets(get_communities(graph, leiden(0.1, seed=4)))
    assert first == as_sets(get_communities(graph, leiden(0.1, seed=4)))
