# test_main.py - command-line pipeline, exit codes and output determinism
import numpy as np
import pytest

import engine.cluster_refiner
from engine.cluster_refiner import CriterionKind, RefinementConfig, RefinementMode
from engine.errors import InputError
from main import RunManifest, build_parser, main
from tools.graph_generators import clique_chain, planted_partition_edges, random_clustering


@pytest.fixture
def chain_files(tmp_path):
    edges, _ = clique_chain(3, 6)
    graph = tmp_path / "chain.tsv"
    graph.write_text("# clique chain\n" + "".join(f"{u}\t{v}\n" for u, v in edges))
    clusters = tmp_path / "clusters.tsv"
    clusters.write_text("".join(f"{v}\t42\n" for v in range(18)))
    return graph, clusters


def run(graph, clusters, out, *extra):
    return main(["--graph", str(graph), "--clusters", str(clusters), "--out", str(out), *extra])


@pytest.mark.parametrize("mode", ["wcc", "cm"])
def test_clique_chain_end_to_end(chain_files, tmp_path, mode):
    graph, clusters = chain_files
    out = tmp_path / "out.tsv"
    assert run(graph, clusters, out, "--mode", mode, "--threads", "1", "--cda-resolution", "0.5") == 0
    expected = "".join(f"{v}\t{v // 6}\n" for v in range(18))
    assert out.read_text() == expected


def test_default_flags_match_reference_protocol():
    args = build_parser().parse_args(["--graph", "g", "--clusters", "c", "--out", "o"])
    assert args.mode == "wcc"
    assert args.criterion.kind is CriterionKind.LOG10
    assert (args.s_pre, args.s_post) == (1, 1)


def test_linear_criterion_flag():
    args = build_parser().parse_args(["--graph", "g", "--clusters", "c", "--out", "o", "--criterion", "linear:0.5"])
    assert args.criterion.kind is CriterionKind.LINEAR
    assert args.criterion.k == 0.5


def test_missing_graph_is_usage_error(tmp_path, capsys):
    assert main(["--clusters", "c.tsv", "--out", str(tmp_path / "o.tsv")]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [["--criterion", "cubic"], ["--threads", "0"], ["--mode", "leiden"]])
def test_bad_flags_are_usage_errors(chain_files, tmp_path, flags):
    graph, clusters = chain_files
    assert run(graph, clusters, tmp_path / "o.tsv", *flags) == 2


def test_missing_graph_file_names_stage(chain_files, tmp_path, capsys):
    _, clusters = chain_files
    assert run(tmp_path / "nope.tsv", clusters, tmp_path / "o.tsv") == 1
    assert "reading graph" in capsys.readouterr().err


def test_bad_clustering_names_stage(chain_files, tmp_path, capsys):
    graph, _ = chain_files
    clusters = tmp_path / "dup.tsv"
    clusters.write_text("0\t1\n0\t2\n")
    assert run(graph, clusters, tmp_path / "o.tsv") == 1
    assert "reading clustering" in capsys.readouterr().err


def test_unknown_vertex_fails_refinement(chain_files, tmp_path, capsys):
    graph, _ = chain_files
    clusters = tmp_path / "far.tsv"
    clusters.write_text("0\t1\n1\t1\n99\t1\n")
    assert run(graph, clusters, tmp_path / "o.tsv", "--threads", "1") == 1
    assert "refinement" in capsys.readouterr().err


def test_labels_cda_without_file_fails_configuration(chain_files, tmp_path, capsys):
    graph, clusters = chain_files
    assert run(graph, clusters, tmp_path / "o.tsv", "--mode", "cm", "--cda", "labels") == 1
    assert "configuration" in capsys.readouterr().err


def test_stats_file(chain_files, tmp_path):
    graph, clusters = chain_files
    stats = tmp_path / "stats.txt"
    assert run(graph, clusters, tmp_path / "o.tsv", "--threads", "1", "--stats", str(stats), "--list-discarded") == 0
    parsed = dict(line.split(": ", 1) for line in stats.read_text().splitlines())
    assert parsed["input_clusters"] == "1"
    assert parsed["output_clusters"] == "3"
    assert int(parsed["vertices_out"]) + int(parsed["vertices_discarded"]) == int(parsed["vertices_in_clustered"])
    assert parsed["lineage.2"] == "42"


@pytest.mark.parametrize("mode", ["wcc", "cm"])
def test_output_is_byte_identical_across_threads(tmp_path, mode):
    rng = np.random.default_rng(3)
    edges, _ = planted_partition_edges([15] * 10, 0.5, 0.02, rng)
    graph = tmp_path / "g.tsv"
    graph.write_text("".join(f"{u} {v}\n" for u, v in edges))
    clusters = tmp_path / "c.tsv"
    clusters.write_text("".join(f"{v}\t{c}\n" for v, c in sorted(random_clustering(150, 6, rng).assignments.items())))
    outputs = []
    for threads in ("1", "2", "8"):
        out = tmp_path / f"out-{threads}.tsv"
        assert run(graph, clusters, out, "--mode", mode, "--threads", threads, "--inline-threshold", "5",
                   "--criterion", "sqrt", "--seed", "9") == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_manifest_needs_paths():
    config = RefinementConfig(mode=RefinementMode.CM)
    assert RunManifest("g.tsv", "c.tsv", "o.tsv", config).stats_path is None
    for paths in (("", "c.tsv", "o.tsv"), ("g.tsv", "", "o.tsv"), ("g.tsv", "c.tsv", "")):
        with pytest.raises(InputError):
            RunManifest(*paths, config)
    with pytest.raises(InputError):
        RunManifest("g.tsv", "c.tsv", "o.tsv", RefinementConfig(mode=RefinementMode.CM, cda=None))


def test_wcc_ignores_cda_flags(chain_files, tmp_path):
    graph, clusters = chain_files
    assert run(graph, clusters, tmp_path / "o.tsv", "--threads", "1", "--cda", "labels") == 0


class ExplodingDetector:
    def __init__(self, config=None):
        self.config = config

    def get_communities(self, g, vertex_ids=None):
        raise RuntimeError("community detection blew up")


def test_non_utf8_graph_names_stage(chain_files, tmp_path, capsys):
    _, clusters = chain_files
    graph = tmp_path / "binary.tsv"
    graph.write_bytes(b"0\t1\n\xff\xfe 2\n")
    assert run(graph, clusters, tmp_path / "o.tsv") == 1
    assert "reading graph" in capsys.readouterr().err


def test_leiden_cda_end_to_end(chain_files, tmp_path):
    graph, clusters = chain_files
    out = tmp_path / "out.tsv"
    assert run(graph, clusters, out, "--mode", "cm", "--cda", "leiden", "--threads", "1",
               "--cda-resolution", "0.5") == 0
    assert out.read_text() == "".join(f"{v}\t{v // 6}\n" for v in range(18))


@pytest.mark.parametrize("threads", ["1", "2"])
def test_detector_failure_names_refinement_stage(chain_files, tmp_path, capsys, monkeypatch, threads):
    monkeypatch.setattr(engine.cluster_refiner, "CommunityDetector", ExplodingDetector)
    graph, clusters = chain_files
    assert run(graph, clusters, tmp_path / "o.tsv", "--mode", "cm", "--threads", threads) == 1
    assert "refinement" in capsys.readouterr().err


@pytest.mark.parametrize("name", ["WCC_THREADS", "WCC_INLINE_THRESHOLD"])
def test_malformed_env_setting_is_configuration_error(chain_files, tmp_path, capsys, monkeypatch, name):
    monkeypatch.setenv(name, "many")
    graph, clusters = chain_files
    assert run(graph, clusters, tmp_path / "o.tsv") == 1
    err = capsys.readouterr().err
    assert "configuration" in err
    assert name in err
