import numpy as np
import pytest

from ane.graph import (
    EdgeListError,
    Graph,
    GraphError,
    load_edge_list,
    parse_edge_lines,
    preprocess,
    row_normalize,
)


def test_path_graph_degrees():
    g = parse_edge_lines(["0 1", "1 2"])
    assert g.num_nodes == 3
    assert g.degrees().tolist() == [1.0, 2.0, 1.0]


def test_symmetric_duplicate_merges_to_single_weight():
    g = parse_edge_lines(["a b 2.0", "b a 2.0"])
    assert g.num_nodes == 2
    assert g.num_edges() == 1
    assert g.nbr_wt[0].tolist() == [2.0]


def test_repeated_directed_lines_sum_then_max_symmetrizes():
    # same direction repeats sum: a->b twice gives 3.0; reverse 1.0; max wins
    g = parse_edge_lines(["a b 1.0", "a b 2.0", "b a 1.0"])
    assert g.nbr_wt[0].tolist() == [3.0]


def test_comments_and_blank_lines_ignored():
    g = parse_edge_lines(["# header", "", "0 1", "  # another", "1 2"])
    assert g.num_nodes == 3


def test_malformed_line_reports_line_number():
    with pytest.raises(EdgeListError, match=":2:"):
        parse_edge_lines(["0 1", "0 1 2 3"])


def test_negative_weight_rejected():
    with pytest.raises(EdgeListError, match="negative"):
        parse_edge_lines(["0 1 -2.0"])


def test_non_numeric_weight_rejected():
    with pytest.raises(EdgeListError, match="not a number"):
        parse_edge_lines(["0 1 heavy"])


def test_unweighted_flag_forces_unit_weights():
    g = parse_edge_lines(["a b 9.0"], weighted=False)
    assert g.nbr_wt[0].tolist() == [1.0]


def test_ids_dense_by_first_appearance():
    g = parse_edge_lines(["x y", "y z"])
    assert g.ids == ["x", "y", "z"]
    assert g.index_of == {"x": 0, "y": 1, "z": 2}


def test_self_loop_only_graph_errors_at_preprocess():
    g = parse_edge_lines(["0 0"])
    with pytest.raises(GraphError, match="no usable nodes"):
        preprocess(g)


def test_preprocess_drops_isolated_and_self_loops():
    # triangle + a node with only a self-loop
    g = parse_edge_lines(["a b", "b c", "c a", "d d"])
    clean = preprocess(g)
    assert clean.num_nodes == 3
    assert clean.ids == ["a", "b", "c"]
    assert all(not clean.has_edge(i, i) for i in range(3))


def test_preprocess_identity_on_clean_graph():
    g = preprocess(parse_edge_lines(["a b", "b c", "c a"]))
    assert preprocess(g) == g


def test_preprocess_idempotent_random(rng=np.random.default_rng(0)):
    for _ in range(10):
        n = int(rng.integers(3, 9))
        lines = []
        for _ in range(int(rng.integers(2, 15))):
            i, j = rng.integers(n, size=2)
            lines.append(f"{i} {j} {rng.uniform(0.1, 2.0):.3f}")
        try:
            g1 = preprocess(parse_edge_lines(lines))
        except GraphError:
            continue
        assert preprocess(g1) == g1


def test_symmetry_preserved():
    g = parse_edge_lines(["a b 2", "b c 5", "a c 1"])
    for i in range(g.num_nodes):
        for j in g.nbr_idx[i]:
            assert g.has_edge(int(j), i)


def test_row_normalize_two_node_edge():
    g = preprocess(parse_edge_lines(["0 1"]))
    assert row_normalize(g).tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_row_normalize_star_center():
    g = preprocess(parse_edge_lines(["hub a", "hub b", "hub c"]))
    mat = row_normalize(g)
    np.testing.assert_allclose(mat[0], [0.0, 1 / 3, 1 / 3, 1 / 3])


def test_row_normalize_weighted():
    g = preprocess(parse_edge_lines(["a b 1", "a c 3"]))
    mat = row_normalize(g)
    np.testing.assert_allclose(sorted(mat[0].tolist()), [0.0, 0.25, 0.75])


def test_row_normalize_rows_sum_to_one_random():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(3, 12))
        lines = [
            f"{i} {j} {rng.uniform(0.1, 3.0):.4f}"
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.5
        ]
        try:
            g = preprocess(parse_edge_lines(lines))
        except GraphError:
            continue
        sums = row_normalize(g).sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)


def test_graph_rejects_bad_edges():
    with pytest.raises(GraphError):
        Graph(["a"], {(0, 1): 1.0})
    with pytest.raises(GraphError):
        Graph(["a", "b"], {(0, 1): float("nan")})


def test_load_edge_list_roundtrip(tmp_path):
    path = tmp_path / "toy.edges"
    path.write_text("# toy\n0 1 2.0\n1 2 1.0\n")
    g = load_edge_list(path)
    assert g.num_nodes == 3
    assert g.num_edges() == 2
    unweighted = load_edge_list(path, weighted=False)
    assert unweighted.nbr_wt[0].tolist() == [1.0]
