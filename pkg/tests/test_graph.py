import io

import numpy as np
import pytest

from seedmin.checks import random_graph
from seedmin.graph import (GraphFormatError, ProbGraph, check_adjacency_consistent,
                           gather_ranges, induce_residual, load_edge_list)


def test_from_edges_adjacency(diamond):
    assert diamond.n == 4 and diamond.m == 4
    assert sorted(v for v, _ in diamond.out_edges(0)) == [1, 2]
    assert [u for u, _ in diamond.in_edges(3)] == [1, 2]
    check_adjacency_consistent(diamond)


def test_adjacency_consistent_random():
    rng = np.random.default_rng(5)
    for _ in range(25):
        check_adjacency_consistent(random_graph(rng))
    for _ in range(10):
        check_adjacency_consistent(random_graph(rng, model="lt"))


def test_from_edges_rejects_bad_input():
    with pytest.raises(GraphFormatError):
        ProbGraph.from_edges(2, [0], [2], [0.5], "ic")  # endpoint out of range
    with pytest.raises(GraphFormatError):
        ProbGraph.from_edges(2, [0], [1], [0.0], "ic")  # probability must be > 0
    with pytest.raises(GraphFormatError):
        ProbGraph.from_edges(2, [0], [1], [1.5], "ic")
    with pytest.raises(GraphFormatError):
        ProbGraph.from_edges(2, [0], [1], [0.5], "sir")  # unknown model
    with pytest.raises(GraphFormatError):
        # threshold model caps total incoming weight at one per node
        ProbGraph.from_edges(3, [0, 1], [2, 2], [0.7, 0.7], "lt")


def test_lt_weight_sum_at_one_allowed():
    g = ProbGraph.from_edges(3, [0, 1], [2, 2], [0.5, 0.5], "lt")
    assert g.m == 2


def test_in_cum_matches_per_node_cumsum():
    rng = np.random.default_rng(2)
    g = random_graph(rng, n_lo=6, n_hi=8)
    for v in range(g.n):
        lo, hi = g.in_indptr[v], g.in_indptr[v + 1]
        np.testing.assert_allclose(g.in_cum[lo:hi], np.cumsum(g.in_p[lo:hi]))


def test_gather_ranges():
    starts = np.array([3, 10, 0])
    counts = np.array([2, 0, 3])
    np.testing.assert_array_equal(gather_ranges(starts, counts), [3, 4, 0, 1, 2])
    assert gather_ranges(np.array([], dtype=np.int64),
                         np.array([], dtype=np.int64)).size == 0


def test_induce_residual(chain6):
    sub, nm = induce_residual(chain6, np.array([1, 2, 4]))
    # kept nodes sorted, edges with both endpoints inside: only 2 -> 4
    assert sub.n == 3 and sub.m == 1
    assert nm.parent(0) == 1 and nm.parent(2) == 4
    assert nm.residual(4) == 2
    with pytest.raises(KeyError):
        nm.residual(0)
    src = nm.parent(int(sub.out_dst[0]))  # lone edge points at parent node 4
    assert src == 4


def test_induce_residual_full_set_round_trips(chain6):
    sub, nm = induce_residual(chain6, np.arange(chain6.n))
    assert sub.n == chain6.n and sub.m == chain6.m
    np.testing.assert_array_equal(sub.out_indptr, chain6.out_indptr)
    np.testing.assert_array_equal(sub.out_dst, chain6.out_dst)
    np.testing.assert_array_equal(sub.out_p, chain6.out_p)
    np.testing.assert_array_equal(sub.in_src, chain6.in_src)
    for v in range(chain6.n):
        assert nm.parent(v) == v and nm.residual(v) == v


def test_load_twice_is_identical(tmp_path):
    path = tmp_path / "edges.txt"
    path.write_text("0 1 0.25\n5 2 0.5\n2 0 1.0\n")
    a = load_edge_list(path, model="ic", weighting="explicit")
    b = load_edge_list(path, model="ic", weighting="explicit")
    assert a.n == b.n and a.m == b.m
    np.testing.assert_array_equal(a.out_indptr, b.out_indptr)
    np.testing.assert_array_equal(a.out_dst, b.out_dst)
    np.testing.assert_array_equal(a.out_p, b.out_p)
    np.testing.assert_array_equal(a.original_ids, b.original_ids)


def test_induce_residual_keeps_original_ids():
    g = load_edge_list(io.StringIO("10 20\n20 30\n"), model="ic")
    sub, nm = induce_residual(g, np.array([0, 1]))
    assert sub.n == 2
    assert list(sub.original_ids) == [10, 20]


def test_load_edge_list_basics(tmp_path):
    path = tmp_path / "edges.txt"
    path.write_text("# comment line\n\n0 1 0.25\n1 2 0.5\n")
    g = load_edge_list(path, model="ic", weighting="explicit")
    assert g.n == 3 and g.m == 2
    assert g.out_edges(0)[0] == (1, 0.25)


def test_load_edge_list_inv_indeg():
    g = load_edge_list(io.StringIO("0 1\n2 1\n0 2\n"), model="ic")
    # node 1 has indegree 2, node 2 indegree 1
    assert g.in_edges(1)[0][1] == pytest.approx(0.5)
    assert g.in_edges(2)[0][1] == pytest.approx(1.0)


def test_load_edge_list_undirected():
    g = load_edge_list(io.StringIO("0 1\n"), model="ic", undirected=True)
    assert g.m == 2
    assert g.out_edges(1)[0][0] == 0


def test_load_edge_list_compacts_sparse_ids():
    g = load_edge_list(io.StringIO("100 7\n7 500\n"), model="ic")
    assert g.n == 3
    assert list(g.original_ids) == [7, 100, 500]
    dense = load_edge_list(io.StringIO("0 1\n1 2\n"), model="ic")
    assert dense.original_ids is None


def test_load_edge_list_dense_ids():
    g = load_edge_list(io.StringIO("0 5\n"), model="ic", dense_ids=True)
    assert g.n == 6  # isolated ids 1..4 retained
    assert g.original_ids is None


def test_load_edge_list_errors_carry_line_numbers():
    with pytest.raises(GraphFormatError, match="line 2"):
        load_edge_list(io.StringIO("0 1\n0\n"), model="ic")
    with pytest.raises(GraphFormatError, match="line 1"):
        load_edge_list(io.StringIO("0 x\n"), model="ic")
    with pytest.raises(GraphFormatError):
        load_edge_list(io.StringIO("0 1\n"), model="ic", weighting="explicit")


def test_load_edge_list_rejects_unknown_weighting():
    with pytest.raises(GraphFormatError):
        load_edge_list(io.StringIO("0 1\n"), model="ic", weighting="degree")
