import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from walk_oracle.graph_core import (GraphInputError, GroupSpec, ProbeSession, RegularGraph,
                                    RevealedForest, Timeline, check_time, random_below,
                                    random_bits, read_graph, spawn_rngs, write_graph)
from walk_oracle.graph_gen import gen_abelian_cayley, gen_random_regular


def test_group_spec_index_roundtrip():
    spec = GroupSpec((3, 4, 2), ((1, 0, 0), (0, 1, 1)))
    assert spec.order == 24
    for i in range(24):
        assert spec.to_index(spec.from_index(i)) == i
    assert spec.from_index(1) == (1, 0, 0)  # component 0 least significant


def test_group_spec_rejects_unreduced_generator():
    with pytest.raises(GraphInputError):
        GroupSpec((4,), ((5,),))


def test_symmetry_detection():
    assert GroupSpec((8,), ((1,), (7,))).is_symmetric()
    assert not GroupSpec((8,), ((1,), (1,))).is_symmetric()
    # multiplicities must match too
    assert not GroupSpec((8,), ((1,), (1,), (7,))).is_symmetric()
    # involutions are their own inverse
    assert GroupSpec((2, 2), ((1, 0), (0, 1))).is_symmetric()


def test_implicit_and_explicit_agree():
    spec = GroupSpec((5, 3), ((1, 0), (4, 0), (0, 1), (0, 2)))
    lazy = RegularGraph(spec.order, spec.degree, group=spec)
    full = lazy.materialize()
    for v in range(spec.order):
        assert lazy.neighbors(v) == full.neighbors(v)
        for w in range(spec.order):
            assert lazy.has_edge(v, w) == full.has_edge(v, w)


def test_check_vertex():
    g = gen_random_regular(10, 3, seed=0)
    assert g.check_vertex(np.int64(3)) == 3
    for bad in (-1, 10, 2.5, "1"):
        with pytest.raises(GraphInputError):
            g.check_vertex(bad)


def test_check_time():
    assert check_time(0) == 0
    assert check_time((1 << 63) - 1) == (1 << 63) - 1
    for bad in (-1, 1 << 63, 1.0, True):
        with pytest.raises(GraphInputError):
            check_time(bad)


def test_validate_catches_unmirrored_edge():
    adj = np.array([[1, 2], [0, 2], [0, 0]])
    g = RegularGraph(3, 2, adj)
    with pytest.raises(GraphInputError):
        g.validate()


def test_file_roundtrip(tmp_path):
    g = gen_random_regular(20, 3, seed=4)
    write_graph(g, tmp_path / "g.txt")
    assert (tmp_path / "g.txt").read_text().splitlines()[0] == "20 3 undirected"
    h = read_graph(tmp_path / "g.txt")
    assert np.array_equal(g.adjacency, h.adjacency)
    assert not h.directed


def test_file_with_labels(tmp_path):
    g = gen_abelian_cayley(GroupSpec((6,), ((1,), (5,))))
    write_graph(g, tmp_path / "c6.g", tmp_path / "c6.lab")
    h = read_graph(tmp_path / "c6.g", tmp_path / "c6.lab")
    assert np.array_equal(h.labels, g.labels)


@pytest.mark.parametrize("text", ["", "3 2 sideways\n1 2\n0 2\n0 1\n", "3 2\n1 2\n0 2\n",
                                  "3 2\n1 x\n0 2\n0 1\n"])
def test_malformed_files(tmp_path, text):
    p = tmp_path / "bad.g"
    p.write_text(text)
    with pytest.raises(GraphInputError):
        read_graph(p)


def test_probe_session_counts(rr64):
    s = ProbeSession(rr64, 0)
    path = s.rand_path(5, 10)
    assert len(path) == 11 and path[0] == 5
    assert all(rr64.has_edge(a, b) for a, b in zip(path, path[1:]))
    s.rand_vertex()
    assert s.probe_stats()[:2] == (10, 1)
    assert s.total_probes == 11


def test_untracked_session_reveals_nothing(rr64):
    s = ProbeSession(rr64, 0, track=False)
    s.rand_path(0, 50)
    assert s.neighbor_probes == 50 and not s.revealed and not s.marked


def test_forest_events():
    f = RevealedForest()
    assert f.link(0, 1) == "tree"
    assert f.link(1, 2) == "tree"
    assert f.link(2, 0) == "cycle"
    f.add(7)
    f.add(8)
    assert f.link(7, 8) == "merge"
    assert f.distance(0, 2) == 2  # cycle edge is not in the tree
    assert f.distance(0, 7) == math.inf
    assert f.path(0, 2) == [0, 1, 2]
    assert f.nearest([1, 2], 0) == (1, 1)


def test_timeline_runs():
    tl = Timeline(0, "a")
    tl.insert(10, "b")
    assert tl.brackets(5) == (0, 10)
    assert tl.brackets(11) == (10, None)
    tl.insert_run(3, ["x", "y"])
    assert tl.times == [0, 3, 4, 10]
    with pytest.raises(KeyError):
        tl.insert_run(9, ["p", "q"])
    with pytest.raises(KeyError):
        tl.brackets(3)


@given(st.integers(min_value=1, max_value=1 << 200))
def test_random_below_in_range(bound):
    rng = np.random.default_rng(bound % 1000)
    x = random_below(rng, bound)
    assert 0 <= x < bound


def test_random_bits_width():
    rng = np.random.default_rng(0)
    xs = [random_bits(rng, 100) for _ in range(200)]
    assert all(0 <= x < 1 << 100 for x in xs)
    assert max(xs).bit_length() >= 95


def test_spawn_rngs_reproducible():
    a = [r.integers(1 << 30) for r in spawn_rngs(5, 3)]
    b = [r.integers(1 << 30) for r in spawn_rngs(5, 3)]
    assert a == b and len(set(a)) == 3


@given(st.integers(0, 40), st.integers(0, 2**32 - 1))
def test_walk_steps_are_edges(length, seed):
    g = gen_random_regular(30, 4, seed=seed % 7)
    s = ProbeSession(g, seed)
    path = s.rand_path(seed % 30, length)
    assert all(g.has_edge(a, b) for a, b in zip(path, path[1:]))
    # the forest never holds more tree edges than distinct revealed edges
    assert len(s.revealed) <= length
