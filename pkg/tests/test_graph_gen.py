import itertools

import numpy as np
import pytest

from walk_oracle.graph_core import GraphInputError, GroupSpec
from walk_oracle.graph_gen import (InfeasibleGraph, cartesian_product_graph,
                                   cayley_hypercube_spectrum, complete_graph, gen_abelian_cayley,
                                   gen_alon_roichman, gen_conditioned_regular, gen_cycle,
                                   gen_hypercube, gen_random_regular, simple_acceptance_rate,
                                   tensor_product_graph)
from walk_oracle.stats import estimate_lambda


@pytest.mark.parametrize("n,d", [(10, 3), (50, 4), (7, 6), (100, 0)])
def test_random_regular_is_simple_regular(n, d):
    g = gen_random_regular(n, d, seed=3)
    g.validate()
    assert g.is_simple()
    assert g.adjacency.shape == (n, d)
    assert g.meta["rejections"] >= 0


def test_odd_degree_sum_rejected():
    with pytest.raises(InfeasibleGraph):
        gen_random_regular(7, 3)


def test_degree_too_large():
    with pytest.raises(GraphInputError):
        gen_random_regular(4, 4)


def test_same_seed_same_graph():
    a = gen_random_regular(40, 3, seed=9)
    b = gen_random_regular(40, 3, seed=9)
    assert np.array_equal(a.adjacency, b.adjacency)


def test_conditioned_contains_edges():
    S = [(0, 1), (2, 3), (4, 5)]
    for seed in range(5):
        g = gen_conditioned_regular(30, 3, S, seed=seed)
        g.validate()
        assert g.is_simple()
        assert all(g.has_edge(u, v) for u, v in S)


def test_conditioned_rejects_impossible():
    with pytest.raises(InfeasibleGraph):
        gen_conditioned_regular(10, 2, [(0, 1), (0, 2), (0, 3)])
    with pytest.raises(InfeasibleGraph):
        gen_conditioned_regular(10, 2, [(1, 1)])


def test_conditioned_is_uniform_over_completions():
    # completions of a 3-regular graph on 6 vertices containing edge (0,1):
    # by symmetry each of the 70 graphs contains 9 of the 15 edges, so 42 contain it
    edges = list(itertools.combinations(range(6), 2))
    target = [s for s in itertools.combinations(edges, 9)
              if (0, 1) in s and all(sum(v in e for e in s) == 3 for v in range(6))]
    assert len(target) == 42
    rng = np.random.default_rng(0)
    counts = {}
    for _ in range(8400):
        g = gen_conditioned_regular(6, 3, [(0, 1)], seed=rng)
        key = tuple(g.edge_multiset())
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == {tuple(s) for s in target}
    freq = np.array(list(counts.values())) / 8400
    assert np.abs(freq - 1 / 42).sum() < 0.15


def test_cycle_and_hypercube_shapes():
    c = gen_cycle(8)
    assert (c.n, c.d, c.directed) == (8, 2, False)
    assert sorted(c.neighbors(0)) == [1, 7]
    h = gen_hypercube(4)
    assert (h.n, h.d) == (16, 4)
    assert sorted(h.neighbors(0)) == [1, 2, 4, 8]


def test_directed_cayley():
    g = gen_abelian_cayley(GroupSpec((5,), ((1,), (2,))))
    assert g.directed


def test_alon_roichman_meets_target():
    g = gen_alon_roichman(6, 4, seed=1)
    assert g.meta["lambda"] <= 2 / 3
    # cross-check with the character formula
    eig = cayley_hypercube_spectrum(g.group.generators, 6)
    assert eig[0] == 1.0  # trivial character
    assert abs(np.abs(eig[1:]).max() - g.meta["lambda"]) < 1e-9


def test_products_match_definitions(c3, k4):
    t = tensor_product_graph(c3, k4)
    c = cartesian_product_graph(c3, k4)
    t.validate()
    c.validate()
    for a, b, a2, b2 in itertools.product(range(3), range(4), range(3), range(4)):
        u, v = a * 4 + b, a2 * 4 + b2
        assert t.has_edge(u, v) == (c3.has_edge(a, a2) and k4.has_edge(b, b2))
        assert c.has_edge(u, v) == ((a == a2 and k4.has_edge(b, b2))
                                    or (b == b2 and c3.has_edge(a, a2)))


def test_product_spectra(c3, k4):
    # tensor: products of eigenvalues, here max |1 * -1/2| = 1/2
    assert abs(estimate_lambda(tensor_product_graph(c3, c3)) - 0.5) < 1e-9
    # cartesian: (2 mu + 3 nu) / 5 over mu in {1, -1/2}, nu in {1, -1/3}, not both 1
    assert abs(estimate_lambda(cartesian_product_graph(c3, k4)) - 0.4) < 1e-9


def test_acceptance_rate_small():
    # n=4, d=3: of the 10395 matchings of 12 stubs, 3!^4 = 1296 give K4
    # (checked by enumerating all matchings)
    rate = simple_acceptance_rate(4, 3, 20000, seed=1)
    assert abs(rate - 1296 / 10395) < 0.01


def test_complete_graph():
    g = complete_graph(5)
    assert g.is_simple() and g.d == 4
