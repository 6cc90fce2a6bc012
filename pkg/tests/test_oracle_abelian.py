from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from walk_oracle.graph_core import GraphInputError, GroupSpec, QueryBudgetExceeded
from walk_oracle.graph_gen import gen_abelian_cayley
from walk_oracle.oracle_abelian import AbelianOracle, apply_label_counts
from walk_oracle.stats import empirical_joint_l1, exact_joint, exact_marginal

C4 = GroupSpec((4,), ((1,), (3,)))
CUBE = GroupSpec((2, 2, 2), ((1, 0, 0), (0, 1, 0), (0, 0, 1)))


def test_apply_label_counts_examples():
    assert apply_label_counts((0,), (3, 1), C4) == (2,)
    assert apply_label_counts((1,), (0, 5), C4) == (0,)
    assert apply_label_counts((1, 0, 1), (1, 2, 3), CUBE) == (0, 0, 0)
    with pytest.raises(GraphInputError):
        apply_label_counts((0,), (1,), C4)
    with pytest.raises(GraphInputError):
        apply_label_counts((0, 0), (1, 1), C4)


def test_start_forms():
    assert AbelianOracle(CUBE, 0.1, 2, 5, 0).position(0) == (1, 0, 1)
    assert AbelianOracle(CUBE, 0.1, 2, (1, 1, 0), 0).vertex(0) == 3
    with pytest.raises(GraphInputError):
        AbelianOracle(CUBE, 0.1, 2, (1, 1), 0)


def test_parity_on_bipartite_cycle():
    o = AbelianOracle(C4, 1e-6, 50, 0, 1)
    for t in np.random.default_rng(0).integers(0, 10**15, 49):
        assert o.position(int(t))[0] % 2 == int(t) % 2


def test_huge_times_are_cheap():
    o = AbelianOracle(C4, 1e-6, 4, 0, 2)
    o.position(2**62)
    o.position(2**61 + 1)
    o.position(2**61)
    assert o.draws == 3
    o.check_invariants()


def test_budget_and_memo():
    o = AbelianOracle(C4, 0.1, 2, 0, 3)
    a = o.position(17)
    assert o.position(17) == a and o.draws == 1
    with pytest.raises(QueryBudgetExceeded):
        o.position(3)


def test_reproducible():
    def run():
        o = AbelianOracle(CUBE, 1e-6, 5, 0, 77)
        return [o.position(t) for t in (10**9, 5, 10**6, 10**6 + 1, 6)]

    assert run() == run()


@given(st.lists(st.integers(0, 10**12), min_size=1, max_size=20), st.integers(0, 2**32 - 1))
def test_segments_stay_consistent(times, seed):
    o = AbelianOracle(GroupSpec((6, 5), ((1, 0), (5, 0), (0, 1), (0, 4))), 1e-6,
                      len(times), (2, 3), seed)
    for t in times:
        o.position(t)
        o.check_invariants()


@given(st.lists(st.integers(0, 40), min_size=2, max_size=12), st.integers(0, 2**32 - 1))
def test_consecutive_times_are_adjacent(times, seed):
    spec = GroupSpec((7,), ((1,), (6,), (2,), (5,)))
    g = gen_abelian_cayley(spec)
    o = AbelianOracle(spec, 1e-6, 2 * len(times), 0, seed)
    for t in times:
        a, b = o.vertex(t), o.vertex(t + 1)
        assert g.has_edge(a, b)


def test_marginal_on_c4_matches_exact():
    # after 3 steps from 0 on C4 the walk is at 1 or 3 with probability 1/2 each
    ref = exact_marginal(gen_abelian_cayley(C4), 0, 3)
    assert ref.exact[1] == ref.exact[3] == 0.5
    rng = np.random.default_rng(5)
    counts = Counter(AbelianOracle(C4, 1e-6, 1, 0, rng).vertex(3) for _ in range(4000))
    assert set(counts) == {1, 3}
    assert abs(counts[1] / 4000 - 0.5) < 0.04


def test_joint_law_on_cube_matches_exact():
    g = gen_abelian_cayley(CUBE)
    times = [7, 2, 5]
    ref = exact_joint(g, 0, times)

    class View:
        def __init__(self, rng):
            self.o = AbelianOracle(CUBE, 1e-6, 3, 0, rng)

        def position(self, t):
            return self.o.vertex(t)

    est = empirical_joint_l1(View, times, 30000, ref, seed=1)
    # at most 8 * 4 * 4 = 128 cells with mass: plug-in bias near 0.05 at 3e4 draws
    assert est.estimate < 0.09
    assert est.outside_mass == 0


def test_uncertified_mode_runs():
    o = AbelianOracle(C4, 1e-3, 3, 0, 0, certified=False)
    o.position(10**18)
    o.position(10**17)
    o.check_invariants()
