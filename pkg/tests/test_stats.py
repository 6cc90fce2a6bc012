import itertools
import warnings
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from walk_oracle.graph_gen import complete_graph, gen_cycle, gen_hypercube, gen_random_regular
from walk_oracle.stats import (Distribution, InfeasibleBridge, SizeCapExceeded, exact_bridge,
                               exact_joint, exact_marginal, estimate_lambda, empirical_joint_l1,
                               l1_distance, l1_from_counts, run_sessions, two_sample_chi2)


def enumerate_walks(graph, start, length):
    """Every length-step walk from start, by brute force."""
    walks = [[start]]
    for _ in range(length):
        walks = [w + [x] for w in walks for x in graph.neighbors(w[-1])]
    return walks


def test_marginal_examples(c4, k4):
    assert exact_marginal(c4, 0, 2).exact == (Fraction(1, 2), 0, Fraction(1, 2), 0)
    assert exact_marginal(k4, 0, 1).exact == (0, Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))
    assert exact_marginal(k4, 2, 0).exact == (0, 0, 1, 0)


def test_marginal_matches_enumeration(rr64):
    g = gen_random_regular(10, 3, seed=2)
    walks = enumerate_walks(g, 3, 6)
    counts = Counter(w[-1] for w in walks)
    ref = exact_marginal(g, 3, 6)
    for v in range(10):
        assert ref.exact[v] == Fraction(counts.get(v, 0), len(walks))


def test_bridge_examples(c4):
    assert exact_bridge(c4, 0, 0, 2, 1).exact == (0, Fraction(1, 2), 0, Fraction(1, 2))
    assert exact_bridge(c4, 2, 1, 5, 0).exact == (0, 0, 1, 0)
    with pytest.raises(InfeasibleBridge):
        exact_bridge(c4, 0, 1, 2, 1)
    with pytest.raises(InfeasibleBridge):
        exact_bridge(c4, 0, 1, 2, 1, exact=False)


def test_bridge_matches_enumeration():
    g = gen_random_regular(8, 3, seed=5)
    walks = [w for w in enumerate_walks(g, 0, 6) if w[-1] == 4]
    counts = Counter(w[2] for w in walks)
    ref = exact_bridge(g, 0, 4, 6, 2)
    for v in range(8):
        assert ref.exact[v] == Fraction(counts.get(v, 0), len(walks))


def test_joint_matches_enumeration():
    g = gen_random_regular(6, 3, seed=1)
    walks = enumerate_walks(g, 0, 5)
    counts = Counter((w[4], w[1], w[5]) for w in walks)
    ref = exact_joint(g, 0, [4, 1, 5])
    for idx in itertools.product(range(6), repeat=3):
        assert ref.exact[np.ravel_multi_index(idx, (6, 6, 6))] == Fraction(
            counts.get(idx, 0), len(walks))


def test_joint_consistency(c4):
    j = exact_joint(c4, 0, [1, 2])
    m = exact_marginal(c4, 0, 1)
    assert np.array_equal(j.probs.sum(axis=1), m.probs)
    assert exact_joint(c4, 0, [2]).exact == exact_marginal(c4, 0, 2).exact
    point = exact_joint(c4, 1, [0])
    assert point.exact == (0, 1, 0, 0)


def test_joint_with_repeated_time(k4):
    j = exact_joint(k4, 0, [3, 3])
    assert np.allclose(np.diag(j.probs), exact_marginal(k4, 0, 3).probs)
    assert j.probs.sum() == pytest.approx(1.0)


def test_joint_float_mode_agrees(k4):
    a = exact_joint(k4, 0, [5, 2, 9], exact=True)
    b = exact_joint(k4, 0, [5, 2, 9], exact=False)
    assert np.abs(a.probs - b.probs).max() < 1e-12


def test_joint_caps():
    with pytest.raises(SizeCapExceeded):
        exact_joint(gen_cycle(20), 0, [1, 2])
    with pytest.raises(SizeCapExceeded):
        exact_joint(gen_cycle(4), 0, list(range(1, 8)))


@given(st.integers(0, 60), st.integers(0, 5))
def test_rational_rows_are_stochastic(t, start):
    g = complete_graph(6)
    assert sum(exact_marginal(g, start, t).exact) == 1


def test_l1_examples():
    assert l1_distance([0.2, 0.8], [0.2, 0.8]) == 0
    assert l1_distance([1, 0], [0, 1]) == 2
    assert l1_distance(Distribution([0.5, 0.5]), Distribution([1, 0])) == 1
    with pytest.raises(ValueError):
        l1_distance([1], [0.5, 0.5])


@pytest.mark.parametrize("maker,expected", [
    (lambda: complete_graph(4), 1 / 3),
    (lambda: gen_cycle(4), 1.0),
    (lambda: gen_cycle(3), 0.5),
    (lambda: gen_cycle(9), np.cos(np.pi / 9)),  # |cos(8 pi / 9)|
    (lambda: gen_hypercube(5), 1.0),
    (lambda: complete_graph(10), 1 / 9),
])
def test_lambda_closed_forms(maker, expected):
    assert abs(estimate_lambda(maker()) - expected) < 1e-6


def test_lambda_power_iteration_path():
    # above the dense cutoff the power iteration is used; compare on an odd cycle
    from walk_oracle import stats

    g = gen_cycle(9)
    old = stats.DENSE_LAMBDA_N
    stats.DENSE_LAMBDA_N = 0
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lam = estimate_lambda(g, iterations=200000, tolerance=1e-13)
    finally:
        stats.DENSE_LAMBDA_N = old
    assert abs(lam - np.cos(np.pi / 9)) < 1e-4


class _Fixed:
    def __init__(self, v):
        self.v = v

    def position(self, t):
        return self.v


class _FromReference:
    """Draws a whole tuple from the reference law on first use."""

    def __init__(self, ref, times, rng):
        flat = rng.choice(ref.probs.size, p=ref.probs.ravel())
        self.vals = dict(zip(times, np.unravel_index(flat, ref.shape)))

    def position(self, t):
        return int(self.vals[t])


def test_empirical_l1_self_test(k4):
    times = [1, 2, 3]
    ref = exact_joint(k4, 0, times)
    assert np.count_nonzero(ref.probs) <= 64
    est = empirical_joint_l1(lambda r: _FromReference(ref, times, r), times, 10**5, ref, seed=3)
    assert est.estimate <= 0.05
    assert est.outside_mass == 0


def test_empirical_l1_wrong_oracle(c4):
    ref = exact_joint(c4, 0, [1])
    est = empirical_joint_l1(lambda r: _Fixed(0), [1], 1000, ref)
    assert est.estimate == pytest.approx(2.0)
    assert est.outside_mass == 1.0


def test_zero_samples_rejected(c4):
    with pytest.raises(ValueError):
        empirical_joint_l1(lambda r: _Fixed(0), [1], 0, exact_joint(c4, 0, [1]))


def test_run_sessions_reproducible(k4):
    from walk_oracle.oracle_product import DenseOracle

    def factory(r):
        return DenseOracle(k4, 0.01, 3, 0, r)

    a = run_sessions(factory, [3, 1], 2500, seed=4, chunk=1000)
    b = run_sessions(factory, [3, 1], 2500, seed=4, chunk=1000)
    assert a == b and sum(a.values()) == 2500


def test_two_sample_chi2():
    rng = np.random.default_rng(0)
    a = Counter(rng.integers(0, 5, 5000).tolist())
    b = Counter(rng.integers(0, 5, 5000).tolist())
    assert two_sample_chi2(a, b) > 1e-3
    c = Counter(rng.integers(0, 3, 5000).tolist())
    assert two_sample_chi2(a, c) < 1e-6


def test_l1_from_counts_bias_reported(k4):
    ref = exact_marginal(k4, 0, 1)
    est = l1_from_counts(Counter({1: 30, 2: 35, 3: 35}), ref)
    assert est.samples == 100 and est.null_bias > 0 and est.ci_width > 0
