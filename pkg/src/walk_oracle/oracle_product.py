"""Local access to walks on small dense graphs and on their products.

:class:`DenseOracle` answers a query from the bridge law
``W^m[v_-, v] * W^(l-m)[v, v_+]`` between the surrounding determined times,
using cached squarings of the transition matrix.  Tensor products query both
factors at the same time; Cartesian products first decide how many of the t
steps moved the first factor (binomial when extending, hypergeometric when
refining) and then query each factor at its own step count.
"""

from __future__ import annotations

import math
import weakref
from bisect import bisect_right
from fractions import Fraction
from itertools import accumulate
from typing import Sequence

import numpy as np

from .graph_core import (GraphInputError, QueryBudgetExceeded, RegularGraph, Timeline,
                         check_time, random_below)
from .sampling import sample_binomial, sample_hypergeometric
from .stats import InfeasibleBridge, SizeCapExceeded

EXACT_MAX_N = 32
DENSE_MAX_N = 4096
_EXACT_BITS = 1 << 14


class PowerCache:
    """Squarings W^(2^j) of one graph, in integer counts or float64.

    Integer mode keeps A^(2^j) as Python ints (weights share the denominator
    d^e, so sampling proportional to them is exact).  Float mode keeps W^(2^j).
    The cache only grows and can be shared by every oracle on the graph.
    """

    def __init__(self, graph: RegularGraph, exact: bool):
        g = graph.materialize()
        if g.n > DENSE_MAX_N:
            raise SizeCapExceeded(f"dense oracle capped at n={DENSE_MAX_N}")
        self.graph = g
        self.exact = exact
        a = g.integer_adjacency()
        self.squares = [a.astype(object) if exact else a.astype(float) / g.d]

    def _square(self, j: int):
        while len(self.squares) <= j:
            m = self.squares[-1]
            self.squares.append(m.dot(m))
        return self.squares[j]

    def row(self, v: int, e: int):
        """Row v of the e-th power."""
        n = self.graph.n
        vec = np.zeros(n, dtype=object if self.exact else float)
        vec[v] = 1
        j = 0
        while e:
            if e & 1:
                vec = vec.dot(self._square(j))
            e >>= 1
            j += 1
        return vec

    def column(self, v: int, e: int):
        """Column v of the e-th power."""
        n = self.graph.n
        vec = np.zeros(n, dtype=object if self.exact else float)
        vec[v] = 1
        j = 0
        while e:
            if e & 1:
                vec = self._square(j).dot(vec)
            e >>= 1
            j += 1
        return vec


_CACHES: "weakref.WeakKeyDictionary[RegularGraph, dict]" = weakref.WeakKeyDictionary()


def power_cache(graph: RegularGraph, exact: bool) -> PowerCache:
    per_graph = _CACHES.setdefault(graph, {})
    if exact not in per_graph:
        per_graph[exact] = PowerCache(graph, exact)
    return per_graph[exact]


class DenseOracle:
    """Walk oracle on a small explicit graph via transition-matrix powers.

    With ``exact=None`` integer arithmetic is used when n <= 32 and the walk
    counts stay below 2^16384 bits; sampling is then exact.  Otherwise
    float64 powers are used and the per-entry rounding error is checked
    against the per-query tolerance eps / budget.
    """

    def __init__(self, graph: RegularGraph, eps: float, budget: int, start: int, rng=None,
                 exact: bool | None = None):
        if eps <= 0:
            raise GraphInputError(f"eps must be positive, got {eps}")
        if budget < 1:
            raise GraphInputError(f"budget must be >= 1, got {budget}")
        self.graph = graph.materialize()
        self.eps = float(eps)
        self.budget = int(budget)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.exact = exact
        self.start = self.graph.check_vertex(start)
        self.determined = Timeline(0, self.start)
        self.queries = 0

    @property
    def tolerance(self) -> float:
        return self.eps / self.budget

    def _use_exact(self, span: int) -> bool:
        if self.exact is not None:
            return self.exact
        g = self.graph
        return g.n <= EXACT_MAX_N and span * math.log2(max(g.d, 2)) <= _EXACT_BITS

    def pin(self, t: int, v: int) -> None:
        """Force the walk through v at time t (no consistency check)."""
        self.determined.insert(check_time(t), self.graph.check_vertex(v))

    def position(self, t) -> int:
        t = check_time(t)
        if self.queries >= self.budget:
            raise QueryBudgetExceeded(f"query budget {self.budget} exhausted")
        self.queries += 1
        det = self.determined
        if t in det:
            return det[t]
        lo, hi = det.brackets(t)
        span = t - lo if hi is None else hi - lo
        exact = self._use_exact(span)
        cache = power_cache(self.graph, exact)
        w = cache.row(det[lo], t - lo)
        if hi is not None:
            w = w * cache.column(det[hi], hi - t)
        v = self._draw(w, exact, span)
        det.insert(t, v)
        return v

    def _draw(self, w, exact: bool, span: int) -> int:
        if exact:
            cum = list(accumulate(int(x) for x in w))
            if cum[-1] == 0:
                raise InfeasibleBridge("pinned endpoints admit no walk of this length")
            return bisect_right(cum, random_below(self.rng, cum[-1]))
        z = float(w.sum())
        if z <= 0:
            raise InfeasibleBridge("pinned endpoints admit no walk of this length")
        n = self.graph.n
        err = 4.0 * n * n * (math.log2(span + 1) + 2) * 2.0 ** -52
        if err > self.tolerance * z:
            raise SizeCapExceeded(f"float64 rounding ({err:.2e}) exceeds tolerance "
                                  f"{self.tolerance:.2e}; use exact mode")
        cum = np.cumsum(w / z)
        return int(min(np.searchsorted(cum, self.rng.random() * cum[-1], side="right"), n - 1))


def _flatten(x) -> tuple:
    if isinstance(x, tuple):
        return tuple(y for part in x for y in _flatten(part))
    return (x,)


class TensorOracle:
    """Walk on G1 x G2: both factors step at every time."""

    def __init__(self, first, second, budget: int):
        self.first, self.second = first, second
        self.budget = int(budget)
        self.queries = 0

    def position(self, t) -> tuple:
        t = check_time(t)
        if self.queries >= self.budget:
            raise QueryBudgetExceeded(f"query budget {self.budget} exhausted")
        self.queries += 1
        return (self.first.position(t), self.second.position(t))


class CartesianOracle:
    """Walk on G1 [] G2: each step moves factor 1 with probability d1 / (d1 + d2).

    ``split`` maps determined times to the number of factor-1 steps so far.
    """

    def __init__(self, first, second, d1: int, d2: int, eps: float, budget: int, rng=None,
                 certified: bool = True):
        if d1 < 1 or d2 < 1:
            raise GraphInputError("component degrees must be positive")
        self.first, self.second = first, second
        self.d1, self.d2 = int(d1), int(d2)
        self.eps = float(eps)
        self.budget = int(budget)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.certified = certified
        self.split = Timeline(0, 0)
        self.queries = 0
        self._p = Fraction(self.d1, self.d1 + self.d2)

    @property
    def tolerance(self) -> float:
        return self.eps / (3 * self.budget)

    def steps_on_first(self, t: int) -> int:
        sp = self.split
        if t in sp:
            return sp[t]
        lo, hi = sp.brackets(t)
        if hi is None:
            s = sp[lo] + sample_binomial(t - lo, self._p, self.tolerance, self.rng, self.certified)
        else:
            marked = sp[hi] - sp[lo]
            s = sp[lo] + sample_hypergeometric(t - lo, marked, hi - lo, self.tolerance, self.rng,
                                               self.certified)
        sp.insert(t, s)
        return s

    def position(self, t) -> tuple:
        t = check_time(t)
        if self.queries >= self.budget:
            raise QueryBudgetExceeded(f"query budget {self.budget} exhausted")
        self.queries += 1
        s = self.steps_on_first(t)
        return (self.first.position(s), self.second.position(t - s))

    def check_invariants(self) -> None:
        items = self.split.items()
        if items[0] != (0, 0):
            raise AssertionError("split must start at s_0 = 0")
        for (a, sa), (b, sb) in zip(items, items[1:]):
            if not 0 <= sb - sa <= b - a:
                raise AssertionError(f"split increment {sb - sa} invalid on ({a}, {b}]")


class PowerOracle:
    """Flattens the nested tuples of a product tree into k-tuples."""

    def __init__(self, root, k: int, kind: str, leaf_tolerance: float, depth: int):
        self.root = root
        self.k = k
        self.kind = kind
        self.leaf_tolerance = leaf_tolerance
        self.depth = depth

    def position(self, t) -> tuple[int, ...]:
        return _flatten(self.root.position(t))


def power_depth(k: int) -> int:
    return (k - 1).bit_length()


def leaf_tolerance(eps: float, budget: int, k: int) -> float:
    """Per-query tolerance of each dense leaf: eps / (budget * 4^ceil(log2 k))."""
    return eps / (budget * 4 ** power_depth(k))


def build_power_oracle(base_graph: RegularGraph, k: int, kind: str, eps: float, budget: int,
                       start=0, rng=None, exact: bool | None = None, certified: bool = True):
    """Oracle for the k-fold tensor or Cartesian power of ``base_graph``.

    The factors are arranged in a balanced binary tree of depth ceil(log2 k).
    Positions are k-tuples of base vertices (factor order matches ``start``
    when a sequence is given).  ``k == 1`` returns the plain dense oracle.
    """
    if kind not in ("tensor", "cartesian"):
        raise GraphInputError(f"unknown product kind {kind!r}")
    if k < 1:
        raise GraphInputError(f"power must be >= 1, got {k}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    starts = [int(start)] * k if isinstance(start, (int, np.integer)) else [int(s) for s in start]
    if len(starts) != k:
        raise GraphInputError(f"need {k} start coordinates, got {len(starts)}")
    depth = power_depth(k)
    leaf_eps = eps / 4 ** depth
    d = base_graph.d

    def build(lo: int, hi: int, node_eps: float):
        count = hi - lo
        if count == 1:
            return DenseOracle(base_graph, leaf_eps, budget, starts[lo], rng, exact), d
        mid = lo + (count + 1) // 2
        left, dl = build(lo, mid, node_eps / 4)
        right, dr = build(mid, hi, node_eps / 4)
        if kind == "tensor":
            return TensorOracle(left, right, budget), dl * dr
        return CartesianOracle(left, right, dl, dr, node_eps, budget, rng, certified), dl + dr

    root, _ = build(0, k, eps)
    if k == 1:
        return root
    return PowerOracle(root, k, kind, leaf_eps / budget, depth)


def product_index(coords: Sequence[int], n: int) -> int:
    """Vertex id of a k-tuple in the explicit product graph (first factor most significant)."""
    idx = 0
    for c in coords:
        idx = idx * n + int(c)
    return idx
