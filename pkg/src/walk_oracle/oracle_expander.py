"""Local access to random walks on undirected regular expanders.

Given a bound lambda on the non-trivial spectrum, a walk of k steps with
lambda^k <= eps / (n^2 B) is within eps / (n B) of stationary from any start.
Queries are answered from the nearest determined times t_- < t < t_+:

* both gaps longer than 2k: the walk has mixed, so return a uniform vertex;
* exactly one gap at most 2k: simulate the short side step by step;
* both gaps at most 2k: grow random walks from both ends until two of them
  meet at a common endpoint and splice them into a bridge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .graph_core import (GraphInputError, ProbeSession, QueryBudgetExceeded, Timeline,
                         check_time)


@dataclass(frozen=True)
class ExpanderConfig:
    """Tunable constants; defaults follow the analysis (logs base 2)."""

    near_factor: int = 2          # a gap is "short" when it is <= near_factor * k
    iteration_const: float = 2.0  # stitching cap = iteration_const * sqrt(n) * log2(B / eps)


def mixing_steps(n: int, lam: float, eps: float, budget: int) -> int:
    """Smallest k >= 1 with lam^k <= eps / (n^2 * budget)."""
    if not 0 <= lam < 1:
        raise GraphInputError(f"lambda must lie in [0, 1), got {lam}")
    if lam == 0:
        return 1
    target = eps / (n * n * budget)
    if target >= 1:
        return 1
    k = max(1, math.ceil(math.log(1 / target) / math.log(1 / lam)))
    # float log ratios can land one off in either direction
    while k > 1 and lam ** (k - 1) <= target:
        k -= 1
    while lam ** k > target:
        k += 1
    return k


def stitch_cap(n: int, eps: float, budget: int, const: float = 2.0) -> int:
    return max(1, math.floor(const * math.sqrt(n) * math.log2(max(budget / eps, 2.0))))


class StitchResult(NamedTuple):
    path: list[int]
    fallback: bool
    iterations: int


def stitch_bridge(session: ProbeSession, v_left: int, v_right: int, gap: int,
                  iteration_cap: int) -> StitchResult:
    """A gap-step walk from v_left to v_right spliced from two random halves.

    Each iteration draws one walk of ceil(gap/2) steps from v_left and one of
    floor(gap/2) steps from v_right.  The first pair to share an endpoint, in
    (iteration, left-before-right) order, is joined: left walk followed by the
    reversed right walk.  When no pair meets within ``iteration_cap``
    iterations the result is the first left walk padded with its endpoint and
    ``fallback`` is set; that path is not a walk and callers should treat it
    as a failure inside the error budget.
    """
    if gap < 2:
        raise GraphInputError(f"stitching needs gap >= 2, got {gap}")
    if session.graph.directed:
        raise GraphInputError("stitching reverses walks and needs an undirected graph")
    a, b = (gap + 1) // 2, gap // 2
    left_ends: dict[int, list[int]] = {}
    right_ends: dict[int, list[int]] = {}
    first_left = None
    for it in range(1, iteration_cap + 1):
        pl = session.rand_path(v_left, a)
        if first_left is None:
            first_left = pl
        pr = right_ends.get(pl[-1])
        if pr is not None:
            return StitchResult(pl + pr[-2::-1], False, it)
        left_ends.setdefault(pl[-1], pl)
        pr = session.rand_path(v_right, b)
        pl = left_ends.get(pr[-1])
        if pl is not None:
            return StitchResult(pl + pr[-2::-1], False, it)
        right_ends.setdefault(pr[-1], pr)
    path = first_left + [first_left[-1]] * (b - 1) + [v_right]
    return StitchResult(path, True, iteration_cap)


class ExpanderOracle:
    """One lazily sampled walk from ``start`` on an undirected graph."""

    def __init__(self, session: ProbeSession, lam: float, eps: float, budget: int, start: int,
                 config: ExpanderConfig | None = None):
        graph = session.graph
        if graph.directed:
            raise GraphInputError("the expander oracle needs an undirected graph")
        if eps <= 0:
            raise GraphInputError(f"eps must be positive, got {eps}")
        if budget < 1:
            raise GraphInputError(f"budget must be >= 1, got {budget}")
        self.session = session
        self.lam = float(lam)
        self.eps = float(eps)
        self.budget = int(budget)
        self.config = config or ExpanderConfig()
        self.k = mixing_steps(graph.n, self.lam, self.eps, self.budget)
        self.cap = stitch_cap(graph.n, self.eps, self.budget, self.config.iteration_const)
        self.start = graph.check_vertex(start)
        self.determined = Timeline(0, self.start)
        session.mark(self.start)
        self.fallback_count = 0
        self.fallback_brackets: list[tuple[int, int]] = []
        self.queries = 0
        self.last_probes = 0
        self.case_counts = {"memo": 0, "uniform": 0, "forward": 0, "backward": 0, "stitch": 0}

    @property
    def probe_cap(self) -> float:
        """Hard per-query probe bound."""
        n = self.session.graph.n
        return (2 * math.sqrt(n) * math.log2(max(self.budget / self.eps, 2.0))
                * 4 * self.k + 2 * self.k + 1)

    def position(self, t) -> int:
        t = check_time(t)
        if self.queries >= self.budget:
            raise QueryBudgetExceeded(f"query budget {self.budget} exhausted")
        self.queries += 1
        before = self.session.total_probes
        try:
            return self._position(t)
        finally:
            self.last_probes = self.session.total_probes - before

    def _position(self, t: int) -> int:
        det = self.determined
        if t in det:
            self.case_counts["memo"] += 1
            return det[t]
        lo, hi = det.brackets(t)
        near = self.config.near_factor * self.k
        left = t - lo
        right = math.inf if hi is None else hi - t
        session = self.session
        if left > near and right > near:
            self.case_counts["uniform"] += 1
            v = session.rand_vertex()
            det.insert(t, v)
            return v
        if right > near:
            self.case_counts["forward"] += 1
            path = session.rand_path(det[lo], left)
            det.insert_run(lo + 1, path[1:])
            return path[-1]
        if left > near:
            self.case_counts["backward"] += 1
            path = session.rand_path(det[hi], right)
            det.insert_run(t, path[:0:-1])
            return path[-1]
        self.case_counts["stitch"] += 1
        res = stitch_bridge(session, det[lo], det[hi], hi - lo, self.cap)
        if res.fallback:
            self.fallback_count += 1
            self.fallback_brackets.append((lo, hi))
            for v in res.path:
                session.mark(v)
        det.insert_run(lo + 1, res.path[1:-1])
        return det[t]

    def check_invariants(self) -> None:
        times = self.determined.times
        if times[0] != 0:
            raise AssertionError("time 0 missing from determined table")
        for a, b in zip(times, times[1:]):
            if b - a != 1 and b - a < self.config.near_factor * self.k:
                raise AssertionError(f"gap {b - a} between {a} and {b} breaks the gap invariant")


def new_expander_oracle(session: ProbeSession, lam: float, eps: float, budget: int, start: int,
                        config: ExpanderConfig | None = None) -> ExpanderOracle:
    return ExpanderOracle(session, lam, eps, budget, start, config)
