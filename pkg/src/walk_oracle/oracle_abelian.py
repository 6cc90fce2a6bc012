"""Local access to random walks on abelian Cayley graphs.

Because the group is abelian, the position after a segment of the walk only
depends on how many times each generator label was used in it.  The oracle
stores, for each gap between determined times, that label-count vector.
Extending past the last determined time draws a fresh multinomial count;
querying inside a gap splits its counts with a multivariate hypergeometric
draw (the labels of a uniform walk are exchangeable).  Each query costs
O(d) univariate draws regardless of t.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .graph_core import GraphInputError, GroupSpec, QueryBudgetExceeded, Timeline, check_time
from .sampling import sample_multinomial, sample_mv_hypergeometric


def apply_label_counts(v: Sequence[int], counts: Sequence[int], spec: GroupSpec) -> tuple[int, ...]:
    """v + sum_i counts[i] * S[i], componentwise modulo the group moduli."""
    if len(counts) != spec.degree:
        raise GraphInputError(f"expected {spec.degree} label counts, got {len(counts)}")
    if len(v) != len(spec.moduli):
        raise GraphInputError(f"element {tuple(v)} does not match moduli {spec.moduli}")
    out = []
    for j, m in enumerate(spec.moduli):
        acc = int(v[j])
        for c, g in zip(counts, spec.generators):
            if g[j]:
                acc += int(c) * g[j]
        out.append(acc % m)
    return tuple(out)


class AbelianOracle:
    """One lazily sampled walk on Cay(Z_{m_1} x ... x Z_{m_k}, S).

    Positions are residue tuples; ``vertex(t)`` gives the mixed-radix id used
    by :class:`~walk_oracle.graph_core.RegularGraph`.
    """

    def __init__(self, spec: GroupSpec, eps: float, budget: int, start, rng=None,
                 certified: bool = True):
        if eps <= 0:
            raise GraphInputError(f"eps must be positive, got {eps}")
        if budget < 1:
            raise GraphInputError(f"budget must be >= 1, got {budget}")
        self.spec = spec
        self.eps = float(eps)
        self.budget = int(budget)
        self.certified = certified
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        if isinstance(start, (int, np.integer)):
            start = spec.from_index(int(start))
        if len(start) != len(spec.moduli):
            raise GraphInputError(f"start {tuple(start)} does not match moduli {spec.moduli}")
        start = tuple(int(x) % m for x, m in zip(start, spec.moduli))
        self.start = start
        self.determined = Timeline(0, start)
        # counts[t_i] = label counts used on (t_i, t_{i+1}]; the last time has none
        self.counts: dict[int, list[int]] = {}
        self.queries = 0
        self.draws = 0
        self._uniform = [Fraction(1, spec.degree)] * spec.degree

    @property
    def tolerance(self) -> float:
        return self.eps / self.budget

    def position(self, t) -> tuple[int, ...]:
        t = check_time(t)
        if self.queries >= self.budget:
            raise QueryBudgetExceeded(f"query budget {self.budget} exhausted")
        self.queries += 1
        det = self.determined
        if t in det:
            return det[t]
        lo, hi = det.brackets(t)
        if hi is None:
            counts = sample_multinomial(t - lo, self._uniform, self.tolerance, self.rng,
                                        self.certified)
            self.counts[lo] = counts
        else:
            total = self.counts[lo]
            counts = sample_mv_hypergeometric(t - lo, total, self.tolerance, self.rng,
                                              self.certified)
            self.counts[t] = [a - b for a, b in zip(total, counts)]
            self.counts[lo] = counts
        self.draws += 1
        v = apply_label_counts(det[lo], counts, self.spec)
        det.insert(t, v)
        return v

    def vertex(self, t) -> int:
        return self.spec.to_index(self.position(t))

    def check_invariants(self) -> None:
        times = self.determined.times
        if times[0] != 0:
            raise AssertionError("time 0 missing")
        for a, b in zip(times, times[1:]):
            c = self.counts[a]
            if sum(c) != b - a or min(c) < 0:
                raise AssertionError(f"segment ({a}, {b}] has counts {c}")
            if apply_label_counts(self.determined[a], c, self.spec) != self.determined[b]:
                raise AssertionError(f"segment ({a}, {b}] endpoints inconsistent")
        if times[-1] in self.counts:
            raise AssertionError("final time must not carry a segment")


def new_abelian_oracle(spec: GroupSpec, eps: float, budget: int, start, rng=None,
                       certified: bool = True) -> AbelianOracle:
    return AbelianOracle(spec, eps, budget, start, rng, certified)
