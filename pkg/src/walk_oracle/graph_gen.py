"""Graph families: configuration-model regular graphs, Cayley graphs, products."""

from __future__ import annotations

import logging
import math
import warnings
from typing import Iterable, Sequence

import numpy as np

from .graph_core import GraphInputError, GroupSpec, RegularGraph

log = logging.getLogger(__name__)


class InfeasibleGraph(GraphInputError):
    """No regular graph satisfies the requested parameters."""


class GenerationFailure(RuntimeError):
    pass


def _adjacency_from_pairs(n: int, d: int, pairs: np.ndarray) -> np.ndarray:
    """Slot table from an edge list where every vertex has degree d."""
    ends = np.concatenate([pairs, pairs[:, ::-1]])
    order = np.lexsort((ends[:, 1], ends[:, 0]))
    ends = ends[order]
    return ends[:, 1].reshape(n, d)


def _matching_pairs(stubs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    perm = rng.permutation(stubs)
    return perm.reshape(-1, 2)


def _is_simple_pairs(pairs: np.ndarray, n: int, forbidden: np.ndarray | None = None) -> bool:
    if np.any(pairs[:, 0] == pairs[:, 1]):
        return False
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    codes = lo * n + hi
    if np.unique(codes).size != codes.size:
        return False
    if forbidden is not None and forbidden.size and np.isin(codes, forbidden).any():
        return False
    return True


def gen_random_regular(n: int, d: int, seed=None, max_tries: int = 100000) -> RegularGraph:
    """Uniform simple d-regular graph by configuration model plus rejection.

    ``graph.meta['rejections']`` holds the number of discarded matchings.
    """
    if n * d % 2:
        raise InfeasibleGraph(f"n*d = {n * d} is odd")
    if not 0 <= d < n:
        raise GraphInputError(f"need 0 <= d < n, got d={d}, n={n}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    for tries in range(max_tries):
        pairs = _matching_pairs(stubs, rng)
        if _is_simple_pairs(pairs, n):
            adj = _adjacency_from_pairs(n, d, pairs)
            return RegularGraph(n, d, adj, meta={"family": "regular", "rejections": tries})
    raise GenerationFailure(f"no simple matching in {max_tries} tries (n={n}, d={d})")


def simple_acceptance_rate(n: int, d: int, matchings: int, seed=None) -> float:
    """Fraction of uniform configuration-model matchings that are simple."""
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    ok = sum(_is_simple_pairs(_matching_pairs(stubs, rng), n) for _ in range(matchings))
    return ok / matchings


def gen_conditioned_regular(n: int, d: int, S: Iterable[tuple[int, int]], seed=None,
                            max_tries: int = 100000) -> RegularGraph:
    """Uniform simple d-regular graph containing every edge of ``S``.

    Half-edges already used by S are removed, the rest are matched uniformly,
    and the matching is kept only when it is simple and avoids S.
    """
    S = {(min(u, v), max(u, v)) for u, v in S}
    if n * d % 2:
        raise InfeasibleGraph(f"n*d = {n * d} is odd")
    if not 0 <= d < n:
        raise GraphInputError(f"need 0 <= d < n, got d={d}, n={n}")
    deg = np.zeros(n, dtype=np.int64)
    for u, v in S:
        if u == v:
            raise InfeasibleGraph(f"S contains self-loop at {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphInputError(f"edge ({u},{v}) out of range")
        deg[u] += 1
        deg[v] += 1
    if np.any(deg > d):
        raise InfeasibleGraph("S forces degree above d")
    if len(S) > math.isqrt(n):
        warnings.warn(f"|S|={len(S)} exceeds sqrt(n); rejection may be slow", RuntimeWarning)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d - deg)
    fixed = np.array(sorted(S), dtype=np.int64).reshape(-1, 2)
    forbidden = fixed[:, 0] * n + fixed[:, 1] if fixed.size else np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    for tries in range(max_tries):
        pairs = _matching_pairs(stubs, rng) if stubs.size else np.empty((0, 2), dtype=np.int64)
        if _is_simple_pairs(pairs, n, forbidden):
            allp = np.concatenate([pairs, fixed]) if fixed.size else pairs
            adj = _adjacency_from_pairs(n, d, allp)
            return RegularGraph(n, d, adj, meta={"family": "conditioned", "rejections": tries})
    raise GenerationFailure(f"no admissible matching in {max_tries} tries")


# ---------------------------------------------------------------------------
# Cayley graphs


def gen_abelian_cayley(spec: GroupSpec, materialize_below: int = 1 << 16) -> RegularGraph:
    """Cay(Z_{m_1} x ... x Z_{m_k}, S); directed unless S is inverse-closed."""
    g = RegularGraph(spec.order, spec.degree, directed=not spec.is_symmetric(), group=spec,
                     meta={"family": "cayley"})
    if spec.order <= materialize_below:
        return g.materialize()
    return g


def gen_cycle(n: int) -> RegularGraph:
    if n < 3:
        raise GraphInputError(f"cycle needs n >= 3, got {n}")
    g = gen_abelian_cayley(GroupSpec((n,), ((1,), (n - 1,))))
    g.meta["family"] = "cycle"
    return g


def gen_hypercube(dim: int) -> RegularGraph:
    if dim < 1:
        raise GraphInputError(f"hypercube needs dim >= 1, got {dim}")
    gens = tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim))
    g = gen_abelian_cayley(GroupSpec((2,) * dim, gens))
    g.meta["family"] = "hypercube"
    return g


def gen_alon_roichman(m: int, multiplier: int, seed=None, target: float = 2 / 3,
                      max_tries: int = 200) -> RegularGraph:
    """Random generator multiset over Z_2^m, resampled until lambda <= target.

    The measured lambda is stored in ``graph.meta['lambda']``.
    """
    from .stats import estimate_lambda

    if m < 1 or multiplier < 1:
        raise GraphInputError("need m >= 1 and multiplier >= 1")
    if m > 20:
        raise GraphInputError("certification materializes the graph; m <= 20 supported")
    rng = np.random.default_rng(seed)
    size = multiplier * m
    history = []
    for attempt in range(max_tries):
        elems = rng.integers(0, 2, size=(size, m))
        spec = GroupSpec((2,) * m, tuple(map(tuple, elems.tolist())))
        g = gen_abelian_cayley(spec, materialize_below=1 << 21)
        lam = estimate_lambda(g, seed=attempt)
        history.append(lam)
        if lam <= target:
            g.meta.update(family="ar-expander", attempts=attempt + 1)
            g.meta["lambda"] = lam
            return g
    raise GenerationFailure(
        f"no generator set with lambda <= {target} in {max_tries} tries; "
        f"best {min(history):.4f}, last {history[-1]:.4f}")


def cayley_hypercube_spectrum(gens: Sequence[Sequence[int]], m: int) -> np.ndarray:
    """Exact walk eigenvalues of Cay(Z_2^m, gens): mean of (-1)^(chi.s) per character."""
    chars = np.array([[(x >> i) & 1 for i in range(m)] for x in range(1 << m)])
    g = np.asarray(gens)
    return ((-1.0) ** ((chars @ g.T) % 2)).mean(axis=1)


# ---------------------------------------------------------------------------
# products


def tensor_product_graph(g1: RegularGraph, g2: RegularGraph) -> RegularGraph:
    """G1 x G2 on ids a * n2 + b; slot (i, j) pairs slot i of G1 with slot j of G2."""
    a1, a2 = g1.materialize().adjacency, g2.materialize().adjacency
    n2 = g2.n
    adj = (a1[:, None, :, None] * n2 + a2[None, :, None, :]).reshape(g1.n * n2, g1.d * g2.d)
    return RegularGraph(g1.n * n2, g1.d * g2.d, adj, g1.directed or g2.directed,
                        meta={"family": "tensor"})


def cartesian_product_graph(g1: RegularGraph, g2: RegularGraph) -> RegularGraph:
    """G1 [] G2 on ids a * n2 + b; the first d1 slots move the first coordinate."""
    a1, a2 = g1.materialize().adjacency, g2.materialize().adjacency
    n1, n2 = g1.n, g2.n
    a = np.arange(n1)[:, None]
    b = np.arange(n2)[None, :]
    first = (a1[:, None, :] * n2 + b[:, :, None]).reshape(n1 * n2, g1.d)
    second = (a[:, :, None] * n2 + a2[None, :, :]).reshape(n1 * n2, g2.d)
    adj = np.concatenate([first, second], axis=1)
    return RegularGraph(n1 * n2, g1.d + g2.d, adj, g1.directed or g2.directed,
                        meta={"family": "cartesian"})


def complete_graph(n: int) -> RegularGraph:
    adj = np.array([[w for w in range(n) if w != v] for v in range(n)], dtype=np.int64)
    return RegularGraph(n, n - 1, adj.reshape(n, n - 1), meta={"family": "complete"})
