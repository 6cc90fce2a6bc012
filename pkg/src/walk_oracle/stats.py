"""Exact reference distributions, l1 / chi-square testing and lambda estimation.

Exact mode works on integer path counts (A^t with denominator d^t) and is
used whenever the integers stay small enough to be cheap; otherwise
float64 powers are used and the result carries an error bound.
"""

from __future__ import annotations

import math
import warnings
import weakref
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, NamedTuple, Sequence

import numpy as np

from .graph_core import RegularGraph

MAX_EXACT_N = 4096
MAX_JOINT_ENTRIES = 1 << 24
_EXACT_BITS = 4096


class InfeasibleBridge(ValueError):
    """The pinned endpoints admit no walk of the requested length."""


class SizeCapExceeded(ValueError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    pass


@dataclass
class Distribution:
    """Probability vector (or array, for joints) over dense vertex ids.

    ``exact`` holds Fractions in the same flattened order when the values
    were computed in rational arithmetic; ``error`` bounds the absolute error
    of each float entry.
    """

    probs: np.ndarray
    exact: tuple[Fraction, ...] | None = None
    error: float = 0.0

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    def __getitem__(self, idx):
        return self.probs[idx]

    def total(self) -> float:
        return float(self.probs.sum())


def l1_distance(p, q) -> float:
    """Sum of absolute differences; both arguments must share a support."""
    a = p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=float)
    b = q.probs if isinstance(q, Distribution) else np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"support mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


# ---------------------------------------------------------------------------
# transition powers


_POWER_CACHE: "weakref.WeakKeyDictionary[RegularGraph, dict]" = weakref.WeakKeyDictionary()


def _explicit(graph: RegularGraph) -> RegularGraph:
    if graph.n > MAX_EXACT_N:
        raise SizeCapExceeded(f"exact computations capped at n={MAX_EXACT_N}")
    return graph.materialize()


def _use_exact(graph: RegularGraph, t: int) -> bool:
    return graph.n <= 64 and t * math.log2(max(graph.d, 2)) <= _EXACT_BITS


def count_power(graph: RegularGraph, t: int) -> np.ndarray:
    """A^t as a Python-int object array (entries count walks of length t)."""
    g = _explicit(graph)
    cache = _POWER_CACHE.setdefault(g, {})
    key = ("int", t)
    if key not in cache:
        a = g.integer_adjacency().astype(object)
        result = np.identity(g.n, dtype=np.int64).astype(object)
        base, e = a, t
        while e:
            if e & 1:
                result = result.dot(base)
            e >>= 1
            if e:
                base = base.dot(base)
        cache[key] = result
    return cache[key]


def walk_power(graph: RegularGraph, t: int) -> np.ndarray:
    """W^t in float64 via repeated squaring."""
    g = _explicit(graph)
    cache = _POWER_CACHE.setdefault(g, {})
    key = ("float", t)
    if key not in cache:
        w = g.integer_adjacency().astype(float) / g.d
        cache[key] = np.linalg.matrix_power(w, t)
    return cache[key]


def _float_error(n: int, t: int) -> float:
    return 4.0 * n * (math.log2(t + 1) + 1) * 2.0 ** -52


def _finish(weights: np.ndarray, exact: bool, n: int, t: int) -> Distribution:
    if exact:
        total = sum(weights.tolist())
        fr = tuple(Fraction(int(w), total) for w in weights.tolist())
        return Distribution(np.array([float(f) for f in fr]), fr, 0.0)
    return Distribution(weights, None, _float_error(n, t))


def exact_marginal(graph: RegularGraph, start: int, t: int,
                   exact: bool | None = None) -> Distribution:
    """Row ``start`` of W^t."""
    g = _explicit(graph)
    g.check_vertex(start)
    if t < 0:
        raise ValueError("t must be non-negative")
    exact = _use_exact(g, t) if exact is None else exact
    if exact:
        return _finish(count_power(g, t)[start].copy(), True, g.n, t)
    return _finish(walk_power(g, t)[start].copy(), False, g.n, t)


def exact_bridge(graph: RegularGraph, v_minus: int, v_plus: int, l: int, m: int,
                 exact: bool | None = None) -> Distribution:
    """Law of the time-m vertex of an l-step walk pinned at both ends."""
    g = _explicit(graph)
    if not 0 <= m <= l:
        raise ValueError(f"need 0 <= m <= l, got m={m}, l={l}")
    exact = _use_exact(g, l) if exact is None else exact
    if exact:
        w = count_power(g, m)[v_minus] * count_power(g, l - m)[:, v_plus]
        if sum(w.tolist()) == 0:
            raise InfeasibleBridge(f"no {l}-step walk from {v_minus} to {v_plus}")
        return _finish(w, True, g.n, l)
    w = walk_power(g, m)[v_minus] * walk_power(g, l - m)[:, v_plus]
    z = w.sum()
    if z <= 0:
        raise InfeasibleBridge(f"no {l}-step walk from {v_minus} to {v_plus}")
    return _finish(w / z, False, g.n, l)


def exact_joint(graph: RegularGraph, start: int, times: Sequence[int],
                exact: bool | None = None) -> Distribution:
    """Joint law of the walk positions at ``times`` (axes in the given order)."""
    g = _explicit(graph)
    times = [int(t) for t in times]
    if not times:
        raise ValueError("need at least one time")
    if len(times) > 6 or g.n > 16:
        raise SizeCapExceeded("exact_joint supports at most 6 times on n <= 16")
    uniq = sorted(set(times))
    n = g.n
    if n ** len(uniq) > MAX_JOINT_ENTRIES:
        raise SizeCapExceeded("joint support too large")
    exact = (_use_exact(g, max(uniq)) and n ** len(uniq) <= 1 << 16) if exact is None else exact
    prev_t = 0
    joint = None
    for t in uniq:
        step = count_power(g, t - prev_t) if exact else walk_power(g, t - prev_t)
        if joint is None:
            joint = step[start].copy()
        else:
            # joint[..., i] * step[i, j] -> joint[..., i, j]
            joint = joint[..., None] * step.reshape((1,) * (joint.ndim - 1) + step.shape)
        prev_t = t
    order = [uniq.index(t) for t in times]
    if len(set(order)) == len(order):
        joint = np.transpose(joint, order) if joint.ndim > 1 else joint
    else:
        joint = _expand_repeats(joint, order, n)
    if exact:
        total = g.d ** max(uniq)
        flat = joint.ravel().tolist()
        fr = tuple(Fraction(int(x), total) for x in flat)
        return Distribution(np.array([float(f) for f in fr]).reshape(joint.shape), fr, 0.0)
    return Distribution(joint.astype(float), None, _float_error(n, max(uniq)) * len(uniq))


def _expand_repeats(joint: np.ndarray, order: list[int], n: int) -> np.ndarray:
    out = np.zeros((n,) * len(order), dtype=joint.dtype)
    for idx in np.ndindex(*joint.shape):
        out[tuple(idx[o] for o in order)] = joint[idx]
    return out


# ---------------------------------------------------------------------------
# spectral bound


DENSE_LAMBDA_N = 2048


def estimate_lambda(graph: RegularGraph, iterations: int = 20000, tolerance: float = 1e-10,
                    seed: int = 0) -> float:
    """Operator norm of W on the complement of constants.

    For undirected graphs this is the largest |eigenvalue| other than the
    trivial one.  Small graphs get a dense SVD of P W P (P projects out
    constants).  Larger undirected graphs use sparse Lanczos (ARPACK) on the
    symmetric W, dropping the eigenvalue nearest 1.  Larger directed graphs
    use power iteration on W^T W with the constant component removed each
    step, warning with NonConvergenceWarning when ``tolerance`` is not met.
    """
    if graph.n <= DENSE_LAMBDA_N:
        a = graph.integer_adjacency().astype(float) / graph.d
        a -= a.mean(axis=0, keepdims=True)
        a -= a.mean(axis=1, keepdims=True)
        return float(np.linalg.norm(a, 2)) if graph.n > 1 else 0.0
    w = graph.walk_matrix()
    if graph.undirected and graph.n > 3:
        from scipy.sparse.linalg import eigsh

        v0 = np.random.default_rng(seed).standard_normal(graph.n)
        vals = eigsh(w.astype(float), k=3, which="LM", tol=tolerance, v0=v0,
                     return_eigenvectors=False)
        vals = np.delete(vals, np.argmin(np.abs(vals - 1.0)))
        return float(np.max(np.abs(vals)))
    wt = w.T.tocsr()
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(graph.n)
    x -= x.mean()
    nx = np.linalg.norm(x)
    if graph.n == 1 or nx == 0:
        return 0.0
    x /= nx
    prev = None
    for _ in range(iterations):
        y = w @ x
        y -= y.mean()
        z = wt @ y
        z -= z.mean()
        est = math.sqrt(max(float(x @ z), 0.0))
        nz = np.linalg.norm(z)
        if nz == 0:
            return 0.0
        x = z / nz
        if prev is not None and abs(est - prev) <= tolerance:
            return est
        prev = est
    warnings.warn(f"power iteration did not reach tolerance {tolerance}", NonConvergenceWarning)
    return est


# ---------------------------------------------------------------------------
# Monte Carlo l1 estimation


class L1Estimate(NamedTuple):
    estimate: float
    ci_width: float
    null_bias: float
    outside_mass: float
    samples: int


def run_sessions(oracle_factory: Callable, queries: Sequence[int], samples: int, seed,
                 encode: Callable[[object], Hashable] | None = None,
                 chunk: int = 1000) -> Counter:
    """Tally response tuples over ``samples`` independent oracle sessions.

    Sessions are grouped in chunks, each fed from its own child stream of
    ``seed``, so tallies are reproducible bit for bit.
    """
    if samples <= 0:
        raise ValueError("need at least one sample")
    encode = encode or (lambda v: v)
    n_chunks = -(-samples // chunk)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    tally: Counter = Counter()
    done = 0
    for ss in seqs:
        rng = np.random.default_rng(ss)
        for _ in range(min(chunk, samples - done)):
            oracle = oracle_factory(rng)
            tally[tuple(encode(oracle.position(t)) for t in queries)] += 1
        done += min(chunk, samples - done)
    return tally


def l1_from_counts(tally: Counter, reference: Distribution, bootstrap: int = 200,
                   seed: int = 0) -> L1Estimate:
    """Plug-in l1 distance of empirical counts to ``reference`` with bootstrap width."""
    total = sum(tally.values())
    if total <= 0:
        raise ValueError("no samples")
    ref = reference.probs
    keys = list(tally)
    counts = np.array([tally[k] for k in keys], dtype=float)
    refv = np.empty(len(keys))
    outside = 0.0
    for i, k in enumerate(keys):
        idx = k if isinstance(k, tuple) else (k,)
        if len(idx) == ref.ndim and all(0 <= j < s for j, s in zip(idx, ref.shape)):
            refv[i] = ref[idx]
        else:
            refv[i] = 0.0
        if refv[i] == 0.0:
            outside += counts[i] / total
    unobserved = max(0.0, 1.0 - refv.sum())
    est = float(np.abs(counts / total - refv).sum() + unobserved)
    rng = np.random.default_rng(seed)
    reps = []
    if bootstrap:
        boot = rng.multinomial(int(total), counts / total, size=bootstrap) / total
        reps = np.abs(boot - refv).sum(axis=1) + unobserved
    width = float((np.quantile(reps, 0.975) - np.quantile(reps, 0.025)) / 2) if bootstrap else 0.0
    flat = ref.ravel()
    flat = flat / flat.sum()
    null = rng.multinomial(int(total), flat, size=8) / total
    null_bias = float(np.abs(null - flat).sum(axis=1).mean())
    return L1Estimate(est, width, null_bias, float(outside), int(total))


def empirical_joint_l1(oracle_factory: Callable, queries: Sequence[int], samples: int,
                       reference: Distribution, seed=0,
                       encode: Callable[[object], Hashable] | None = None,
                       bootstrap: int = 200) -> L1Estimate:
    """Run ``samples`` sessions through ``queries`` and compare to ``reference``."""
    if samples <= 0:
        raise ValueError("need at least one sample")
    tally = run_sessions(oracle_factory, queries, samples, seed, encode)
    return l1_from_counts(tally, reference, bootstrap, seed)


def two_sample_chi2(a: Counter, b: Counter, min_count: int = 10) -> float:
    """p-value of the chi-square homogeneity test between two tallies.

    Cells with fewer than ``min_count`` combined observations are pooled into
    one bucket so the chi-square approximation stays valid.
    """
    from scipy.stats import chi2_contingency

    keys = sorted(set(a) | set(b), key=repr)
    big = [k for k in keys if a.get(k, 0) + b.get(k, 0) >= min_count]
    rare = [k for k in keys if a.get(k, 0) + b.get(k, 0) < min_count]
    rows = [[a.get(k, 0) for k in big], [b.get(k, 0) for k in big]]
    if rare:
        rows[0].append(sum(a.get(k, 0) for k in rare))
        rows[1].append(sum(b.get(k, 0) for k in rare))
    table = np.array(rows, dtype=float)
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 1.0
    return float(chi2_contingency(table, correction=False).pvalue)
