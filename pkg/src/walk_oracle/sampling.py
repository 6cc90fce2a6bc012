"""Binomial / hypergeometric samplers with an explicit l1 error budget.

Small supports (at most ``TABLE_MAX + 1`` outcomes) use inverse-CDF over an
exact integer CDF quantized to ``prec`` bits.  Larger supports use rejection
from a log-concave envelope (flat core plus two geometric tails) whose
log-pmf comes from ``lgamma``; double precision is used when its error bound
fits inside the budget, otherwise mpmath at a precision derived from ``eps``.
Either way the cost per draw depends on log(t) and log(1/eps), not on t.

Multinomial and multivariate hypergeometric draws chain d-1 univariate draws
with the budget split evenly between them.
"""

from __future__ import annotations

import bisect
import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from .graph_core import random_bits

TABLE_MAX = 256
_F64_UNIT = 2.0 ** -52


class SamplerInputError(ValueError):
    pass


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, (int, np.integer)):
        return Fraction(int(p))
    if isinstance(p, str):
        return Fraction(p)
    return Fraction(p)


def _check_eps(eps: float) -> None:
    if not eps > 0:
        raise SamplerInputError(f"eps must be positive, got {eps}")


def _bits_for(eps: float, outcomes: int) -> int:
    return max(32, math.ceil(math.log2(max(outcomes, 2) / eps)) + 2)


# ---------------------------------------------------------------------------
# exact quantized tables


@lru_cache(maxsize=8192)
def _binomial_table(t: int, a: int, b: int, prec: int) -> tuple[int, ...]:
    weights = [math.comb(t, k) * a**k * (b - a) ** (t - k) for k in range(t + 1)]
    return _quantize(weights, b**t, prec)


@lru_cache(maxsize=8192)
def _hyper_table(m: int, K: int, N: int, prec: int) -> tuple[int, ...]:
    # canonical form m <= K <= N/2, so the support is 0..m
    weights = [math.comb(K, k) * math.comb(N - K, m - k) for k in range(m + 1)]
    return _quantize(weights, math.comb(N, m), prec)


def _quantize(weights: list[int], total: int, prec: int) -> tuple[int, ...]:
    out, acc = [], 0
    for w in weights[:-1]:
        acc += w
        out.append((acc << prec) // total)
    out.append(1 << prec)
    return tuple(out)


def _table_draw(table: Sequence[int], prec: int, rng) -> int:
    # smallest k whose quantized CDF reaches the draw u = (U + 1) / 2^prec
    return bisect.bisect_right(table, random_bits(rng, prec))


# ---------------------------------------------------------------------------
# envelope rejection for large supports


class _Envelope:
    """Dominating envelope for a log-concave pmf on integers ``lo..hi``."""

    __slots__ = ("logpmf", "lo", "hi", "a_l", "a_r", "core", "slope_l", "slope_r",
                 "head_l", "head_r", "mass", "slack", "use_mp", "prec")

    def __init__(self, logpmf, lo, hi, mode, sigma, slack, use_mp, prec):
        self.logpmf = logpmf
        self.lo, self.hi = lo, hi
        self.slack = slack
        self.use_mp = use_mp
        self.prec = prec
        exp = mpmath.exp if use_mp else math.exp
        h = max(1, int(round(sigma)))
        a_r, a_l = min(hi, mode + h), max(lo, mode - h)
        g_mode = logpmf(mode)
        self.slope_r = self.slope_l = None
        # strict log-concavity: two equal neighbours at most, so one extra step suffices
        if a_r < hi:
            s = logpmf(a_r) - logpmf(a_r - 1)
            if s > -4 * slack and a_r + 1 < hi:
                a_r += 1
                s = logpmf(a_r) - logpmf(a_r - 1)
            self.slope_r = min(s + 2 * slack, -slack)
            self.head_r = logpmf(a_r) + slack
        if a_l > lo:
            s = logpmf(a_l) - logpmf(a_l + 1)
            if s > -4 * slack and a_l - 1 > lo:
                a_l -= 1
                s = logpmf(a_l) - logpmf(a_l + 1)
            self.slope_l = min(s + 2 * slack, -slack)
            self.head_l = logpmf(a_l) + slack
        self.a_l, self.a_r = a_l, a_r
        self.core = g_mode + slack
        masses = [(a_r - a_l + 1) * exp(self.core)]
        for slope, head in ((self.slope_l, getattr(self, "head_l", None)),
                            (self.slope_r, getattr(self, "head_r", None))):
            if slope is None:
                masses.append(0)
            else:
                q = exp(slope)
                masses.append(exp(head) * q / (1 - q))
        self.mass = masses

    def draw(self, rng) -> int:
        use_mp = self.use_mp
        if use_mp:
            ctx = mpmath.workprec(self.prec)
            ctx.__enter__()
        try:
            log = mpmath.log if use_mp else math.log
            floor = mpmath.floor if use_mp else math.floor
            total = self.mass[0] + self.mass[1] + self.mass[2]
            while True:
                u = self._uniform(rng) * total
                if u < self.mass[0]:
                    k = self.a_l + int(rng.integers(0, self.a_r - self.a_l + 1))
                    log_env = self.core
                elif u < self.mass[0] + self.mass[1]:
                    j = 1 + int(floor(log(self._uniform(rng)) / self.slope_l))
                    k = self.a_l - j
                    log_env = self.head_l + self.slope_l * j
                else:
                    j = 1 + int(floor(log(self._uniform(rng)) / self.slope_r))
                    k = self.a_r + j
                    log_env = self.head_r + self.slope_r * j
                if k < self.lo or k > self.hi:
                    continue
                if log(self._uniform(rng)) + log_env <= self.logpmf(k):
                    return k
        finally:
            if use_mp:
                ctx.__exit__(None, None, None)

    def _uniform(self, rng):
        # u in (0, 1]
        if self.use_mp:
            bits = self.prec + 8
            return mpmath.mpf(random_bits(rng, bits) + 1) / mpmath.mpf(2) ** bits
        return (int(rng.integers(0, 1 << 53)) + 1) * 2.0 ** -53


def _mp_prec(eps: float, magnitude: float) -> int:
    return math.ceil(math.log2(max(magnitude, 2.0)) + math.log2(16 / eps)) + 16


@lru_cache(maxsize=4096)
def _binomial_envelope(t: int, a: int, b: int, eps: float) -> _Envelope:
    p = a / b
    lq = math.log1p(-p)
    lp = math.log(p)
    magnitude = math.lgamma(t + 1) + t * (abs(lp) + abs(lq)) + 4
    err = 8 * _F64_UNIT * magnitude
    mode = _binomial_mode(t, a, b)
    sigma = math.sqrt(t * p * (1 - p))
    if 8 * err <= eps:
        lt = math.lgamma(t + 1)
        lgamma = math.lgamma

        def logpmf(k):
            return lt - lgamma(k + 1) - lgamma(t - k + 1) + k * lp + (t - k) * lq

        return _Envelope(logpmf, 0, t, mode, sigma, 2 * err, False, 53)
    prec = _mp_prec(eps, magnitude)
    with mpmath.workprec(prec):
        lp_m = mpmath.log(mpmath.mpf(a) / b)
        lq_m = mpmath.log(mpmath.mpf(b - a) / b)
        lt_m = mpmath.loggamma(t + 1)
    slack = mpmath.mpf(2) ** (-(prec - 8)) * magnitude

    def logpmf_mp(k):
        with mpmath.workprec(prec):
            return (lt_m - mpmath.loggamma(k + 1) - mpmath.loggamma(t - k + 1)
                    + k * lp_m + (t - k) * lq_m)

    with mpmath.workprec(prec):
        return _Envelope(logpmf_mp, 0, t, mode, sigma, slack, True, prec)


def _binomial_mode(t: int, a: int, b: int) -> int:
    # f(k+1)/f(k) = (t-k) a / ((k+1)(b-a)); mode = first k where the ratio is <= 1
    k = ((t + 1) * a) // b
    k = min(max(k, 0), t)
    while k > 0 and (t - k + 1) * a < k * (b - a):
        k -= 1
    while k < t and (t - k) * a > (k + 1) * (b - a):
        k += 1
    return k


def _log_choose(n, k, lgamma):
    return lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)


@lru_cache(maxsize=4096)
def _hyper_envelope(m: int, K: int, N: int, eps: float) -> _Envelope:
    magnitude = 3 * math.lgamma(N + 1) + 4
    err = 16 * _F64_UNIT * magnitude
    mode = _hyper_mode(m, K, N)
    frac = K / N
    sigma = math.sqrt(max(m * frac * (1 - frac) * (N - m) / max(N - 1, 1), 0.0))
    if 8 * err <= eps:
        lg = math.lgamma
        base = _log_choose(N, m, lg)

        def logpmf(k):
            return _log_choose(K, k, lg) + _log_choose(N - K, m - k, lg) - base

        return _Envelope(logpmf, 0, m, mode, sigma, 2 * err, False, 53)
    prec = _mp_prec(eps, magnitude)
    with mpmath.workprec(prec):
        base_m = _log_choose(N, m, mpmath.loggamma)
    slack = mpmath.mpf(2) ** (-(prec - 8)) * magnitude

    def logpmf_mp(k):
        with mpmath.workprec(prec):
            lg = mpmath.loggamma
            return _log_choose(K, k, lg) + _log_choose(N - K, m - k, lg) - base_m

    with mpmath.workprec(prec):
        return _Envelope(logpmf_mp, 0, m, mode, sigma, slack, True, prec)


def _hyper_mode(m: int, K: int, N: int) -> int:
    # f(k+1)/f(k) = (K-k)(m-k) / ((k+1)(N-K-m+k+1))
    k = ((m + 1) * (K + 1)) // (N + 2)
    k = min(max(k, 0), m)
    while k > 0 and (K - k + 1) * (m - k + 1) < k * (N - K - m + k):
        k -= 1
    while k < m and (K - k) * (m - k) > (k + 1) * (N - K - m + k + 1):
        k += 1
    return k


def clear_caches() -> None:
    for fn in (_binomial_table, _hyper_table, _binomial_envelope, _hyper_envelope):
        fn.cache_clear()


# ---------------------------------------------------------------------------
# univariate samplers


def sample_binomial(t: int, p, eps: float, rng: np.random.Generator,
                    certified: bool = True) -> int:
    """Bin(t, p) within ``eps`` in l1; ``p`` is taken as an exact rational."""
    _check_eps(eps)
    t = int(t)
    if t < 0:
        raise SamplerInputError("trial count must be non-negative")
    p = _as_fraction(p)
    if not 0 <= p <= 1:
        raise SamplerInputError(f"probability {p} outside [0, 1]")
    if t == 0 or p == 0:
        return 0
    if p == 1:
        return t
    if p > Fraction(1, 2):
        return t - sample_binomial(t, 1 - p, eps, rng, certified)
    if not certified:
        return int(rng.binomial(t, float(p)))
    a, b = p.numerator, p.denominator
    if t <= TABLE_MAX:
        prec = _bits_for(eps, t + 1)
        return _table_draw(_binomial_table(t, a, b, prec), prec, rng)
    return _binomial_envelope(t, a, b, float(eps)).draw(rng)


def sample_hypergeometric(m: int, K: int, N: int, eps: float, rng: np.random.Generator,
                          certified: bool = True) -> int:
    """Marked items among ``m`` drawn without replacement from ``N`` with ``K`` marked."""
    _check_eps(eps)
    m, K, N = int(m), int(K), int(N)
    if N < 0 or not 0 <= K <= N:
        raise SamplerInputError(f"bad population (K={K}, N={N})")
    if not 0 <= m <= N:
        raise SamplerInputError(f"cannot draw {m} from a population of {N}")
    # reduce to m <= K <= N/2; each map is an exact distributional identity
    if 2 * m > N:
        return K - sample_hypergeometric(N - m, K, N, eps, rng, certified)
    if 2 * K > N:
        return m - sample_hypergeometric(m, N - K, N, eps, rng, certified)
    if m > K:
        m, K = K, m
    if m == 0:
        return 0
    if not certified and N < 10**9:
        return int(rng.hypergeometric(K, N - K, m))
    if m <= TABLE_MAX:
        prec = _bits_for(eps, m + 1)
        return _table_draw(_hyper_table(m, K, N, prec), prec, rng)
    return _hyper_envelope(m, K, N, float(eps)).draw(rng)


# ---------------------------------------------------------------------------
# multivariate


def sample_multinomial(t: int, probs: Sequence, eps: float, rng: np.random.Generator,
                       certified: bool = True) -> list[int]:
    """MNom(t, probs) as d-1 chained conditional binomials."""
    _check_eps(eps)
    probs = [_as_fraction(p) for p in probs]
    if not probs:
        raise SamplerInputError("need at least one category")
    if any(p < 0 for p in probs) or sum(probs) != 1:
        raise SamplerInputError("probabilities must be non-negative and sum to exactly 1")
    t = int(t)
    if t < 0:
        raise SamplerInputError("trial count must be non-negative")
    d = len(probs)
    per_draw = eps / max(d - 1, 1)
    out = [0] * d
    remaining, mass_left = t, Fraction(1)
    for i, p in enumerate(probs[:-1]):
        if remaining == 0:
            break
        x = sample_binomial(remaining, p / mass_left if mass_left else 0, per_draw, rng, certified)
        out[i] = x
        remaining -= x
        mass_left -= p
    out[-1] += remaining
    return out


def sample_mv_hypergeometric(m: int, counts: Sequence[int], eps: float,
                             rng: np.random.Generator, certified: bool = True) -> list[int]:
    """MHGeom(m, counts) as d-1 chained univariate hypergeometric draws."""
    _check_eps(eps)
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise SamplerInputError("counts must be non-negative")
    total = sum(counts)
    m = int(m)
    if not 0 <= m <= total:
        raise SamplerInputError(f"cannot draw {m} balls from {total}")
    d = len(counts)
    per_draw = eps / max(d - 1, 1)
    out = [0] * d
    remaining, pool = m, total
    for i, c in enumerate(counts[:-1]):
        if remaining == 0:
            break
        x = sample_hypergeometric(remaining, c, pool, per_draw, rng, certified)
        out[i] = x
        remaining -= x
        pool -= c
    out[-1] += remaining
    return out


# ---------------------------------------------------------------------------
# batch draws over the exact tables (self-test and Monte Carlo use)


def _table_batch(table, prec, rng, size) -> np.ndarray:
    if prec > 62:
        return np.array([_table_draw(table, prec, rng) for _ in range(size)], dtype=np.int64)
    th = np.array(table, dtype=np.uint64)
    u = rng.integers(0, 1 << prec, size=size, dtype=np.uint64)
    return np.searchsorted(th, u, side="right").astype(np.int64)


def binomial_batch(t: int, p, eps: float, rng, size: int) -> np.ndarray:
    p = _as_fraction(p)
    if t == 0 or p == 0:
        return np.zeros(size, dtype=np.int64)
    if p == 1:
        return np.full(size, t, dtype=np.int64)
    if p > Fraction(1, 2):
        return t - binomial_batch(t, 1 - p, eps, rng, size)
    if t > TABLE_MAX:
        return np.array([sample_binomial(t, p, eps, rng) for _ in range(size)], dtype=np.int64)
    prec = _bits_for(eps, t + 1)
    return _table_batch(_binomial_table(t, p.numerator, p.denominator, prec), prec, rng, size)


def multinomial_batch(t: int, probs: Sequence, eps: float, rng, size: int) -> np.ndarray:
    """``size`` independent MNom draws, same algorithm as :func:`sample_multinomial`."""
    probs = [_as_fraction(p) for p in probs]
    if sum(probs) != 1 or any(p < 0 for p in probs):
        raise SamplerInputError("probabilities must be non-negative and sum to exactly 1")
    d = len(probs)
    per_draw = eps / max(d - 1, 1)
    out = np.zeros((size, d), dtype=np.int64)
    remaining = np.full(size, int(t), dtype=np.int64)
    mass_left = Fraction(1)
    for i, p in enumerate(probs[:-1]):
        q = p / mass_left if mass_left else Fraction(0)
        for r in np.unique(remaining):
            idx = np.flatnonzero(remaining == r)
            out[idx, i] = binomial_batch(int(r), q, per_draw, rng, idx.size)
        remaining = remaining - out[:, i]
        mass_left -= p
    out[:, -1] += remaining
    return out


def hypergeometric_batch(m: int, K: int, N: int, eps: float, rng, size: int) -> np.ndarray:
    if 2 * m > N:
        return K - hypergeometric_batch(N - m, K, N, eps, rng, size)
    if 2 * K > N:
        return m - hypergeometric_batch(m, N - K, N, eps, rng, size)
    if m > K:
        m, K = K, m
    if m == 0:
        return np.zeros(size, dtype=np.int64)
    if m > TABLE_MAX:
        return np.array([sample_hypergeometric(m, K, N, eps, rng) for _ in range(size)],
                        dtype=np.int64)
    prec = _bits_for(eps, m + 1)
    return _table_batch(_hyper_table(m, K, N, prec), prec, rng, size)


def mv_hypergeometric_batch(m: int, counts: Sequence[int], eps: float, rng,
                            size: int) -> np.ndarray:
    counts = [int(c) for c in counts]
    total = sum(counts)
    if not 0 <= m <= total:
        raise SamplerInputError(f"cannot draw {m} balls from {total}")
    d = len(counts)
    per_draw = eps / max(d - 1, 1)
    out = np.zeros((size, d), dtype=np.int64)
    remaining = np.full(size, int(m), dtype=np.int64)
    pool = total
    for i, c in enumerate(counts[:-1]):
        for r in np.unique(remaining):
            idx = np.flatnonzero(remaining == r)
            out[idx, i] = hypergeometric_batch(int(r), c, pool, per_draw, rng, idx.size)
        remaining = remaining - out[:, i]
        pool -= c
    out[:, -1] += remaining
    return out


# ---------------------------------------------------------------------------
# exact laws and self-test


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def multinomial_pmf(t: int, probs: Sequence) -> dict[tuple[int, ...], Fraction]:
    """Exact MNom(t, probs) over all count vectors."""
    probs = [_as_fraction(p) for p in probs]
    out = {}
    for c in _compositions(t, len(probs)):
        coef = math.factorial(t)
        val = Fraction(1)
        for k, p in zip(c, probs):
            coef //= math.factorial(k)
            val *= p ** k
        if val:
            out[c] = coef * val
    return out


def mv_hypergeometric_pmf(m: int, counts: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
    """Exact MHGeom(m, counts) over all feasible draw vectors."""
    total = math.comb(sum(counts), m)
    out = {}
    for c in _compositions(m, len(counts)):
        ways = math.prod(math.comb(n, k) for n, k in zip(counts, c))
        if ways:
            out[c] = Fraction(ways, total)
    return out


DEFAULT_GRID = (
    ("multinomial", 1, (Fraction(1, 3), Fraction(2, 3))),
    ("multinomial", 17, (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))),
    ("multinomial", 50, (Fraction(1, 2), Fraction(1, 2))),
    ("multinomial", 50, (Fraction(1, 4), Fraction(1, 4), Fraction(1, 3), Fraction(1, 6))),
    ("mv_hypergeometric", 3, (20, 30)),
    ("mv_hypergeometric", 25, (10, 15, 25)),
    ("mv_hypergeometric", 50, (20, 30, 10)),
    ("mv_hypergeometric", 29, (5, 10, 15, 20)),
)


def selftest_case(kind: str, size: int, param, eps: float, draws: int, rng,
                  null_reps: int = 20) -> dict:
    """Compare ``draws`` batch samples against the exact law.

    The plug-in l1 estimate is biased upward on large supports, so the bound
    is eps plus the mean and three standard deviations of the same estimate
    computed from exact multinomial resampling of the true law.
    """
    if kind == "multinomial":
        pmf = multinomial_pmf(size, param)
        sample = multinomial_batch(size, param, eps, rng, draws)
    elif kind == "mv_hypergeometric":
        pmf = mv_hypergeometric_pmf(size, param)
        sample = mv_hypergeometric_batch(size, param, eps, rng, draws)
    else:
        raise SamplerInputError(f"unknown sampler {kind!r}")
    keys = list(pmf)
    index = {k: i for i, k in enumerate(keys)}
    ref = np.array([float(pmf[k]) for k in keys])
    rows, counts = np.unique(sample, axis=0, return_counts=True)
    emp = np.zeros(len(keys))
    outside = 0
    for row, c in zip(map(tuple, rows.tolist()), counts):
        if row in index:
            emp[index[row]] = c
        else:
            outside += c
    l1 = float(np.abs(emp / draws - ref).sum() + outside / draws)
    null = rng.multinomial(draws, ref / ref.sum(), size=null_reps) / draws
    null_l1 = np.abs(null - ref).sum(axis=1)
    bound = eps + float(null_l1.mean()) + 3 * float(null_l1.std(ddof=1))
    return {"sampler": kind, "size": size, "param": [str(p) for p in param],
            "support": len(keys), "l1": l1, "bound": bound, "null_mean": float(null_l1.mean()),
            "passed": l1 <= bound}


def per_draw_seconds(t: int, eps: float, rng, reps: int = 300, d: int = 4,
                     repeats: int = 5) -> float:
    """Wall time of one certified uniform d-category multinomial draw.

    Best block mean over ``repeats`` blocks, which filters scheduler noise.
    """
    import timeit

    probs = [Fraction(1, d)] * d
    sample_multinomial(t, probs, eps, rng)
    number = max(1, reps // repeats)
    blocks = timeit.repeat(lambda: sample_multinomial(t, probs, eps, rng),
                           repeat=repeats, number=number)
    return min(blocks) / number


def selftest(draws: int = 10**6, eps: float = 1e-6, seed=0, grid=DEFAULT_GRID,
             cost_times: tuple[int, int] = (10**3, 10**9), cost_reps: int = 300) -> dict:
    """Distribution checks over ``grid`` plus the polylog cost check."""
    rng = np.random.default_rng(seed)
    cases = [selftest_case(kind, size, param, eps, draws, rng) for kind, size, param in grid]
    lo, hi = cost_times
    t_lo = per_draw_seconds(lo, eps, rng, cost_reps)
    t_hi = per_draw_seconds(hi, eps, rng, cost_reps)
    allowed = (math.log(hi) / math.log(lo)) ** 3
    cost = {"t_small": lo, "t_large": hi, "sec_small": t_lo, "sec_large": t_hi,
            "ratio": t_hi / t_lo, "allowed": allowed, "passed": t_hi / t_lo <= allowed}
    return {"cases": cases, "cost": cost,
            "passed": all(c["passed"] for c in cases) and cost["passed"]}
