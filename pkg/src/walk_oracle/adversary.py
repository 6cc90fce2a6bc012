"""Adversarial harness for local-access walk oracles on random regular graphs.

The distinguisher F flags a partially revealed walk when two consecutive
determined positions are not joined by an edge, or when some long segment
has an induced path length under half its length.  Uniform walks on random
regular graphs almost never trigger it, while an oracle that answers without
probing enough of the graph can be steered into triggering it:

* ``adaptive_attack`` reads the oracle's revealed edges between queries and
  binary-searches toward a contradiction;
* ``oblivious_attack`` issues a fixed query sequence.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .graph_core import (GraphInputError, ProbeSession, QueryBudgetExceeded, RegularGraph,
                         RevealedForest)

INF = math.inf


@dataclass(frozen=True)
class AttackConfig:
    """Thresholds of the distinguisher and the attack (all in units of log2 n).

    ``walk_len`` and ``oblivious_len`` default to floor(sqrt(n) / log2 n) and
    floor(n^(1/4)) when left as None.
    """

    seg_len_const: float = 40.0
    shortness_ratio: float = 0.5
    walk_len: int | None = None
    short_path_ratio: float = 1 / 20
    pushdown_slope: float = 1 / 10
    branch_const: float = 20.0
    pushdown_additive: float = 2.0
    window_const: float = 200.0
    oblivious_len: int | None = None
    query_const: int = 203
    k_d: float = 20.0
    q_d: float = 4060.0

    def __post_init__(self):
        for name in ("seg_len_const", "shortness_ratio", "short_path_ratio", "pushdown_slope",
                     "branch_const", "window_const", "k_d", "q_d"):
            if getattr(self, name) <= 0:
                raise GraphInputError(f"{name} must be positive")
        if self.walk_len is not None and self.walk_len < 2:
            raise GraphInputError("walk_len must be at least 2")

    @staticmethod
    def log(n: int) -> float:
        return math.log2(n)

    def e(self, n: int) -> int:
        if self.walk_len is not None:
            return self.walk_len
        return max(2, math.floor(math.sqrt(n) / math.log2(n)))

    def oblivious_e(self, n: int) -> int:
        if self.oblivious_len is not None:
            return self.oblivious_len
        return max(2, math.isqrt(math.isqrt(n)))

    def segment_threshold(self, n: int) -> float:
        return self.seg_len_const * math.log2(n)

    def max_queries(self, n: int) -> int:
        return self.query_const * math.ceil(math.log2(n))


# ---------------------------------------------------------------------------
# path length and the distinguisher


def path_length(seq: Sequence) -> float:
    """Distance from the first to the last entry over consecutive determined pairs.

    ``None`` marks an undetermined entry.
    """
    if not seq:
        raise ValueError("sequence must be nonempty")
    src, dst = seq[0], seq[-1]
    if src is None or dst is None:
        return INF
    if src == dst:
        return 0
    adj: dict = {}
    for a, b in zip(seq, seq[1:]):
        if a is not None and b is not None:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
    dist = {src: 0}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        for y in adj.get(x, ()):
            if y not in dist:
                dist[y] = dist[x] + 1
                if y == dst:
                    return dist[y]
                queue.append(y)
    return INF


def _edge_key(u, v):
    return (u, v) if u <= v else (v, u)


def clause_one_pairs(responses: Mapping[int, int], is_edge: Callable[[int, int], bool]):
    """Times t with t and t+1 determined and no edge between their vertices."""
    return [t for t in sorted(responses)
            if t + 1 in responses and not is_edge(responses[t], responses[t + 1])]


def short_segments(responses: Mapping[int, int], min_len: float, ratio: float,
                   first_only: bool = True) -> list[tuple[int, int, float]]:
    """Pairs i < j with j - i > min_len and induced path length < ratio * (j - i).

    For each start i the induced graph grows with j; distances from w_i are
    kept up to date by relaxing across each newly added edge.
    """
    times = sorted(responses)
    found = []
    for a, i in enumerate(times):
        src = responses[i]
        dist = {src: 0}
        adj: dict = {}
        prev_t = i
        for j in times[a + 1:]:
            if j == prev_t + 1:
                _insert_edge(adj, dist, responses[prev_t], responses[j])
            prev_t = j
            if j - i > min_len:
                pl = dist.get(responses[j], INF)
                if pl < ratio * (j - i):
                    found.append((i, j, pl))
                    if first_only:
                        return found
    return found


def _insert_edge(adj: dict, dist: dict, u, v) -> None:
    if v in adj.get(u, ()):
        return
    adj.setdefault(u, set()).add(v)
    adj.setdefault(v, set()).add(u)
    queue = deque()
    for a, b in ((u, v), (v, u)):
        if a in dist and dist[a] + 1 < dist.get(b, INF):
            dist[b] = dist[a] + 1
            queue.append(b)
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if dist[x] + 1 < dist.get(y, INF):
                dist[y] = dist[x] + 1
                queue.append(y)


def distinguisher_F(graph: RegularGraph, responses: Mapping[int, int],
                    config: AttackConfig | None = None, revealed=None) -> int:
    """1 when the partial walk shows a non-edge step or a short long segment.

    With ``revealed`` (a set of edges known to the tested algorithm) a step
    counts as a non-edge unless it was revealed; otherwise ``graph`` decides.
    """
    config = config or AttackConfig()
    if revealed is not None:
        directed = graph.directed
        def is_edge(u, v):
            return ((u, v) if directed else _edge_key(u, v)) in revealed
    else:
        is_edge = graph.has_edge
    if clause_one_pairs(responses, is_edge):
        return 1
    if short_segments(responses, config.segment_threshold(graph.n), config.shortness_ratio):
        return 1
    return 0


# ---------------------------------------------------------------------------
# transcripts


@dataclass
class Transcript:
    """Returned positions plus everything the tested algorithm has revealed."""

    responses: dict[int, int]
    session: ProbeSession

    @property
    def revealed(self) -> set:
        return self.session.revealed

    @property
    def forest(self) -> RevealedForest:
        return self.session.forest

    @property
    def events(self) -> list:
        return self.session.events


def known_distance(transcript: Transcript, u: int, v: int) -> float:
    return transcript.forest.distance(u, v)


def known_path(transcript: Transcript, u: int, v: int) -> list[int] | None:
    return transcript.forest.path(u, v)


def forest_monitor(session: ProbeSession) -> list:
    """Live list of ('cycle' | 'merge', probe_index, u, v) events of ``session``."""
    if not session.track:
        raise GraphInputError("forest monitoring needs a tracking session")
    return session.events


def forest_trial(graph: RegularGraph, probes: int, rng, restart_prob: float = 0.5) -> list:
    """Random exploration: each probe extends from a fresh random vertex (with
    probability ``restart_prob``) or from a random already-marked vertex.
    Returns the monitor's events."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    session = ProbeSession(graph, rng)
    events = forest_monitor(session)
    marked = [session.rand_vertex()]
    for _ in range(probes):
        if rng.random() < restart_prob:
            v = session.rand_vertex()
        else:
            v = marked[int(rng.integers(len(marked)))]
        marked.append(session.rand_neighbor(v))
        marked.append(v)
    return events


# ---------------------------------------------------------------------------
# targets


class UniformCheater:
    """Answers every new time with an independent uniform vertex."""

    def __init__(self, session: ProbeSession, start: int):
        self.session = session
        self.answers = {0: start}
        session.mark(start)

    def position(self, t: int) -> int:
        if t not in self.answers:
            self.answers[t] = self.session.rand_vertex()
        return self.answers[t]


class HonestSimulation:
    """Simulates the whole walk up to the largest time asked so far."""

    def __init__(self, session: ProbeSession, start: int):
        self.session = session
        self.walk = [start]
        session.mark(start)

    def position(self, t: int) -> int:
        if t >= len(self.walk):
            self.walk.extend(self.session.rand_path(self.walk[-1], t + 1 - len(self.walk))[1:])
        return self.walk[t]


class ThereAndBackCheater:
    """Walks ``reach`` honest steps, then bounces back and forth along them.

    Every reported step is a real, revealed edge, but long segments have
    short induced paths, so only the second clause of F can catch it.
    """

    def __init__(self, session: ProbeSession, start: int, reach: int):
        if reach < 1:
            raise GraphInputError("reach must be positive")
        self.session = session
        self.reach = reach
        self.path = [start]
        session.mark(start)

    def position(self, t: int) -> int:
        period = 2 * self.reach
        phase = t % period
        idx = phase if phase <= self.reach else period - phase
        if idx >= len(self.path):
            self.path.extend(self.session.rand_path(self.path[-1], idx + 1 - len(self.path))[1:])
        return self.path[idx]


# ---------------------------------------------------------------------------
# attacks


class _Stop(Exception):
    pass


@dataclass
class AttackResult:
    transcript: Transcript
    verdict: int
    queries: int
    forfeit: bool = False
    branch: str = ""
    steps: list = field(default_factory=list)

    def report(self) -> dict:
        s = self.transcript.session
        return {
            "verdict": self.verdict,
            "forfeit": self.forfeit,
            "queries": self.queries,
            "branch": self.branch,
            "steps": self.steps,
            "neighbor_probes": s.neighbor_probes,
            "vertex_probes": s.vertex_probes,
            "revealed_edges": len(s.revealed),
            "events": [list(e) for e in s.events],
        }


class _Run:
    def __init__(self, target, session: ProbeSession, config: AttackConfig, encode, max_queries):
        self.target = target
        self.session = session
        self.config = config
        self.encode = encode or (lambda v: v)
        self.responses: dict[int, int] = {}
        self.queries = 0
        self.max_queries = max_queries
        self.violation: tuple[int, int] | None = None
        self.forfeit = False
        self.steps: list = []

    @property
    def forest(self) -> RevealedForest:
        return self.session.forest

    def ask(self, t: int) -> int:
        if t in self.responses:
            return self.responses[t]
        if self.queries >= self.max_queries:
            self.steps.append(("query-cap", t))
            raise _Stop
        self.queries += 1
        try:
            v = self.encode(self.target.position(t))
        except QueryBudgetExceeded:
            self.forfeit = True
            raise _Stop
        self.responses[t] = v
        self.session.mark(v)
        self._check(t, v)
        return v

    def _check(self, t: int, v: int) -> None:
        """Record the first pair whose known distance exceeds their time gap."""
        if self.violation is not None:
            return
        forest = self.forest
        dist = forest._bfs([v])[0] if v in forest else {v: 0}
        for s, w in self.responses.items():
            if s != t and dist.get(w, INF) > abs(t - s):
                self.violation = (min(s, t), max(s, t))
                return

    def d(self, a: int, b: int) -> float:
        return self.forest.distance(self.responses[a], self.responses[b])

    # -- binary search toward a step with no known edge
    def no_path(self, x: int, y: int) -> tuple[int, int]:
        self.steps.append(("no-path", x, y))
        while y - x > 1:
            m = (x + y) // 2
            self.ask(m)
            if self.d(x, m) > m - x:
                y = m
            else:
                x = m
        self.steps.append(("gap", x, y))
        return x, y

    def _handle_violation(self) -> bool:
        if self.violation is None:
            return False
        self.no_path(*self.violation)
        return True

    # -- pin the walk at vertex u between times a and b
    def pin(self, a: int, b: int, u: int) -> int | None:
        while b - a > 1:
            t = (a + b) // 2
            vt = self.ask(t)
            if vt == u:
                return t
            if self.violation is not None:
                return None
            p = self.forest.path(self.responses[a], vt)
            if p is not None and u in p:
                b = t
            else:
                a = t
        for s in (a, b):
            if self.responses[s] == u:
                return s
        return None

    def spike(self, x: int, y: int, m: int, w: int) -> None:
        self.steps.append(("spike", x, m, y))
        t1 = self.pin(x, m, w)
        if self._handle_violation():
            return
        t2 = self.pin(m, y, w)
        if self._handle_violation():
            return
        self.steps.append(("pinned", t1, t2))

    def push_down(self, x: int, y: int) -> None:
        cfg = self.config
        L = cfg.log(self.session.graph.n)
        window = cfg.window_const * L
        self.steps.append(("push-down", x, y))
        while y - x >= window:
            m = (x + y) // 2
            vm = self.ask(m)
            if self._handle_violation():
                return
            sp = self.forest.path(self.responses[x], self.responses[y])
            if sp is None:
                self.no_path(x, y)
                return
            r, w = self.forest.nearest(sp, vm)
            if r >= cfg.branch_const * L:
                self.spike(x, y, m, w)
                return
            if self.d(x, m) <= self.d(x, y) / 2 + r:
                y = m
            else:
                x = m
            self.steps.append(("narrow", x, y))
        self.steps.append(("window", x, y))
        for t in range(x + 1, y):
            self.ask(t)
            if self._handle_violation():
                return


def _prepare(target, session, config):
    config = config or AttackConfig()
    session = session if session is not None else getattr(target, "session", None)
    if session is None or not session.track:
        raise GraphInputError("the attack needs the target's tracking ProbeSession")
    return config, session


def adaptive_attack(target, config: AttackConfig | None = None, session: ProbeSession | None = None,
                    encode: Callable | None = None, clause1: str = "transcript",
                    max_queries: int | None = None) -> AttackResult:
    """Steer ``target`` into a distinguishable transcript using its revealed edges."""
    config, session = _prepare(target, session, config)
    graph = session.graph
    n = graph.n
    cap = config.max_queries(n) if max_queries is None else max_queries
    run = _Run(target, session, config, encode, cap)
    e = config.e(n)
    branch = ""
    try:
        run.ask(0)
        run.ask(e)
        d0 = run.d(0, e)
        if d0 == INF:
            branch = "no-path"
            run.no_path(0, e)
        elif d0 < e * config.short_path_ratio:
            branch = "too-short"
            run.push_down(0, e)
        else:
            branch = "long-path"
            if run._handle_violation():
                branch = "long-path/no-path"
    except _Stop:
        pass
    return _finish(run, graph, config, clause1, branch)


def oblivious_sequence(n: int, config: AttackConfig | None = None) -> list[int]:
    e = (config or AttackConfig()).oblivious_e(n)
    return [e] + list(range(2, e))


def oblivious_attack(target, config: AttackConfig | None = None,
                     session: ProbeSession | None = None, encode: Callable | None = None,
                     graph: RegularGraph | None = None, clause1: str | None = None) -> AttackResult:
    """Issue the fixed sequence (e, 2, 3, ..., e-1) after the implicit time 0."""
    config = config or AttackConfig()
    session = session if session is not None else getattr(target, "session", None)
    if graph is None:
        if session is None:
            raise GraphInputError("need the target's session or the graph")
        graph = session.graph
    if clause1 is None:
        clause1 = "transcript" if session is not None and session.track else "graph"
    if session is None:
        session = ProbeSession(graph, 0)
    run = _Run(target, session, config, encode, math.inf)
    run._check = lambda t, v: None
    try:
        for t in [0] + oblivious_sequence(graph.n, config):
            run.ask(t)
    except _Stop:
        pass
    return _finish(run, graph, config, clause1, "oblivious")


def _finish(run: _Run, graph, config, clause1: str, branch: str) -> AttackResult:
    if clause1 not in ("transcript", "graph"):
        raise GraphInputError(f"clause1 must be 'transcript' or 'graph', got {clause1!r}")
    revealed = run.session.revealed if clause1 == "transcript" else None
    verdict = distinguisher_F(graph, run.responses, config, revealed)
    transcript = Transcript(dict(run.responses), run.session)
    return AttackResult(transcript, verdict, run.queries, run.forfeit, branch, run.steps)
