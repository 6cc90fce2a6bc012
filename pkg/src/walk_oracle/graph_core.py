"""Regular graphs and the probe-access model.

A :class:`RegularGraph` is either explicit (an ``(n, d)`` slot table) or
implicit (a Cayley graph over a product of cyclic groups).  Algorithms never
read the table directly; they go through a :class:`ProbeSession`, which
counts ``rand_neighbor`` / ``rand_vertex`` probes and records every revealed
edge in a union-find forest so that an adversary can inspect it later.
"""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphInputError(ValueError):
    """Bad vertex id, malformed file or inconsistent graph description."""


class QueryBudgetExceeded(RuntimeError):
    """An oracle was asked more queries than its budget B allows."""


MAX_TIME = 1 << 63


def check_time(t) -> int:
    """Validate a query time: an integer in [0, 2^63)."""
    if isinstance(t, bool) or not isinstance(t, (int, np.integer)):
        raise GraphInputError(f"time must be an integer, got {t!r}")
    t = int(t)
    if not 0 <= t < MAX_TIME:
        raise GraphInputError(f"time {t} outside supported range [0, 2^63)")
    return t


@dataclass(frozen=True)
class GroupSpec:
    """Abelian group Z_{m_1} x ... x Z_{m_k} with an ordered generator list."""

    moduli: tuple[int, ...]
    generators: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "moduli", tuple(int(m) for m in self.moduli))
        object.__setattr__(
            self, "generators", tuple(tuple(int(x) for x in g) for g in self.generators)
        )
        if not self.moduli or any(m < 1 for m in self.moduli):
            raise GraphInputError(f"moduli must be positive, got {self.moduli}")
        if not self.generators:
            raise GraphInputError("generator set must be nonempty")
        for g in self.generators:
            if len(g) != len(self.moduli):
                raise GraphInputError(f"generator {g} has wrong dimension for {self.moduli}")
            if any(not 0 <= x < m for x, m in zip(g, self.moduli)):
                raise GraphInputError(f"generator {g} not reduced mod {self.moduli}")

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def degree(self) -> int:
        return len(self.generators)

    def inverse(self, g: Sequence[int]) -> tuple[int, ...]:
        return tuple((-x) % m for x, m in zip(g, self.moduli))

    def is_symmetric(self) -> bool:
        """True when S is closed under inverses with matching multiplicity."""
        from collections import Counter

        counts = Counter(self.generators)
        return all(counts[self.inverse(g)] == c for g, c in counts.items())

    def add(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        return tuple((x + y) % m for x, y, m in zip(a, b, self.moduli))

    def to_index(self, elem: Sequence[int]) -> int:
        """Mixed-radix id; component 0 is least significant."""
        idx, scale = 0, 1
        for x, m in zip(elem, self.moduli):
            idx += (x % m) * scale
            scale *= m
        return idx

    def from_index(self, idx: int) -> tuple[int, ...]:
        out = []
        for m in self.moduli:
            idx, r = divmod(idx, m)
            out.append(r)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class RegularGraph:
    """An immutable d-regular (multi)graph on vertices ``0..n-1``.

    Explicit graphs carry an ``(n, d)`` integer array of neighbor slots; an
    undirected edge appears in both endpoint rows.  Implicit graphs carry a
    :class:`GroupSpec`; slot ``i`` of ``g`` is ``g + S[i]``.
    """

    n: int
    d: int
    adjacency: np.ndarray | None = None
    directed: bool = False
    labels: np.ndarray | None = None
    group: GroupSpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.adjacency is None and self.group is None:
            raise GraphInputError("graph needs either an adjacency table or a group")
        if self.adjacency is not None:
            adj = np.asarray(self.adjacency, dtype=np.int64)
            if adj.shape != (self.n, self.d):
                raise GraphInputError(f"adjacency shape {adj.shape} != ({self.n}, {self.d})")
            adj.setflags(write=False)
            object.__setattr__(self, "adjacency", adj)
            object.__setattr__(self, "_rows", adj.tolist())
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (self.n, self.d):
                raise GraphInputError("label table must match adjacency shape")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def kind(self) -> str:
        return "explicit" if self.adjacency is not None else "implicit"

    @property
    def undirected(self) -> bool:
        return not self.directed

    def check_vertex(self, v: int) -> int:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.n:
            raise GraphInputError(f"vertex {v!r} out of range 0..{self.n - 1}")
        return int(v)

    def neighbor(self, v: int, slot: int) -> int:
        if self.adjacency is not None:
            return self._rows[v][slot]
        g = self.group
        return g.to_index(g.add(g.from_index(v), g.generators[slot]))

    def neighbors(self, v: int) -> list[int]:
        if self.adjacency is not None:
            return list(self._rows[v])
        return [self.neighbor(v, s) for s in range(self.d)]

    def has_edge(self, u: int, v: int) -> bool:
        if self.adjacency is not None:
            return v in self._rows[u] or (self.undirected and u in self._rows[v])
        g = self.group
        diff = g.add(g.from_index(v), g.inverse(g.from_index(u)))
        return diff in g.generators or (self.undirected and g.inverse(diff) in g.generators)

    def materialize(self, max_n: int = 1 << 22) -> "RegularGraph":
        """Explicit copy of an implicit graph (no-op for explicit graphs)."""
        if self.adjacency is not None:
            return self
        if self.n > max_n:
            raise GraphInputError(f"refusing to materialize {self.n} vertices (cap {max_n})")
        spec = self.group
        ids = np.arange(self.n, dtype=np.int64)
        digits = []
        rem = ids.copy()
        for m in spec.moduli:
            digits.append(rem % m)
            rem //= m
        adj = np.empty((self.n, self.d), dtype=np.int64)
        for s, gen in enumerate(spec.generators):
            idx = np.zeros(self.n, dtype=np.int64)
            scale = 1
            for dig, x, m in zip(digits, gen, spec.moduli):
                idx += ((dig + x) % m) * scale
                scale *= m
            adj[:, s] = idx
        labels = np.tile(np.arange(self.d, dtype=np.int64), (self.n, 1))
        return RegularGraph(self.n, self.d, adj, self.directed, labels, spec, dict(self.meta))

    def edge_multiset(self) -> list[tuple[int, int]]:
        """Undirected edges as sorted pairs, each listed once per multiplicity."""
        adj = self.materialize().adjacency
        pairs = []
        for u in range(self.n):
            for v in adj[u]:
                v = int(v)
                if self.directed:
                    pairs.append((u, v))
                elif u < v:
                    pairs.append((u, v))
                elif u == v:
                    pairs.append((u, u))
        if not self.directed:
            # a self-loop occupies two slots of its vertex
            loops = [p for p in pairs if p[0] == p[1]]
            rest = [p for p in pairs if p[0] != p[1]]
            pairs = rest + loops[::2]
        return sorted(pairs)

    def is_simple(self) -> bool:
        adj = self.materialize().adjacency
        if np.any(adj == np.arange(self.n)[:, None]):
            return False
        srt = np.sort(adj, axis=1)
        return not np.any(srt[:, 1:] == srt[:, :-1])

    def validate(self) -> None:
        """Raise GraphInputError unless every regularity invariant holds."""
        adj = self.materialize().adjacency
        if adj.size and (adj.min() < 0 or adj.max() >= self.n):
            raise GraphInputError("neighbor id out of range")
        if self.directed:
            return
        from collections import Counter

        counts = Counter()
        for u in range(self.n):
            for v in adj[u]:
                counts[(u, int(v))] += 1
        for (u, v), c in counts.items():
            if u != v and counts.get((v, u), 0) != c:
                raise GraphInputError(f"edge ({u},{v}) not mirrored with matching multiplicity")
            if u == v and c % 2:
                raise GraphInputError(f"self-loop at {u} occupies an odd number of slots")

    def walk_matrix(self):
        """Sparse row-stochastic transition matrix W (multi-edges accumulate)."""
        from scipy import sparse

        adj = self.materialize().adjacency
        rows = np.repeat(np.arange(self.n), self.d)
        w = sparse.csr_matrix(
            (np.full(self.n * self.d, 1.0 / self.d), (rows, adj.ravel())), shape=(self.n, self.n)
        )
        w.sum_duplicates()
        return w

    def integer_adjacency(self) -> np.ndarray:
        """Dense count matrix A with A[u, v] = number of slots of u pointing at v."""
        adj = self.materialize().adjacency
        a = np.zeros((self.n, self.n), dtype=np.int64)
        np.add.at(a, (np.repeat(np.arange(self.n), self.d), adj.ravel()), 1)
        return a


# ---------------------------------------------------------------------------
# determined times


class Timeline:
    """Sorted map time -> value with bracket lookup.

    Every oracle keeps one of these for the times it has already fixed.
    """

    def __init__(self, t0: int = 0, v0=None):
        self.times: list[int] = [t0]
        self.values: dict[int, object] = {t0: v0}

    def __contains__(self, t) -> bool:
        return t in self.values

    def __getitem__(self, t):
        return self.values[t]

    def __len__(self) -> int:
        return len(self.times)

    def items(self):
        return [(t, self.values[t]) for t in self.times]

    def brackets(self, t: int) -> tuple[int, int | None]:
        """Largest determined time below t and smallest above (None if none)."""
        i = bisect.bisect_left(self.times, t)
        lo = self.times[i - 1] if i > 0 else None
        hi = self.times[i] if i < len(self.times) else None
        if hi == t:
            raise KeyError(f"time {t} already determined")
        return lo, hi

    def insert(self, t: int, v) -> None:
        if t in self.values:
            raise KeyError(f"time {t} already determined")
        bisect.insort(self.times, t)
        self.values[t] = v

    def insert_run(self, t0: int, vals: Sequence) -> None:
        """Insert ``vals`` at consecutive times t0, t0+1, ... inside one gap."""
        if not vals:
            return
        i = bisect.bisect_left(self.times, t0)
        if i < len(self.times) and self.times[i] < t0 + len(vals):
            raise KeyError(f"run at {t0} overlaps determined times")
        self.times[i:i] = range(t0, t0 + len(vals))
        for k, v in enumerate(vals):
            self.values[t0 + k] = v


# ---------------------------------------------------------------------------
# union-find forest over revealed edges


class RevealedForest:
    """Union-find over marked vertices plus tree adjacency for path queries.

    Edges that would close a cycle are kept in ``extra_edges`` and never
    enter the tree adjacency, so distances keep answering on the pre-cycle
    forest.
    """

    def __init__(self):
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}
        self.tree_adj: dict[int, list[int]] = {}
        self.extra_edges: list[tuple[int, int]] = []

    def __contains__(self, v) -> bool:
        return v in self.parent

    def add(self, v: int) -> bool:
        if v in self.parent:
            return False
        self.parent[v] = v
        self.size[v] = 1
        self.tree_adj[v] = []
        return True

    def find(self, v: int) -> int:
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def link(self, u: int, v: int) -> str:
        """Add edge (u, v); returns 'tree', 'merge' or 'cycle'."""
        new_u = self.add(u)
        new_v = self.add(v)
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            self.extra_edges.append((u, v))
            return "cycle"
        if self.size[ru] < self.size[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        self.size[ru] += self.size[rv]
        self.tree_adj[u].append(v)
        self.tree_adj[v].append(u)
        return "tree" if (new_u or new_v) else "merge"

    def _bfs(self, sources: Iterable[int], target: int | None = None):
        dist: dict[int, int] = {}
        prev: dict[int, int | None] = {}
        queue = deque()
        for s in sources:
            if s in self.parent and s not in dist:
                dist[s] = 0
                prev[s] = None
                queue.append(s)
        adj = self.tree_adj
        while queue:
            x = queue.popleft()
            if x == target:
                break
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    prev[y] = x
                    queue.append(y)
        return dist, prev

    def distance(self, u: int, v: int) -> float:
        if u == v:
            return 0
        if u not in self.parent or v not in self.parent or self.find(u) != self.find(v):
            return math.inf
        dist, _ = self._bfs([u], v)
        return dist.get(v, math.inf)

    def path(self, u: int, v: int) -> list[int] | None:
        if u == v:
            return [u]
        if u not in self.parent or v not in self.parent or self.find(u) != self.find(v):
            return None
        _, prev = self._bfs([u], v)
        if v not in prev:
            return None
        out = [v]
        while out[-1] != u:
            out.append(prev[out[-1]])
        return out[::-1]

    def nearest(self, sources: Sequence[int], v: int) -> tuple[float, int | None]:
        """Distance from v to the closest vertex of ``sources`` and that vertex."""
        if v in sources:
            return 0, v
        if v not in self.parent:
            return math.inf, None
        dist, prev = self._bfs([v])
        best, arg = math.inf, None
        for s in sources:
            if dist.get(s, math.inf) < best:
                best, arg = dist[s], s
        return best, arg


# ---------------------------------------------------------------------------
# probe access


_BUF = 4096


class ProbeSession:
    """Probe access to a graph with accounting.

    ``track=False`` keeps the counters but skips edge/forest bookkeeping,
    which is what the large Monte Carlo runs want.
    """

    def __init__(self, graph: RegularGraph, rng: np.random.Generator | int | None = None,
                 track: bool = True):
        self.graph = graph
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.track = track
        self.neighbor_probes = 0
        self.vertex_probes = 0
        self.revealed: set[tuple[int, int]] = set()
        self.forest = RevealedForest()
        self.events: list[tuple[str, int, int, int]] = []
        self._slots: list[int] = []
        self._slot_pos = 0
        self._verts: list[int] = []
        self._vert_pos = 0

    @property
    def marked(self) -> set[int]:
        return set(self.forest.parent)

    def _next_slot(self) -> int:
        if self._slot_pos >= len(self._slots):
            self._slots = self.rng.integers(0, self.graph.d, size=_BUF).tolist()
            self._slot_pos = 0
        s = self._slots[self._slot_pos]
        self._slot_pos += 1
        return s

    def _next_vertex(self) -> int:
        n = self.graph.n
        if n >= 1 << 62:
            return random_below(self.rng, n)
        if self._vert_pos >= len(self._verts):
            self._verts = self.rng.integers(0, n, size=_BUF).tolist()
            self._vert_pos = 0
        v = self._verts[self._vert_pos]
        self._vert_pos += 1
        return v

    def mark(self, v: int) -> None:
        if self.track:
            self.forest.add(v)

    def _reveal(self, v: int, w: int) -> None:
        key = (v, w) if v <= w or self.graph.directed else (w, v)
        if key in self.revealed:
            return
        self.revealed.add(key)
        self.forest.add(v)
        outcome = self.forest.link(v, w)
        if outcome != "tree":
            self.events.append((outcome, self.neighbor_probes, v, w))

    def rand_neighbor(self, v: int) -> int:
        v = self.graph.check_vertex(v)
        w = self.graph.neighbor(v, self._next_slot())
        self.neighbor_probes += 1
        if self.track:
            self._reveal(v, w)
        return w

    def rand_vertex(self) -> int:
        v = self._next_vertex()
        self.vertex_probes += 1
        if self.track:
            self.forest.add(v)
        return v

    def rand_path(self, v: int, length: int) -> list[int]:
        """``length`` successive rand_neighbor probes from v; returns length+1 vertices."""
        v = self.graph.check_vertex(v)
        path = [v]
        graph = self.graph
        rows = getattr(graph, "_rows", None)
        track = self.track
        for _ in range(length):
            slot = self._next_slot()
            w = rows[v][slot] if rows is not None else graph.neighbor(v, slot)
            self.neighbor_probes += 1
            if track:
                self._reveal(v, w)
            path.append(w)
            v = w
        return path

    def probe_stats(self) -> tuple[int, int, int]:
        return self.neighbor_probes, self.vertex_probes, len(self.revealed)

    @property
    def total_probes(self) -> int:
        return self.neighbor_probes + self.vertex_probes


def probe_stats(session: ProbeSession) -> tuple[int, int, int]:
    return session.probe_stats()


def random_below(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) for arbitrarily large ``bound``."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    if bound <= 1 << 62:
        return int(rng.integers(0, bound))
    bits = (bound - 1).bit_length()
    while True:
        x = random_bits(rng, bits)
        if x < bound:
            return x


def random_bits(rng: np.random.Generator, bits: int) -> int:
    """Uniform integer with ``bits`` random bits."""
    if bits <= 62:
        return int(rng.integers(0, 1 << bits)) if bits > 0 else 0
    words = -(-bits // 32)
    chunk = rng.integers(0, 1 << 32, size=words, dtype=np.uint64).tolist()
    x = 0
    for w in chunk:
        x = (x << 32) | w
    return x >> (words * 32 - bits)


def spawn_rngs(seed, count: int) -> list[np.random.Generator]:
    """Independent, reproducible child streams of a master seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(count)]


# ---------------------------------------------------------------------------
# text format


def write_graph(graph: RegularGraph, path, labels_path=None) -> None:
    g = graph.materialize()
    kind = "directed" if g.directed else "undirected"
    lines = [f"{g.n} {g.d} {kind}"]
    lines.extend(" ".join(map(str, row)) for row in g.adjacency.tolist())
    Path(path).write_text("\n".join(lines) + "\n")
    if labels_path is not None:
        if g.labels is None:
            raise GraphInputError("graph has no labels to write")
        Path(labels_path).write_text(
            "\n".join(" ".join(map(str, row)) for row in g.labels.tolist()) + "\n"
        )


def _parse_table(text: str, n: int, d: int, what: str) -> np.ndarray:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(rows) != n or any(len(r) != d for r in rows):
        raise GraphInputError(f"{what}: expected {n} rows of {d} entries")
    try:
        return np.array([[int(x) for x in r] for r in rows], dtype=np.int64).reshape(n, d)
    except ValueError as exc:
        raise GraphInputError(f"{what}: non-integer entry") from exc


def read_graph(path, labels_path=None) -> RegularGraph:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise GraphInputError(f"{path}: empty graph file")
    head = lines[0].split()
    if len(head) not in (2, 3):
        raise GraphInputError(f"{path}: bad header {lines[0]!r}")
    n, d = int(head[0]), int(head[1])
    kind = head[2] if len(head) == 3 else "undirected"
    if kind not in ("directed", "undirected"):
        raise GraphInputError(f"{path}: unknown graph kind {kind!r}")
    adj = _parse_table("\n".join(lines[1:]), n, d, str(path))
    labels = None
    if labels_path is not None:
        labels = _parse_table(Path(labels_path).read_text(), n, d, str(labels_path))
    g = RegularGraph(n, d, adj, kind == "directed", labels)
    g.validate()
    return g
