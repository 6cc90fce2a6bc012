"""Command-line entry point: ``walk-oracle {gen,walk,verify,attack,bench,sample-selftest}``.

Every artifact starts with a JSON header holding the version, the seed and
the full run configuration.  Reports are JSON lines.  Exit codes: 0 success,
1 runtime failure or failed check, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .graph_core import (GraphInputError, GroupSpec, ProbeSession, QueryBudgetExceeded,
                         read_graph, write_graph)

log = logging.getLogger("walk_oracle")

ALGOS = ("expander", "abelian", "dense", "tensor-power", "cartesian-power")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def resolve_seed(seed):
    if seed is not None:
        return int(seed)
    env = os.environ.get("WALK_ORACLE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"WALK_ORACLE_SEED must be an integer, got {env!r}") from exc
    return int(np.random.SeedSequence().entropy % (1 << 63))


def parse_moduli(text: str) -> tuple[int, ...]:
    try:
        mods = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"bad --moduli {text!r}") from exc
    if not mods:
        raise UsageError("--moduli is empty")
    return mods


def parse_gens(text: str, moduli: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """Generators as residues.

    With one modulus, ``1,15`` lists two generators.  With several moduli,
    generators are separated by ``;`` and components by ``,`` (``1,0;0,1``).
    Negative entries are reduced modulo the matching modulus.
    """
    try:
        if len(moduli) == 1:
            gens = [(int(x),) for x in text.split(",") if x.strip()]
        else:
            gens = [tuple(int(x) for x in g.split(",")) for g in text.split(";") if g.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --gens {text!r}") from exc
    if not gens:
        raise UsageError("--gens is empty")
    if any(len(g) != len(moduli) for g in gens):
        raise UsageError(f"each generator needs {len(moduli)} components")
    return tuple(tuple(x % m for x, m in zip(g, moduli)) for g in gens)


def parse_sizes(text: str) -> list[int]:
    """``256..16384`` (powers of two in range) or a comma list."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            if lo < 1 or hi < lo:
                raise ValueError
            sizes = []
            p = 1 << max(0, (lo - 1).bit_length())
            while p <= hi:
                sizes.append(p)
                p <<= 1
            if not sizes:
                raise ValueError
            return sizes
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --sizes {text!r}") from exc


def read_queries(path: str) -> list[int]:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    out = []
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            t = int(line)
        except ValueError as exc:
            raise GraphInputError(f"{path}:{ln}: not an integer: {line!r}") from exc
        if t < 0:
            raise GraphInputError(f"{path}:{ln}: negative time {t}")
        out.append(t)
    return out


def header(kind: str, seed, config: dict) -> dict:
    return {"kind": kind, "version": __version__, "seed": seed, "config": config}


def write_jsonl(path, rows) -> None:
    text = "".join(json.dumps(r, sort_keys=True, default=str) + "\n" for r in rows)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def config_of(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


# ---------------------------------------------------------------------------
# oracle construction


def load_graph(args):
    if getattr(args, "graph", None):
        return read_graph(args.graph, getattr(args, "labels", None))
    if getattr(args, "moduli", None) and getattr(args, "gens", None):
        from .graph_gen import gen_abelian_cayley

        mods = parse_moduli(args.moduli)
        return gen_abelian_cayley(GroupSpec(mods, parse_gens(args.gens, mods)),
                                  materialize_below=0)
    raise UsageError("need --graph FILE (or --moduli/--gens for abelian)")


def group_spec(args, graph) -> GroupSpec:
    if args.moduli and args.gens:
        mods = parse_moduli(args.moduli)
        return GroupSpec(mods, parse_gens(args.gens, mods))
    if graph is not None and graph.group is not None:
        return graph.group
    raise UsageError("--algo abelian needs --moduli and --gens")


def resolve_lambda(args, graph) -> float:
    if args.lam is not None:
        if not 0 <= args.lam < 1:
            raise UsageError("--lambda must lie in [0, 1)")
        return args.lam
    from .stats import estimate_lambda

    lam = estimate_lambda(graph)
    print(f"note: estimated lambda = {lam:.6f} (no --lambda given)", file=sys.stderr)
    if lam >= 1:
        raise GraphInputError("graph is not an expander (lambda >= 1); pass --lambda")
    return lam


def oracle_factory(args, graph, budget: int, track: bool = False):
    """Returns (make(rng) -> oracle, encode, extra config)."""
    algo = args.algo
    eps = args.eps
    start = args.start
    extra: dict = {}
    if algo == "expander":
        from .oracle_expander import ExpanderOracle

        lam = resolve_lambda(args, graph)
        extra["lambda_used"] = lam

        def make(rng):
            return ExpanderOracle(ProbeSession(graph, rng, track=track), lam, eps, budget, start)
        return make, int, extra
    if algo == "abelian":
        from .oracle_abelian import AbelianOracle

        spec = group_spec(args, graph)

        def make(rng):
            return AbelianOracle(spec, eps, budget, start, rng)
        return make, spec.to_index, extra
    if algo == "dense":
        from .oracle_product import DenseOracle

        def make(rng):
            return DenseOracle(graph, eps, budget, start, rng)
        return make, int, extra
    if algo in ("tensor-power", "cartesian-power"):
        from .oracle_product import build_power_oracle, product_index

        kind = algo.split("-")[0]
        k = args.k
        n = graph.n

        def make(rng):
            return build_power_oracle(graph, k, kind, eps, budget, start, rng)
        encode = int if k == 1 else (lambda v: product_index(v, n))
        return make, encode, extra
    raise UsageError(f"unknown --algo {algo!r}")


def explicit_reference_graph(args, graph):
    """The explicit graph whose walk the chosen oracle simulates."""
    from .graph_gen import cartesian_product_graph, tensor_product_graph

    if args.algo == "abelian":
        return graph.materialize()
    if args.algo in ("tensor-power", "cartesian-power"):
        combine = tensor_product_graph if args.algo == "tensor-power" else cartesian_product_graph
        out = graph
        for _ in range(args.k - 1):
            out = combine(out, graph)
        return out
    return graph


def reference_start(args, graph) -> int:
    if args.algo in ("tensor-power", "cartesian-power"):
        from .oracle_product import product_index

        return product_index([args.start] * args.k, graph.n)
    return args.start


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    from . import graph_gen as gg

    seed = resolve_seed(args.seed)
    fam = args.family
    if fam == "regular":
        g = gg.gen_random_regular(args.n, args.d, seed=seed)
    elif fam == "cycle":
        g = gg.gen_cycle(args.n)
    elif fam == "hypercube":
        g = gg.gen_hypercube(args.dim)
    elif fam == "complete":
        g = gg.complete_graph(args.n)
    elif fam == "cayley":
        mods = parse_moduli(args.moduli or "")
        g = gg.gen_abelian_cayley(GroupSpec(mods, parse_gens(args.gens or "", mods)))
    elif fam == "alon-roichman":
        g = gg.gen_alon_roichman(args.dim, args.multiplier, seed=seed)
    else:
        raise UsageError(f"unknown family {fam!r}")
    labels = args.out + ".labels" if g.labels is not None else None
    write_graph(g, args.out, labels)
    meta = header("graph", seed, config_of(args))
    meta["graph"] = {"n": g.n, "d": g.d, "directed": g.directed, **g.meta}
    Path(args.out + ".meta.json").write_text(json.dumps(meta, sort_keys=True, default=str) + "\n")
    print(f"wrote {args.out}: n={g.n} d={g.d} {'directed' if g.directed else 'undirected'}",
          file=sys.stderr)
    return 0


def cmd_walk(args) -> int:
    seed = resolve_seed(args.seed)
    queries = read_queries(args.queries)
    graph = None if (args.algo == "abelian" and not args.graph) else load_graph(args)
    budget = args.budget or max(1, len(queries))
    make, encode, extra = oracle_factory(args, graph, budget)
    oracle = make(np.random.default_rng(seed))
    conf = config_of(args)
    conf.update(extra, budget=budget)
    lines = ["# " + json.dumps(header("walk", seed, conf), sort_keys=True, default=str)]
    for t in queries:
        lines.append(f"{t} {encode(oracle.position(t))}")
    text = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def cmd_verify(args) -> int:
    from .stats import empirical_joint_l1, exact_joint

    seed = resolve_seed(args.seed)
    queries = read_queries(args.queries)
    if not queries:
        raise GraphInputError("query file is empty")
    graph = load_graph(args)
    budget = args.budget or len(queries)
    make, encode, extra = oracle_factory(args, graph, budget)
    ref_graph = explicit_reference_graph(args, graph)
    reference = exact_joint(ref_graph, reference_start(args, graph), queries)
    est = empirical_joint_l1(make, queries, args.samples, reference, seed, encode)
    passed = est.estimate <= args.threshold
    conf = config_of(args)
    conf.update(extra, budget=budget)
    result = {"l1": est.estimate, "ci_halfwidth": est.ci_width, "null_bias": est.null_bias,
              "outside_mass": est.outside_mass, "samples": est.samples,
              "threshold": args.threshold, "passed": passed}
    print(f"l1 = {est.estimate:.4f} +/- {est.ci_width:.4f} (null bias {est.null_bias:.4f}, "
          f"threshold {args.threshold}) -> {'PASS' if passed else 'FAIL'}")
    if args.report:
        write_jsonl(args.report, [header("verify", seed, conf), result])
    return 0 if passed else 1


def _attack_trial(args, base_graph, child: np.random.SeedSequence, lam_cache: dict) -> dict:
    from .adversary import (AttackConfig, HonestSimulation, UniformCheater, adaptive_attack,
                            oblivious_attack)
    from .graph_gen import gen_random_regular

    gseed, oseed = child.spawn(2)
    graph = base_graph if base_graph is not None else gen_random_regular(
        args.n, args.d, seed=np.random.default_rng(gseed))
    rng = np.random.default_rng(oseed)
    session = ProbeSession(graph, rng)
    cfg = AttackConfig(seg_len_const=args.seg_len_const, walk_len=args.walk_len)
    start = args.start
    encode = None
    target_name = args.target
    if target_name == "cheater":
        target = UniformCheater(session, start)
    elif target_name == "honest":
        target = HonestSimulation(session, start)
    elif target_name == "expander":
        from .oracle_expander import ExpanderOracle

        if args.lam is not None:
            lam = args.lam
        else:
            key = id(graph)
            if key not in lam_cache:
                from .stats import estimate_lambda

                lam_cache[key] = estimate_lambda(graph)
            lam = lam_cache[key]
        budget = args.budget or cfg.max_queries(graph.n) + 1
        target = ExpanderOracle(session, lam, args.eps, budget, start)
    elif target_name == "dense":
        from .oracle_product import DenseOracle

        target = DenseOracle(graph, args.eps, args.budget or cfg.max_queries(graph.n) + 1,
                             start, rng)
    elif target_name == "abelian":
        from .oracle_abelian import AbelianOracle

        spec = group_spec(args, graph)
        target = AbelianOracle(spec, args.eps, args.budget or cfg.max_queries(graph.n) + 1,
                               start, rng)
        encode = spec.to_index
    else:
        raise UsageError(f"unknown target {target_name!r}")
    if args.mode == "adaptive":
        res = adaptive_attack(target, cfg, session, encode, clause1=args.clause1)
    else:
        res = oblivious_attack(target, cfg, session, encode, clause1=args.clause1)
    return res.report()


def cmd_attack(args) -> int:
    seed = resolve_seed(args.seed)
    base_graph = load_graph(args) if (args.graph or args.moduli) else None
    if base_graph is None and (args.n is None or args.d is None):
        raise UsageError("attack needs --graph FILE or --n/--d")
    children = np.random.SeedSequence(seed).spawn(args.trials)
    lam_cache: dict = {}
    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as pool:
            rows = list(pool.map(lambda c: _attack_trial(args, base_graph, c, lam_cache),
                                 children))
    else:
        rows = [_attack_trial(args, base_graph, c, lam_cache) for c in children]
    for i, r in enumerate(rows):
        r["trial"] = i
    rate = sum(r["verdict"] for r in rows) / len(rows)
    summary = {"summary": True, "trials": len(rows), "verdict_rate": rate,
               "forfeits": sum(r["forfeit"] for r in rows),
               "max_queries": max(r["queries"] for r in rows)}
    print(f"{args.mode} attack on {args.target}: F=1 in {rate:.3f} of {len(rows)} trials")
    if args.report:
        write_jsonl(args.report, [header("attack", seed, config_of(args))] + rows + [summary])
    return 0


def bench_expander(sizes, trials: int, d: int, lam: float, eps: float, seed,
                   graphs_per_size: int = 1) -> dict:
    """Mean probes per query of the expander oracle on random d-regular graphs.

    Each trial is a fresh walk with queries at 4k (uniform jump) and then 2k
    (bridge stitching between 0 and 4k).
    """
    from .graph_gen import gen_random_regular
    from .oracle_expander import ExpanderOracle

    rows = []
    ss = np.random.SeedSequence(seed)
    for n, child in zip(sizes, ss.spawn(len(sizes))):
        gseeds = child.spawn(graphs_per_size + trials)
        graphs = [gen_random_regular(n, d, seed=np.random.default_rng(s))
                  for s in gseeds[:graphs_per_size]]
        per_query, fallbacks = [], 0
        t0 = time.perf_counter()
        for i, s in enumerate(gseeds[graphs_per_size:]):
            g = graphs[i % graphs_per_size]
            oracle = ExpanderOracle(ProbeSession(g, np.random.default_rng(s), track=False),
                                    lam, eps, 2, 0)
            k = oracle.k
            oracle.position(4 * k)
            oracle.position(2 * k)
            per_query.append(oracle.session.total_probes / 2)
            fallbacks += oracle.fallback_count
        rows.append({"n": n, "k": k, "mean_probes_per_query": float(np.mean(per_query)),
                     "std": float(np.std(per_query)), "trials": trials,
                     "fallbacks": fallbacks, "seconds": time.perf_counter() - t0})
    x = np.log([r["n"] for r in rows])
    y = np.log([r["mean_probes_per_query"] for r in rows])
    slope = float(np.polyfit(x, y, 1)[0]) if len(rows) > 1 else float("nan")
    return {"rows": rows, "slope": slope}


def cmd_bench(args) -> int:
    if args.algo != "expander":
        raise UsageError("bench currently supports --algo expander")
    seed = resolve_seed(args.seed)
    sizes = parse_sizes(args.sizes)
    res = bench_expander(sizes, args.trials, args.d, args.lam, args.eps, seed)
    for r in res["rows"]:
        print(f"n={r['n']:>7} k={r['k']:>4} probes/query={r['mean_probes_per_query']:.1f}")
    lo, hi = args.slope_range
    ok = lo <= res["slope"] <= hi
    print(f"log-log slope = {res['slope']:.3f} (expected in [{lo}, {hi}]) -> "
          f"{'PASS' if ok else 'FAIL'}")
    if args.report:
        write_jsonl(args.report, [header("bench", seed, config_of(args))] + res["rows"]
                    + [{"summary": True, "slope": res["slope"], "passed": ok}])
    return 0 if ok else 1


def cmd_selftest(args) -> int:
    from .sampling import selftest

    seed = resolve_seed(args.seed)
    res = selftest(draws=args.draws, eps=args.eps, seed=seed)
    for c in res["cases"]:
        print(f"{c['sampler']:>18} size={c['size']:>3} support={c['support']:>6} "
              f"l1={c['l1']:.5f} bound={c['bound']:.5f} {'ok' if c['passed'] else 'FAIL'}")
    c = res["cost"]
    print(f"cost t={c['t_small']}: {c['sec_small'] * 1e6:.1f}us, t={c['t_large']}: "
          f"{c['sec_large'] * 1e6:.1f}us, ratio {c['ratio']:.1f} (allowed {c['allowed']:.0f})")
    if args.report:
        write_jsonl(args.report, [header("sample-selftest", seed, config_of(args))]
                    + res["cases"] + [c])
    return 0 if res["passed"] else 1


# ---------------------------------------------------------------------------
# argument parser


def _oracle_args(p, with_queries=True):
    p.add_argument("--graph", help="graph file (header 'n d directed|undirected')")
    p.add_argument("--labels", help="optional label table for --graph")
    p.add_argument("--algo", choices=ALGOS, default="expander")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="spectral bound (estimated when omitted)")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--budget", type=int, default=None, help="query budget B")
    p.add_argument("--k", type=int, default=1, help="power for product algorithms")
    p.add_argument("--moduli", help="cyclic factors, e.g. 2,2,2")
    p.add_argument("--gens", help="generators, e.g. 1,15 or 1,0;0,1")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    if with_queries:
        p.add_argument("--queries", required=True, help="one time per line ('-' for stdin)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="walk-oracle", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph file")
    p.add_argument("--family", required=True,
                   choices=("regular", "cycle", "hypercube", "complete", "cayley",
                            "alon-roichman"))
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--multiplier", type=int, default=4)
    p.add_argument("--moduli")
    p.add_argument("--gens")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("walk", help="answer position queries for one walk")
    _oracle_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("verify", help="Monte Carlo l1 check against the exact joint law")
    _oracle_args(p)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack", help="run the adversarial harness")
    _oracle_args(p, with_queries=False)
    p.add_argument("--mode", choices=("adaptive", "oblivious"), default="adaptive")
    p.add_argument("--target", choices=("expander", "abelian", "dense", "cheater", "honest"),
                   default="cheater")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--clause1", choices=("transcript", "graph"), default="transcript")
    p.add_argument("--seg-len-const", type=float, default=40.0)
    p.add_argument("--walk-len", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="probe-count scaling of the expander oracle")
    p.add_argument("--algo", default="expander")
    p.add_argument("--sizes", default="256..16384")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=0.95)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--slope-range", type=float, nargs=2, default=(0.35, 0.65))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sample-selftest", help="check the certified samplers")
    p.add_argument("--draws", type=int, default=10**6)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (GraphInputError, QueryBudgetExceeded, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
