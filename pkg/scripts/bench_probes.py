"""Probe cost per query of the expander oracle against n, with a log-log fit.

    python scripts/bench_probes.py --sizes 256..16384 --trials 50
"""

import argparse

from walk_oracle.cli import bench_expander, parse_sizes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="256..16384")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.95)
    ap.add_argument("--eps", type=float, default=0.01)
    ap.add_argument("--graphs", type=int, default=1, help="graphs per size")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    res = bench_expander(parse_sizes(args.sizes), args.trials, args.d, args.lam, args.eps,
                         args.seed, graphs_per_size=args.graphs)
    print(f"{'n':>7} {'k':>5} {'probes/query':>13} {'std':>9} {'fallbacks':>9}")
    for r in res["rows"]:
        print(f"{r['n']:>7} {r['k']:>5} {r['mean_probes_per_query']:>13.1f} {r['std']:>9.1f} "
              f"{r['fallbacks']:>9}")
    print(f"log-log slope {res['slope']:.3f} (sqrt(n) scaling gives 0.5)")


if __name__ == "__main__":
    main()
