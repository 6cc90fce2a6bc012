"""How often random exploration closes a cycle or merges two trees.

With q probes on a random d-regular graph the number of such events grows
roughly like q^2 / n, so the rate stays small for q << sqrt(n).

    python scripts/forest_lemma.py --n 100000 --trials 200
"""

import argparse
import math

import numpy as np

from walk_oracle.adversary import forest_trial
from walk_oracle.graph_gen import gen_random_regular


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10**5)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--divisors", default="40,20,10,5,2,1",
                    help="probe counts floor(sqrt(n) / c) to sweep")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'probes':>7} {'event rate':>10} {'q^2/n':>8}")
    for c in (float(x) for x in args.divisors.split(",")):
        q = int(math.isqrt(args.n) / c)
        hits = 0
        for _ in range(args.trials):
            g = gen_random_regular(args.n, args.d, seed=rng)
            hits += bool(forest_trial(g, q, rng))
        print(f"{q:>7} {hits / args.trials:>10.3f} {q * q / args.n:>8.3f}")


if __name__ == "__main__":
    main()
