"""Distinguishing rates of the adaptive and oblivious attacks.

Runs both attacks against a uniform cheater, an honest full simulation and
the expander oracle on fresh random 3-regular graphs.

    python scripts/attack_demo.py --trials 100
"""

import argparse

import numpy as np

from walk_oracle.adversary import (AttackConfig, HonestSimulation, UniformCheater,
                                   adaptive_attack, oblivious_attack)
from walk_oracle.graph_core import ProbeSession
from walk_oracle.graph_gen import gen_random_regular
from walk_oracle.oracle_expander import ExpanderOracle
from walk_oracle.stats import estimate_lambda


def make_target(name, session, cfg):
    if name == "cheater":
        return UniformCheater(session, 0)
    if name == "honest":
        return HonestSimulation(session, 0)
    g = session.graph
    return ExpanderOracle(session, estimate_lambda(g), 0.01, cfg.max_queries(g.n) + 1, 0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--adaptive-n", type=int, default=1024)
    ap.add_argument("--oblivious-n", type=int, default=4096)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = AttackConfig()
    ss = np.random.SeedSequence(args.seed)
    for mode, attack, n in (("adaptive", adaptive_attack, args.adaptive_n),
                            ("oblivious", oblivious_attack, args.oblivious_n)):
        for name in ("cheater", "honest", "expander"):
            hits, queries, branches = 0, 0, {}
            for child in ss.spawn(args.trials):
                gs, os_ = child.spawn(2)
                g = gen_random_regular(n, 3, seed=np.random.default_rng(gs))
                session = ProbeSession(g, np.random.default_rng(os_))
                res = attack(make_target(name, session, cfg), cfg)
                hits += res.verdict
                queries = max(queries, res.queries)
                branches[res.branch] = branches.get(res.branch, 0) + 1
            print(f"{mode:>9} n={n:<5} {name:>8}: F=1 rate {hits / args.trials:.2f}, "
                  f"max queries {queries}, branches {branches}")


if __name__ == "__main__":
    main()
