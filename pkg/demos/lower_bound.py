"""Show the information-spread floor on a stretched topology.

The far_pair start state keeps two designated nodes at distance D.
Per round, the gap can at best halve, so legality cannot arrive
before ceil(log2 D) rounds no matter what the supervisor says.

    python3 demos/lower_bound.py --n 32
"""

import argparse
import math

from linfly.engine import Scenario, run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--supervisor", default="honest")
    args = parser.parse_args()

    res = run(Scenario(n=args.n, topology="far_pair",
                       supervisor=args.supervisor, seed=args.seed))
    u, v = res.pair
    d0 = res.pair_distances[0]
    print(f"far_pair n={args.n}: watching nodes {u} and {v}, "
          f"initial distance {d0}\n")
    print(f"{'round':>5} {'distance':>9} {'floor D/2^t':>12}")
    for t, dist in enumerate(res.pair_distances):
        floor = d0 / (2 ** t)
        mark = "  <- legal" if t == res.metrics.rounds_to_legal else ""
        print(f"{t:>5} {dist:>9} {floor:>12.2f}{mark}")
    print(f"\nlegality at round {res.metrics.rounds_to_legal}, "
          f"theoretical floor ceil(log2 {d0}) = {math.ceil(math.log2(d0))}")


if __name__ == "__main__":
    main()
