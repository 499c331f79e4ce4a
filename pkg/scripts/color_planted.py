"""Annealing scan over planted coloring instances.

Sweeps instance size and connectivity around the hard point and reports
the best energy the documented schedule reaches in a fixed sweep budget.
This is the experiment behind the choice of default_schedule: at Q=3 the
reachable-floor scales roughly like N / budget once C_m approaches 4, so
runs at the hard point need budgets tens of times larger than runs at
C_m <= 3.5, which color in a few thousand sweeps.
"""

import argparse
import time

from janusmc.coloring import anneal, default_schedule
from janusmc.graphs import planted_coloring_graph


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,4000,16000")
    parser.add_argument("--connectivities", default="3.0,3.5,4.0")
    parser.add_argument("--colors", type=int, default=3)
    parser.add_argument("--sweeps", type=int, default=10_000)
    parser.add_argument("--instance-seed", type=int, default=1001)
    parser.add_argument("--run-seed", type=int, default=7)
    args = parser.parse_args()

    schedule = default_schedule(args.sweeps)
    print("     N   C_m   success   best E   sweeps   seconds")
    for n in (int(v) for v in args.sizes.split(",")):
        for cm in (float(v) for v in args.connectivities.split(",")):
            graph, _ = planted_coloring_graph(n, cm, args.colors,
                                              seed=args.instance_seed)
            start = time.perf_counter()
            result = anneal(graph, args.colors, schedule,
                            seeds=(args.run_seed, args.run_seed + 1))
            elapsed = time.perf_counter() - start
            print(f"{n:>6d}  {cm:>4.1f}   {str(result.success):>7}   "
                  f"{result.best_energy:>6d}   {result.sweeps_run:>6d}   {elapsed:>7.1f}")


if __name__ == "__main__":
    main()
