"""Sample a desk-scale instance and test the visit histogram against the
exact enumeration, the end-to-end correctness check in miniature."""

import argparse

from janusmc.lattice import LatticeGeometry
from janusmc.models import ISING_EA, ModelSpec, ferromagnet_couplings
from janusmc.observables import chi_square_gof, enumerate_boltzmann
from janusmc.verify import heatbath_histogram


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--beta", type=float, default=0.4)
    parser.add_argument("--sweeps", type=int, default=300_000)
    parser.add_argument("--stride", type=int, default=100,
                        help="sweeps between histogram samples (decorrelation)")
    parser.add_argument("--seed", type=int, default=21)
    args = parser.parse_args()

    geo = LatticeGeometry(2)
    model = ModelSpec(ISING_EA, beta=args.beta, geometry=geo,
                      couplings=ferromagnet_couplings(geo))
    counts = heatbath_histogram(model, args.sweeps, init_seed=args.seed,
                                update_seed=args.seed + 1, stride=args.stride)
    dist = enumerate_boltzmann(model)
    p = chi_square_gof(counts, dist)
    mean = (counts * dist.energies).sum() / counts.sum()
    exact = (dist.probs * dist.energies).sum()
    print(f"samples: {counts.sum()}  chi-square p = {p:.4f}")
    print(f"<E> histogram {mean:.4f} vs exact {exact:.4f}")


if __name__ == "__main__":
    main()
