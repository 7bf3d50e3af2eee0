"""Lowest linearised eigenvalues in the l = 0 and l = 1 sectors for several (N, mu)."""

import argparse

from choquard_lab.bubbles import Bubble
from choquard_lab.radial import RadialGrid
from choquard_lab.special_fn import nl_exponent
from choquard_lab.spectrum import assemble, eigenpairs

PAIRS = [(3, 1.0), (3, 2.0), (4, 2.0), (5, 2.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--count", type=int, default=3)
    args = ap.parse_args()
    print(f"{'N':>2} {'mu':>4} {'2*_mu':>8}  l=0 eigenvalues{'':<22}l=1 eigenvalues")
    for N, mu in PAIRS:
        grid = RadialGrid(N, args.n)
        b = Bubble(N, mu, 1.0)
        e0 = eigenpairs(assemble(grid, b, 0), args.count).eigenvalues
        e1 = eigenpairs(assemble(grid, b, 1), args.count).eigenvalues
        fmt = lambda xs: " ".join(f"{x:11.7f}" for x in xs)
        print(f"{N:>2} {mu:>4g} {nl_exponent(N, mu):8.5f}  {fmt(e0)}  {fmt(e1)}")


if __name__ == "__main__":
    main()
