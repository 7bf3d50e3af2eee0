"""Log-log slope of the two-bubble interaction integral against Q over three decades."""

import argparse

from choquard_lab.experiments import interaction_slopes
from choquard_lab.special_fn import critical_exponent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", nargs="*", default=["3,5,1", "4,3,1", "3,4,2"],
                    help="N,p,q triples; p = q = 2*/2 cases are always added for N = 3, 4")
    args = ap.parse_args()
    cases = [tuple(float(x) for x in c.split(",")) for c in args.cases]
    cases += [(N, critical_exponent(N) / 2, critical_exponent(N) / 2) for N in (3, 4)]
    for N, p, q in cases:
        out = interaction_slopes(int(N), p, q)
        extra = f"  log coefficient {out['log_coefficient']:.3f}" if p == q else ""
        print(f"N={int(N)} p={p:g} q={q:g}: slope {out['slope']:.4f} expected {out['expected']:.4f} "
              f"(rel. error {out['relative_error']:.2%}){extra}")


if __name__ == "__main__":
    main()
