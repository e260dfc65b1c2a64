"""Error of the finite-difference scheme on manufactured cases under refinement."""

import argparse

import numpy as np

from grushin_harnack import solver as sv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cases", default="mixed,cross,x1quartic")
    p.add_argument("--sizes", default="17,33,65,129")
    p.add_argument("--coefficients", default="constant", choices=["constant", "smooth"])
    args = p.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    for case in args.cases.split(","):
        prev = None
        print(f"case {case}")
        for n in sizes:
            g = sv.Grid(n1=n, n2=n)
            if args.coefficients == "constant":
                c = sv.CoefficientField.constant(g, 1.5, 0.3, 1.2)
            else:
                c = sv.random_coefficient_field(g, np.random.default_rng(0))
            err = sv.manufactured_error(case, g, c)
            ratio = f"{prev / err:6.2f}" if prev else "     -"
            print(f"  n={n:4d}  h={g.h1:.4f}  err={err:.3e}  ratio={ratio}")
            prev = err


if __name__ == "__main__":
    main()
