"""Estimate the box/ball comparison constants over random centers and radii."""

import argparse

import numpy as np

from grushin_harnack import geometry as geo


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    centers = rng.uniform(-2.0, 2.0, size=(args.pairs, 2))
    radii = rng.uniform(0.05, 1.0, size=args.pairs)
    print(f"{'kind':8s} {'inner':>8s} {'outer':>8s} {'C':>8s}")
    for kind in ("BTilde", "G", "H", "CC"):
        rep = geo.structure_constant(kind, centers, radii)
        print(f"{kind:8s} {rep.inner_constant:8.4f} {rep.outer_constant:8.4f} {rep.constant:8.4f}")


if __name__ == "__main__":
    main()
