"""Harnack quotients and check outcomes over a seeded solver ensemble."""

import argparse

from grushin_harnack import harness as hs


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--grids", default="65,129")
    args = p.parse_args()
    for n in (int(s) for s in args.grids.split(",")):
        runs = hs.harnack_ensemble(range(args.runs), n)
        kept = [r for r in runs if not r["discarded"]]
        qs = [r["quotient"] for r in kept]
        print(f"grid {n}x{n}: {len(kept)}/{len(runs)} runs kept, "
              f"quotient max {max(qs):.4f} min {min(qs):.4f}")
        for kind in ("double_ball", "critical_density", "power_decay"):
            active = [r[kind] for r in kept if not r[kind].vacuous]
            print(f"  {kind:17s} active {len(active):3d}  failed {sum(not a.passed for a in active)}")


if __name__ == "__main__":
    main()
