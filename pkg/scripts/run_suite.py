"""Run the verification suite and write its JSON report.

    python3 scripts/run_suite.py --out suite.json --seed 1
"""

import argparse
import sys

from grushin_harnack import harness as hs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="suite_report.json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checks", default="geometry,engine,barriers,solver,pde")
    args = p.parse_args()
    cfg = hs.SuiteConfig(seed=args.seed, checks=tuple(args.checks.split(",")))
    report, code = hs.run_suite(cfg)
    with open(args.out, "w") as fh:
        fh.write(hs.dumps_report(report) + "\n")
    s = report["summary"]
    print(f"{s['total']} checks, {s['vacuous']} vacuous, failed: {s['failed'] or 'none'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
