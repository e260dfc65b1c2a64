"""Command line entry point: ``grushin-harnack <subcommand> [options]``.

Every subcommand writes a JSON report (schema ``1.0``) to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace

import numpy as np

from . import engine as eng
from . import geometry as geo
from . import harness as hs
from . import solver as sv
from .config import ConfigError, fill_dataclass, parse_config, parse_grid, parse_window


def _emit(report: dict, out):
    text = hs.dumps_report(report) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> dict:
    return parse_config(args.config) if args.config else {}


def _apply_common(mapping: dict, args) -> dict:
    m = dict(mapping)
    if args.grid:
        n1, n2 = parse_grid(args.grid)
        m["n1"], m["n2"] = str(n1), str(n2)
    if args.window:
        parse_window(args.window)
        m["window"] = args.window
    if args.seed is not None:
        m["seed"] = str(args.seed)
    return m


def cmd_geometry(args) -> int:
    rng = np.random.default_rng(args.seed or 0)
    window = parse_window(args.window) if args.window else (-2.0, 2.0, -2.0, 2.0)
    region = geo.RegionDescriptor(args.kind, geo.Point2(*args.center), args.radius,
                                  args.outer if args.kind == "RingH" else None)
    meas = geo.region_measure(region)
    report = {
        "schema_version": hs.SCHEMA_VERSION,
        "region": {"kind": region.kind, "center": list(region.center), "radius": region.radius},
        "measure": meas.value, "measure_error_bound": meas.error_bound,
        "diameter": geo.region_diameter(region).value,
    }
    if args.pairs:
        centers = np.column_stack([rng.uniform(window[0] / 2, window[1] / 2, args.pairs),
                                   rng.uniform(window[2] / 2, window[3] / 2, args.pairs)])
        radii = rng.uniform(0.05, 1.0, args.pairs)
        report["structure"] = [geo.structure_constant(k, centers, radii).to_dict()
                               for k in ("BTilde", "G", "H")]
    if args.csv:
        geo.dump_region_csv(region, args.csv)
    _emit(report, args.out)
    return 0


def cmd_constants(args) -> int:
    cfg = hs.SuiteConfig.from_mapping(_config(args)) if args.config else hs.SuiteConfig()
    over = {k: v for k, v in (("gamma", args.gamma), ("c", args.c), ("eps", args.eps),
                              ("eta", args.eta), ("nu", args.nu), ("K", args.K),
                              ("alpha_h", args.alpha_h), ("beta_h", args.beta_h),
                              ("C_D", args.C_D), ("delta_rd", args.delta_rd),
                              ("hypotheses", args.hypotheses), ("c_nu", args.c_nu))
            if v is not None}
    cfg = replace(cfg, **over)
    inp = eng.DBCDInput(cfg.gamma, cfg.c, cfg.eps, cfg.eta, cfg.nu)
    ledger = eng.build_ledger(inp, cfg.K, cfg.alpha_h, cfg.beta_h, cfg.C_D, cfg.delta_rd,
                              cfg.hypotheses, cfg.c_nu)
    _emit({"schema_version": hs.SCHEMA_VERSION, "constants": ledger.to_list()}, args.out)
    return 0


def _solver_config(args) -> sv.SolverConfig:
    m = _apply_common(_config(args), args)
    if "seed" in m:
        m["coefficient_seed"] = m.pop("seed")
    if args.case:
        m["case"] = args.case
    return fill_dataclass(sv.SolverConfig, m, source=args.config or "<cli>")


def cmd_solve(args) -> int:
    cfg = _solver_config(args)
    grid = cfg.grid()
    coeffs = cfg.coefficient_field(grid)
    case = sv.manufactured_case(cfg.case)
    sol = sv.solve_dirichlet(grid, coeffs, case.rhs(grid, coeffs), case.u)
    X1, X2 = grid.mesh()
    err = float(np.max(np.abs(sol.values - case.u(X1, X2))))
    if args.csv:
        sv.write_grid_csv(args.csv, grid, sol.values)
    _emit({"schema_version": hs.SCHEMA_VERSION, "config": asdict(cfg),
           "residual": sol.residual_norm, "max_error": err,
           "lambda": coeffs.lam, "Lambda": coeffs.Lam}, args.out)
    return 0


def cmd_verify(args) -> int:
    m = _apply_common(_config(args), args)
    n = int(m.get("n1", 65))
    window = parse_window(m["window"]) if "window" in m else (-2.0, 2.0, -2.0, 2.0)
    seed = int(m.get("seed", 0))
    ecfg = hs.EnsembleConfig(window=window)
    grid = sv.Grid.from_window(window, n, int(m.get("n2", n)))
    run = hs.ensemble_run(seed, grid, ecfg)
    report = {"schema_version": hs.SCHEMA_VERSION, "seed": seed, "grid": [grid.n1, grid.n2],
              "discarded": run.discarded}
    code = 0
    if not run.discarded:
        res = hs.run_checks(run, ecfg)
        report["checks"] = [res[k].to_dict() for k in ("double_ball", "critical_density",
                                                       "power_decay")]
        report["harnack_quotient"] = res["quotient"]
        code = 0 if all(r["passed"] for r in report["checks"]) else 1
    if args.csv:
        sv.write_grid_csv(args.csv, grid, run.sol.values)
    _emit(report, args.out)
    return code


def cmd_suite(args) -> int:
    m = _apply_common(_config(args), args)
    cfg = fill_dataclass(hs.SuiteConfig, m, source=args.config or "<cli>")
    report, code = hs.run_suite(cfg)
    _emit(report, args.out)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grushin-harnack", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, help="random seed (u64)")
    common.add_argument("--grid", help="node counts, e.g. 65x65")
    common.add_argument("--window", help="x1min,x1max,x2min,x2max")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry", parents=[common], help="region measures and structure constants")
    g.add_argument("--kind", default="BTilde", choices=["Box", "BTilde", "G", "H", "RingH"])
    g.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0))
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--outer", type=float, default=3.0, help="outer radius for RingH")
    g.add_argument("--pairs", type=int, default=0, help="random (center, radius) pairs to test")
    g.add_argument("--csv", help="dump a membership grid of the region")
    g.set_defaults(func=cmd_geometry)

    c = sub.add_parser("constants", parents=[common], help="derive the constant ledger")
    for name in ("gamma", "c", "eps", "eta", "nu", "K", "alpha-h", "beta-h", "C-D", "delta-rd"):
        c.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)
    c.add_argument("--hypotheses", choices=["A", "B"])
    c.add_argument("--c-nu", dest="c_nu", type=float,
                   help="covering contraction factor c(nu) in (0, 1)")
    c.set_defaults(func=cmd_constants)

    s = sub.add_parser("solve", parents=[common], help="solve a manufactured problem")
    s.add_argument("--case", help="manufactured case id")
    s.add_argument("--csv", help="write i,j,x1,x2,value of the solution")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", parents=[common], help="PDE checks on one seeded solver run")
    v.add_argument("--csv", help="write the solution grid")
    v.set_defaults(func=cmd_verify)

    u = sub.add_parser("suite", parents=[common], help="run the full verification suite")
    u.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
