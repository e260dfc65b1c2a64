"""Empirical checks of the double ball, critical density, power decay and
Harnack statements on finite-difference solutions, plus the suite runner.

Balls are d̃-balls; inf and sup over a ball are taken over the grid nodes
inside it, and integrals use trapezoid node weights restricted to it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import barriers as bar
from . import engine as eng
from . import geometry as geo
from . import quasimetric as qm
from . import solver as sv
from .config import fill_dataclass, parse_config

SCHEMA_VERSION = "1.0"


class DegenerateRegionError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class SNorm:
    region: geo.RegionDescriptor
    value: float


def _nodes(sol_or_grid, region):
    grid = sol_or_grid.grid if isinstance(sol_or_grid, sv.Solution) else sol_or_grid
    mask = sv.region_mask(grid, region)
    if not np.any(mask):
        raise DegenerateRegionError(f"no grid node inside {region.kind}{tuple(region.center)}")
    return grid, mask


def compute_S(region: geo.RegionDescriptor, f, grid: sv.Grid | None = None,
              resolution: int = 256) -> SNorm:
    """diam(A)·‖x1 f‖_L²(A).

    With a grid, ``f`` holds node values (or a callable evaluated on the
    nodes) and the integral uses the nodes inside ``region``.  Without one,
    ``f`` must be callable and is integrated by midpoint cells over the
    region's bounding box.
    """
    if grid is None:
        if not callable(f):
            raise TypeError("node values need a grid")
        a, b, c, d = geo.bounding_box(region)
        n = resolution
        x1 = a + (b - a) * (np.arange(n) + 0.5) / n
        x2 = c + (d - c) * (np.arange(n) + 0.5) / n
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        inside = geo.contains(region, np.stack([X1, X2], -1))
        if not np.any(inside):
            raise DegenerateRegionError("region has no quadrature cell")
        F = np.broadcast_to(np.asarray(f(X1, X2), dtype=float), X1.shape)
        integral = float(np.sum(((X1 * F) ** 2)[inside])) * (b - a) * (d - c) / n**2
    else:
        grid, mask = _nodes(grid, region)
        F = grid.evaluate(f)
        X1, _ = grid.mesh()
        integral = float(np.sum((sv.node_weights(grid) * (X1 * F) ** 2)[mask]))
    diam = geo.region_diameter(region).value
    return SNorm(region, diam * math.sqrt(integral))


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass
class CheckReport:
    check_kind: str
    inputs_digest: str
    constants: dict
    measured: dict
    passed: bool
    margins: dict = field(default_factory=dict)
    vacuous: bool = False
    tolerance: float = 0.0
    note: str = ""

    @classmethod
    def from_margins(cls, kind, inputs, constants, measured, margins, tol=0.0, note=""):
        ok = all(m >= -tol for m in margins.values())
        return cls(kind, _digest(inputs), constants, measured, ok, margins, False, tol, note)

    @classmethod
    def vacuous_report(cls, kind, inputs, constants, measured, note):
        return cls(kind, _digest(inputs), constants, measured, True, {}, True, 0.0, note)

    def to_dict(self):
        return _clean(asdict(self))


def _inf_sup(sol, region):
    _, mask = _nodes(sol, region)
    v = sol.values[mask]
    return float(v.min()), float(v.max())


def _ball_inputs(sol, center, r, f):
    return {"center": list(map(float, center)), "r": float(r),
            "u": _digest(np.round(sol.values, 12).tolist()),
            "f": _digest(np.round(sol.grid.evaluate(f), 12).tolist())}


def check_double_ball(sol: sv.Solution, y, r: float, constants, f) -> CheckReport:
    """inf_{B(y,r/2)} u ≥ m and S(B(y,ηr), f/m) < ε  ⇒  inf_{B(y,r)} u ≥ γm.

    The solution is normalized by m = inf over B(y, r/2), so the first
    hypothesis holds with equality; the report is vacuous when m <= 0 or the
    S-norm gate fails.
    """
    gamma, eps, eta = constants
    consts = {"gamma": gamma, "eps_DB": eps, "eta_DB": eta}
    inputs = _ball_inputs(sol, y, r, f)
    F = sol.grid.evaluate(f)
    m, _ = _inf_sup(sol, geo.BTilde(y, r / 2))
    inf_r, _ = _inf_sup(sol, geo.BTilde(y, r))
    big = geo.BTilde(y, eta * r)
    _nodes(sol, big)
    if m <= 0:
        return CheckReport.vacuous_report("double_ball", inputs, consts, {"m": m},
                                          "half-ball infimum is not positive")
    S = compute_S(big, F / m, sol.grid).value
    measured = {"m": m, "inf_ratio": inf_r / m, "S": S}
    if not S < eps:
        return CheckReport.vacuous_report("double_ball", inputs, consts, measured,
                                          "S-norm gate not met")
    return CheckReport.from_margins("double_ball", inputs, consts, measured,
                                    {"inf_ratio_minus_gamma": inf_r / m - gamma})


def _ball_fraction(sol, region, level, strict=False):
    grid, mask = _nodes(sol, region)
    w = sv.node_weights(grid)[mask]
    v = sol.values[mask]
    hit = v > level if strict else v >= level
    return float(np.sum(w[hit]) / np.sum(w))


def check_critical_density(sol: sv.Solution, y, R: float, constants, f) -> CheckReport:
    """|{u ≥ 1} ∩ B(y,R)| ≥ ν|B(y,R)|  ⇒  inf_{B(y,R/2)} u ≥ c or S(B(y,ηR), f) ≥ ε."""
    nu, c, eps, eta = constants
    consts = {"nu": nu, "c": c, "eps_CD": eps, "eta_CD": eta}
    inputs = _ball_inputs(sol, y, R, f)
    big = geo.BTilde(y, eta * R)
    _nodes(sol, big)
    frac = _ball_fraction(sol, geo.BTilde(y, R), 1.0)
    inf_half, _ = _inf_sup(sol, geo.BTilde(y, R / 2))
    S = compute_S(big, f, sol.grid).value
    measured = {"fraction": frac, "inf_half": inf_half, "S": S}
    if frac < nu:
        return CheckReport.vacuous_report("critical_density", inputs, consts, measured,
                                          "density hypothesis not met")
    margin = max(inf_half - c, S - eps)
    branch = "inf" if inf_half >= c else ("S" if S >= eps else "none")
    return CheckReport.from_margins("critical_density", inputs, consts, measured,
                                    {"best_branch": margin}, note=f"branch={branch}")


def decay_sequence(sol: sv.Solution, x0, R: float, M: float, k_max: int) -> np.ndarray:
    """k ↦ |{u > M^k} ∩ B(x0, R/2)| / |B(x0, R/2)| for k = 1..k_max."""
    half = geo.BTilde(x0, R / 2)
    return np.array([_ball_fraction(sol, half, M**k, strict=True) for k in range(1, k_max + 1)])


def check_power_decay(sol: sv.Solution, x0, R: float, constants, f, k_max: int = 8) -> CheckReport:
    """inf_{B_R} u ≤ 1 and S(B(x0,η_P R), f) < ε_P  ⇒  decay sequence ≤ γ^k."""
    M, gamma, eps, eta = constants
    consts = {"M": M, "gamma_PD": gamma, "eps_P": eps, "eta_P": eta}
    inputs = _ball_inputs(sol, x0, R, f)
    big = geo.BTilde(x0, eta * R)
    _nodes(sol, big)
    inf_R, _ = _inf_sup(sol, geo.BTilde(x0, R))
    S = compute_S(big, f, sol.grid).value
    seq = decay_sequence(sol, x0, R, M, k_max)
    measured = {"inf_R": inf_R, "S": S, "sequence": seq.tolist()}
    if not (inf_R <= 1.0 and S < eps):
        return CheckReport.vacuous_report("power_decay", inputs, consts, measured,
                                          "normalization or S-norm gate not met")
    bounds = gamma ** np.arange(1, k_max + 1)
    margins = {f"k{k + 1}": float(bounds[k] - seq[k]) for k in range(k_max)}
    bad = np.nonzero(seq > bounds)[0]
    note = f"first_violation=k{int(bad[0]) + 1}" if len(bad) else ""
    return CheckReport.from_margins("power_decay", inputs, consts, measured, margins, note=note)


def harnack_quotient(sol: sv.Solution, x0, r: float, eta: float, f) -> float:
    """sup_{B(x0,r)} u / (inf_{B(x0,r)} u + S(B(x0, ηr), f))."""
    inf_r, sup_r = _inf_sup(sol, geo.BTilde(x0, r))
    S = compute_S(geo.BTilde(x0, eta * r), f, sol.grid).value
    den = inf_r + S
    if not den > 0:
        raise DegenerateInputError("quotient denominator vanishes (u and f both zero?)")
    return sup_r / den


def check_harnack(sol, x0, r, eta, f, log_C: float = math.inf) -> CheckReport:
    q = harnack_quotient(sol, x0, r, eta, f)
    inputs = _ball_inputs(sol, x0, r, f)
    margin = log_C - math.log(q) if q > 0 else math.inf
    return CheckReport.from_margins("harnack", inputs, {"eta": eta, "log_C_harnack": log_C},
                                    {"quotient": q}, {"log_C_minus_log_quotient": margin})


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleConfig:
    """Desk-scale constants and balls for the solver ensembles."""

    window: tuple = (-2.0, 2.0, -2.0, 2.0)
    coef_lo: float = 1.0
    coef_hi: float = 2.0
    db_center: tuple = (0.6, 0.0)
    db_r: float = 0.3
    eta_DB: float = 2.0
    eps_DB: float = 1.0
    cd_center: tuple = (0.6, 0.0)
    cd_R: float = 0.25
    eta_CD: float = 4.0
    nu: float = 0.5
    eps_CD: float = 1.0
    pd_center: tuple = (0.6, 0.0)
    pd_R: float = 0.25
    pd_M: float = 2.0
    pd_gamma: float = 0.5
    eps_P: float = 1.0
    eta_P: float = 4.0
    h_center: tuple = (0.5, 0.0)
    h_r: float = 0.25
    h_eta: float = 2.0


@dataclass
class EnsembleRun:
    seed: int
    sol: sv.Solution
    f: np.ndarray
    gamma: float
    discarded: bool


def ensemble_problem(seed: int, grid: sv.Grid, cfg: EnsembleConfig = EnsembleConfig()):
    """Coefficients, |f| <= 1 and boundary data >= 1/4 drawn from ``seed``.

    Even seeds get smooth coefficients, odd seeds piecewise-constant ones.
    """
    rng = np.random.default_rng(seed)
    kind = "smooth" if seed % 2 == 0 else "piecewise"
    coeffs = sv.random_coefficient_field(grid, rng, cfg.coef_lo, cfg.coef_hi, kind=kind)
    amp = rng.uniform(-1.0, 1.0)
    center = rng.uniform(-1.0, 1.0, size=2)
    width = rng.uniform(0.2, 0.6)
    f = sv.bump(center, width, amp)
    g = sv.SmoothField(rng)
    return coeffs, f, (lambda x1, x2: 0.25 + 2.0 * g(x1, x2))


def ensemble_run(seed: int, grid: sv.Grid, cfg: EnsembleConfig = EnsembleConfig()) -> EnsembleRun:
    coeffs, f, boundary = ensemble_problem(seed, grid, cfg)
    sol = sv.solve_dirichlet(grid, coeffs, f, boundary)
    F = grid.evaluate(f)
    alpha = bar.barrier_alpha(coeffs.lam, coeffs.Lam)
    # runs leaving the nonnegative cone are outside the solution families
    return EnsembleRun(seed, sol, F, bar.gamma_floor(alpha), bool(sol.values.min() < -1e-8))


def run_checks(run: EnsembleRun, cfg: EnsembleConfig = EnsembleConfig(), scale: float = 1.0):
    """DB, CD, PD reports and the Harnack quotient on (scale·u, scale·f)."""
    sol = run.sol.scaled(scale)
    F = scale * run.f
    db = check_double_ball(sol, cfg.db_center, cfg.db_r, (run.gamma, cfg.eps_DB, cfg.eta_DB), F)
    cd = check_critical_density(sol, cfg.cd_center, cfg.cd_R,
                                (cfg.nu, run.gamma, cfg.eps_CD, cfg.eta_CD), F)
    # power decay is stated for functions with inf over B_R at most 1
    m, _ = _inf_sup(sol, geo.BTilde(cfg.pd_center, cfg.pd_R))
    norm = m if m > 0 else 1.0
    pd = check_power_decay(sol.scaled(1.0 / norm), cfg.pd_center, cfg.pd_R,
                           (cfg.pd_M, cfg.pd_gamma, cfg.eps_P, cfg.eta_P), F / norm)
    q = harnack_quotient(sol, cfg.h_center, cfg.h_r, cfg.h_eta, F)
    return {"double_ball": db, "critical_density": cd, "power_decay": pd, "quotient": q}


def harnack_ensemble(seeds, n: int, cfg: EnsembleConfig = EnsembleConfig()):
    grid = sv.Grid.from_window(cfg.window, n, n)
    out = []
    for s in seeds:
        run = ensemble_run(s, grid, cfg)
        rec = {"seed": s, "discarded": run.discarded}
        if not run.discarded:
            rec.update(run_checks(run, cfg))
        out.append(rec)
    return out


def abp_problem(seed: int, grid: sv.Grid):
    """Supersolution candidate with a positive source bump and boundary data >= 0."""
    rng = np.random.default_rng(10_000 + seed)
    kind = "smooth" if seed % 2 == 0 else "piecewise"
    coeffs = sv.random_coefficient_field(grid, rng, kind=kind)
    amp = rng.uniform(0.5, 4.0)
    f = sv.bump(rng.uniform(-1.0, 1.0, size=2), rng.uniform(0.2, 0.5), amp)
    g = sv.SmoothField(rng)
    bscale = rng.uniform(0.0, 0.2)
    return coeffs, f, (lambda x1, x2: bscale * g(x1, x2))


def fit_abp_constant(seeds, grid: sv.Grid, safety: float = 2.0) -> float:
    """``safety`` times the largest sup u⁻ / (diam·‖x1 f⁺‖) seen on ``seeds``."""
    worst = 0.0
    for s in seeds:
        coeffs, f, g = abp_problem(s, grid)
        sol = sv.solve_dirichlet(grid, coeffs, f, g)
        sup_neg, dn, _ = sv.abp_ratio_parts(sol, f)
        if dn > 0:
            worst = max(worst, sup_neg / dn)
    return safety * worst


# ---------------------------------------------------------------------------
# suite


@dataclass(frozen=True)
class SuiteConfig:
    checks: tuple = ("geometry", "engine", "barriers", "solver", "pde")
    seed: int = 0
    n1: int = 65
    n2: int = 65
    window: tuple = (-2.0, 2.0, -2.0, 2.0)
    structure_pairs: int = 20
    barrier_samples: int = 10_000
    ensemble_runs: int = 4
    abp_runs: int = 4
    # engine inputs
    gamma: float = 0.5
    c: float = 0.5
    eps: float = 0.5
    eta: float = 2.0
    nu: float = 0.01
    K: float = 1.5
    alpha_h: float = 0.5
    beta_h: float = 2.0
    C_D: float = 8.0
    delta_rd: float = 0.2
    hypotheses: str = "A"
    c_nu: float = 0.5

    @classmethod
    def from_file(cls, path) -> "SuiteConfig":
        return fill_dataclass(cls, parse_config(path), source=str(path))

    @classmethod
    def from_mapping(cls, mapping) -> "SuiteConfig":
        return fill_dataclass(cls, mapping)


def _report(kind, inputs, measured, margins, tol=0.0, note=""):
    return CheckReport.from_margins(kind, inputs, {}, measured, margins, tol, note)


def _geometry_checks(cfg: SuiteConfig, rng):
    reps = []
    win = cfg.window
    d = float(geo.dtilde((0.0, 0.0), (0.0, 1.0)))
    area = geo.region_measure(geo.Box((0.0, 0.0), 1.0)).value
    reps.append(_report("geometry_closed_forms", {"case": "origin"},
                        {"dtilde": d, "box_area": area},
                        {"dtilde": 1e-3 - abs(d - 2) / 2, "box_area": 1e-3 - abs(area - 4) / 4}))
    centers = np.column_stack([rng.uniform(win[0] / 2, win[1] / 2, cfg.structure_pairs),
                               rng.uniform(win[2] / 2, win[3] / 2, cfg.structure_pairs)])
    radii = rng.uniform(0.05, 1.0, cfg.structure_pairs)
    for kind in ("BTilde", "G", "H"):
        rep = geo.structure_constant(kind, centers, radii)
        reps.append(_report("structure_" + kind, {"kind": kind, "seed": cfg.seed},
                            {"constant": rep.constant}, {"below_16": 16.0 - rep.constant}))
    pts = qm.halton_triples(2000, win)
    K = qm.estimate_quasi_triangle_K(geo.dtilde, pts)
    reps.append(_report("quasi_triangle", {"n": 2000}, {"K": K.value},
                        {"below_K_max": qm.K_MAX_DTILDE - K.value}))

    def box_measure(c, r):
        return geo.box_area(c, r)

    balls = [((float(x), 0.0), float(r)) for x, r in zip(rng.uniform(-1, 1, 10),
                                                          rng.uniform(0.1, 1, 10))]
    dc = qm.doubling_constant(box_measure, balls)
    reps.append(_report("doubling", {"balls": balls}, {"C_D": dc.C_D, "q": dc.q},
                        {"at_most_8": 8.0 + 1e-12 - dc.C_D}))

    def ball_measure(c, r):
        return geo.region_measure(geo.BTilde(c, r), resolution=64).value

    omegas = [qm.ring_modulus(ball_measure, ((0.3, 0.0), 0.5), e).omega for e in (0.01, 0.05, 0.1)]
    reps.append(_report("ring", {"eps": [0.01, 0.05, 0.1]}, {"omega": omegas},
                        {"monotone": min(np.diff(omegas)) + 1e-12}))
    return reps


def _engine_checks(cfg: SuiteConfig):
    inp = eng.DBCDInput(cfg.gamma, cfg.c, cfg.eps, cfg.eta, cfg.nu)
    ledger = eng.build_ledger(inp, cfg.K, cfg.alpha_h, cfg.beta_h, cfg.C_D, cfg.delta_rd,
                              cfg.hypotheses, cfg.c_nu)
    T = eng.tk_sequence(ledger["M"], ledger["beta1"], ledger["q_pd"], 10_000)
    margins = {
        "gamma_sigma": 1e-12 - abs(cfg.gamma ** ledger["sigma_exp"] - 0.5),
        "M0_gamma_c": 1e-12 - abs(ledger["M0"] * cfg.gamma * cfg.c - 1),
        "eps_P": 1e-12 - abs(ledger["eps_P"] - cfg.eps * cfg.c),
        "T_range": min(T.min() - 0.5, 0.75 - T.max()),
    }
    measured = {"log10_C_harnack": ledger["log10_C_harnack"], "M": ledger["M"],
                "eta_harnack": ledger["eta_harnack"]}
    return [_report("engine_ledger", asdict(cfg), measured, margins)], ledger


def _barrier_checks(cfg: SuiteConfig, rng):
    reps = []
    for case, y in (("I", (0.1, 0.0)), ("II", (1.2, 0.1)), ("III", (0.45, 0.0)),
                    ("IV", (0.75, -0.1))):
        r = 0.3
        lam, Lam = 1.0, float(rng.uniform(1.0, 2.0))
        alpha = bar.barrier_alpha(lam, Lam)
        spec = bar.db_barrier_constants(y, r, alpha)
        pts = bar.ring_samples(y, r, 3 * r, cfg.barrier_samples, rng)
        a = bar.random_constant_coefficients(rng, lam, Lam)
        mn = bar.verify_subsolution(spec, *a, pts, lam, Lam)
        inner = geo.boundary_samples(geo.H(y, r)).points
        outer = geo.boundary_samples(geo.H(y, 3 * r)).points
        e_in = float(np.max(np.abs(bar.db_barrier_eval(spec, inner) - 1)))
        e_out = float(np.max(np.abs(bar.db_barrier_eval(spec, outer))))
        reps.append(_report("barrier_" + case, {"y": y, "r": r, "Lambda": Lam},
                            {"min_LPhi_scaled": mn / spec.scale, "case": spec.case_id,
                             "boundary_err": max(e_in, e_out)},
                            {"subsolution": mn / spec.scale + 1e-8,
                             "boundary": 1e-10 - max(e_in, e_out),
                             "case": 0.0 if spec.case_id == case else -1.0}))
    return reps


def _solver_checks(cfg: SuiteConfig):
    g = sv.Grid.from_window(cfg.window, 65, 65)
    errs = [sv.manufactured_error("mixed", gg, sv.CoefficientField.constant(gg))
            for gg in (g, g.refine())]
    ratio = errs[0] / errs[1]
    quad = sv.manufactured_error("x2sq", g, sv.CoefficientField.constant(g))
    return [_report("solver_convergence", {"grids": [65, 129]},
                    {"errors": errs, "ratio": ratio, "quadratic_error": quad},
                    {"ratio_low": ratio - 3.3, "ratio_high": 4.7 - ratio,
                     "quadratic": 1e-9 - quad})]


def _pde_checks(cfg: SuiteConfig, ledger):
    reps = []
    ecfg = EnsembleConfig(window=cfg.window)
    grid = sv.Grid.from_window(cfg.window, cfg.n1, cfg.n2)
    log_C = ledger["log_C_harnack"] if ledger is not None else math.inf
    for k in range(cfg.ensemble_runs):
        run = ensemble_run(cfg.seed + k, grid, ecfg)
        if run.discarded:
            continue
        res = run_checks(run, ecfg)
        reps += [res["double_ball"], res["critical_density"], res["power_decay"]]
        reps.append(check_harnack(run.sol, ecfg.h_center, ecfg.h_r, ecfg.h_eta, run.f, log_C))
    calib = range(1000 + cfg.seed, 1000 + cfg.seed + cfg.abp_runs)
    C = fit_abp_constant(calib, grid)
    for k in range(cfg.abp_runs):
        coeffs, f, g = abp_problem(cfg.seed + k, grid)
        sol = sv.solve_dirichlet(grid, coeffs, f, g)
        res = sv.check_abp(sol, f, C)
        reps.append(_report("abp", {"seed": cfg.seed + k, "C": C},
                            {"sup_neg": res.sup_neg, "bound": res.bound},
                            {"margin": res.margin}))
    return reps


def run_suite(cfg: SuiteConfig = SuiteConfig()) -> tuple[dict, int]:
    """Run the selected check groups; returns (report, exit code)."""
    known = {"geometry", "engine", "barriers", "solver", "pde"}
    bad = set(cfg.checks) - known
    if bad:
        raise ValueError(f"unknown check groups {sorted(bad)}")
    rng = np.random.default_rng(cfg.seed)
    reports: list[CheckReport] = []
    ledger = None
    if "geometry" in cfg.checks:
        reports += _geometry_checks(cfg, rng)
    if "engine" in cfg.checks:
        reps, ledger = _engine_checks(cfg)
        reports += reps
    if "barriers" in cfg.checks:
        reports += _barrier_checks(cfg, rng)
    if "solver" in cfg.checks:
        reports += _solver_checks(cfg)
    if "pde" in cfg.checks:
        reports += _pde_checks(cfg, ledger)
    failed = [r.check_kind for r in reports if not r.vacuous and not r.passed]
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": _clean(asdict(cfg)),
        "checks": [r.to_dict() for r in reports],
        "summary": {"total": len(reports), "vacuous": sum(r.vacuous for r in reports),
                    "failed": failed, "passed": not failed},
    }
    if ledger is not None:
        report["ledger"] = ledger.to_list()
    return report, 0 if not failed else 1


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2)
