"""The nine acceptance criteria, each at its stated tolerance and time budget.

A pass/fail line per criterion is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from grushin_harnack import barriers as bar
from grushin_harnack import engine as eng
from grushin_harnack import geometry as geo
from grushin_harnack import harness as hs
from grushin_harnack import solver as sv


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


@pytest.mark.criterion(1, "geometry closed forms")
def test_geometry_closed_forms():
    with Timer() as t:
        d = geo.dtilde((0.0, 0.0), (0.0, 1.0))
        a1 = geo.region_measure(geo.Box((0.0, 0.0), 1.0)).value
        a2 = geo.region_measure(geo.Box((0.0, 0.0), 2.0)).value
    assert abs(d - 2.0) / 2.0 <= 1e-3
    assert abs(a1 - 4.0) / 4.0 <= 1e-3
    assert abs(a2 / a1 - 8.0) / 8.0 <= 1e-3
    assert t.elapsed < 5.0


@pytest.mark.criterion(2, "structure theorems, single C <= 16")
def test_structure_theorems():
    rng = np.random.default_rng(2024)
    centers = rng.uniform(-2.0, 2.0, size=(100, 2))
    radii = rng.uniform(0.05, 1.0, size=100)
    with Timer() as t:
        reps = {k: geo.structure_constant(k, centers, radii) for k in ("BTilde", "G", "H")}
    C = max(r.constant for r in reps.values())
    assert 1.0 < C <= 16.0, {k: r.constant for k, r in reps.items()}
    assert reps["H"].inner_constant <= 4.0
    assert t.elapsed < 30.0


@pytest.mark.criterion(3, "constant ledger identities and worked case")
def test_ledger_identities():
    with Timer() as t:
        for gamma, c, eps, eta in [(0.5, 0.5, 0.5, 2.0), (0.3, 0.7, 0.2, 3.0), (0.9, 0.1, 0.9, 1.5)]:
            inp = eng.DBCDInput(gamma, c, eps, eta, 0.01)
            K, alpha_h, beta_h = 1.3, 0.6, 1.7
            pd, led = eng.derive_power_decay(inp, K, alpha_h, beta_h, 8.0, 0.2, "A", c_nu=0.5)
            hc, led = eng.derive_harnack(pd, K, 8.0, alpha_h, beta_h, led)
            assert abs(gamma ** led["sigma_exp"] - 0.5) <= 1e-12
            assert abs(led["M0"] * gamma * c - 1.0) <= 1e-12
            assert abs(led["eps_P"] - eps * c) <= 1e-12
            assert abs(hc.eta_harnack - 2 * K * (2 * K * pd.eta_P + 1)) <= 1e-12 * hc.eta_harnack
            T = eng.tk_sequence(led["M"], led["beta1"], led["q_pd"], 10_000)
            assert T[0] == 0.75
            assert np.all(T > 0.5) and np.all(T <= 0.75)
        inp = eng.DBCDInput(0.5, 0.5, 0.5, 2.0, 0.01)
        led = eng.choose_M(inp, 1.0, 1.0, 1.0)
    assert led["M0"] == 4.0 and led["sigma_exp"] == 1.0 and led["M1"] == 16.0
    assert led["beta1"] == 16.0 and led["M"] == 16.0
    assert t.elapsed < 1.0


def _random_case_center(case, rng, r):
    t = {"I": rng.uniform(0.0, 0.99), "II": rng.uniform(3.0, 4.0),
         "III": rng.uniform(1.0, 1.99), "IV": rng.uniform(2.0, 2.99)}[case]
    return (rng.choice([-1.0, 1.0]) * t * r, rng.uniform(-1.0, 1.0))


@pytest.mark.criterion(4, "barrier subsolution in all four cases")
def test_barrier_subsolution():
    rng = np.random.default_rng(4)
    with Timer() as t:
        for _ in range(20):
            lam = rng.uniform(0.5, 2.0)
            Lam = lam * rng.uniform(1.0, 3.0)
            a = bar.random_constant_coefficients(rng, lam, Lam)
            alpha = bar.barrier_alpha(lam, Lam)
            for case in ("I", "II", "III", "IV"):
                r = rng.uniform(0.1, 0.5)
                y = _random_case_center(case, rng, r)
                spec = bar.db_barrier_constants(y, r, alpha)
                assert spec.case_id == case
                pts = bar.ring_samples(y, r, 3 * r, 10_000, rng)
                mn = bar.verify_subsolution(spec, *a, pts, lam, Lam)
                assert mn >= -1e-8 * spec.scale, (case, mn, spec)
        # sanity inversion: an inadmissible positive exponent loses the sign
        y = (0.3, 0.0)
        bad = bar.BarrierSpec(geo.Point2(*y), 0.5, 2.0, "I", 0.0, 1.0, 0.0, 0.5)
        pts = bar.ring_samples(y, 0.5, 1.5, 10_000, rng)
        assert bar.verify_subsolution(bad, 1.0, 0.0, 1.0, pts) < 0
    assert t.elapsed < 30.0


@pytest.mark.criterion(5, "barrier boundary values and Case I M1 = 1/728")
def test_barrier_boundary_values():
    r = 0.4
    for y in [(0.1, 0.2), (1.5, -0.3), (-0.5, 0.0), (0.9, 1.0)]:
        spec = bar.db_barrier_constants(y, r, -6.0)
        inner = geo.boundary_samples(geo.H(y, r), 512).points
        outer = geo.boundary_samples(geo.H(y, 3 * r), 512).points
        assert np.max(np.abs(bar.db_barrier_eval(spec, inner) - 1.0)) <= 1e-10
        assert np.max(np.abs(bar.db_barrier_eval(spec, outer))) <= 1e-10
    assert {bar.db_barrier_constants(y, r, -6.0).case_id
            for y in [(0.1, 0.2), (1.5, -0.3), (-0.5, 0.0), (0.9, 1.0)]} == {"I", "II", "III", "IV"}
    assert bar.db_barrier_constants((0.0, 0.0), 1.0, -6.0).M1 == 1.0 / 728.0


@pytest.mark.criterion(6, "solver second-order convergence")
def test_solver_convergence():
    with Timer() as t:
        errs = []
        for n in (65, 129):
            g = sv.Grid(n1=n, n2=n)
            errs.append(sv.manufactured_error("mixed", g, sv.CoefficientField.constant(g)))
        g = sv.Grid(n1=65, n2=65)
        quad = sv.manufactured_error("x2sq", g, sv.CoefficientField.constant(g))
    assert 3.3 <= errs[0] / errs[1] <= 4.7
    assert quad <= 1e-9
    assert t.elapsed < 60.0


@pytest.mark.criterion(7, "ABP relaxation with fitted constant")
def test_abp_relaxation():
    grid = sv.Grid(n1=65, n2=65)
    C = hs.fit_abp_constant(range(100, 110), grid)
    assert C > 0
    for s in range(10):
        coeffs, f, g = hs.abp_problem(s, grid)
        sol = sv.solve_dirichlet(grid, coeffs, f, g)
        assert sv.check_abp(sol, f, C).margin >= 0
    for s in range(10):
        coeffs, _, g = hs.abp_problem(s, grid)
        sol = sv.solve_dirichlet(grid, coeffs, 0.0, g)
        assert sv.check_abp(sol, 0.0, C).sup_neg <= 1e-8


@pytest.mark.criterion(8, "Harnack ensemble, refinement stability")
def test_harnack_ensemble():
    with Timer() as t:
        coarse = hs.harnack_ensemble(range(20), 65)
        fine = hs.harnack_ensemble(range(20), 129)
    for runs in (coarse, fine):
        assert not any(r["discarded"] for r in runs)
        assert all(math.isfinite(r["quotient"]) for r in runs)
        for kind in ("double_ball", "critical_density"):
            assert all(r[kind].passed for r in runs)
            assert sum(not r[kind].vacuous for r in runs) >= 10
    qc = max(r["quotient"] for r in coarse)
    qf = max(r["quotient"] for r in fine)
    assert abs(qf - qc) / qc < 0.2
    assert t.elapsed < 300.0


@pytest.mark.criterion(9, "family closure under (u, f) -> (lam u, lam f)")
def test_family_closure():
    grid = sv.Grid(n1=65, n2=65)
    for seed in range(4):
        run = hs.ensemble_run(seed, grid)
        base = hs.run_checks(run)
        for lam in (0.1, 1.0, 7.0):
            res = hs.run_checks(run, scale=lam)
            for kind in ("double_ball", "critical_density", "power_decay"):
                assert res[kind].passed == base[kind].passed
            assert abs(res["quotient"] - base["quotient"]) <= 1e-12 * base["quotient"]
