import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grushin_harnack import geometry as geo
from grushin_harnack import harness as hs
from grushin_harnack import solver as sv

GRID = sv.Grid(n1=65, n2=65)


def const_solution(value, grid=GRID):
    c = sv.CoefficientField.constant(grid)
    return sv.Solution(grid.evaluate(value), 0.0, grid, c)


def test_S_examples():
    box = geo.Box((0.0, 0.0), 1.0)
    assert hs.compute_S(box, lambda a, b: 0.0 * a).value == 0.0
    # ‖x1‖ over the box is sqrt(4/3), diameter 2√2
    want = 2 * math.sqrt(2) * math.sqrt(4 / 3)
    assert hs.compute_S(box, lambda a, b: 1.0 + 0 * a, resolution=512).value == pytest.approx(
        want, rel=1e-4)
    grid_val = hs.compute_S(box, lambda a, b: 1.0 + 0 * a, GRID).value
    assert grid_val == pytest.approx(want, rel=0.1)
    with pytest.raises(TypeError):
        hs.compute_S(box, np.ones(3))


@given(st.floats(0.0, 5.0), st.integers(0, 2**16))
@settings(max_examples=20)
def test_S_homogeneous_and_order_preserving(t, seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(GRID.n1, GRID.n2))
    g = np.abs(f) + rng.uniform(size=f.shape)
    ball = geo.BTilde((0.4, 0.1), 0.5)
    s = hs.compute_S(ball, f, GRID).value
    assert hs.compute_S(ball, t * f, GRID).value == pytest.approx(t * s, rel=1e-12, abs=1e-15)
    assert hs.compute_S(ball, np.abs(f), GRID).value <= hs.compute_S(ball, g, GRID).value


def test_double_ball_examples():
    sol = const_solution(2.0)
    rep = hs.check_double_ball(sol, (0.5, 0.0), 0.3, (0.5, 1.0, 2.0), 0.0)
    assert rep.passed and not rep.vacuous
    assert rep.margins["inf_ratio_minus_gamma"] == pytest.approx(0.5)
    neg = hs.check_double_ball(const_solution(-1.0), (0.5, 0.0), 0.3, (0.5, 1.0, 2.0), 0.0)
    assert neg.vacuous and neg.passed
    big_f = hs.check_double_ball(sol, (0.5, 0.0), 0.3, (0.5, 1e-6, 2.0), 1.0)
    assert big_f.vacuous and "S-norm" in big_f.note
    with pytest.raises(sv.RegionOutsideGridError):
        hs.check_double_ball(sol, (1.5, 0.0), 0.3, (0.5, 1.0, 4.0), 0.0)


def test_double_ball_failure_is_reported():
    X1, X2 = GRID.mesh()
    # large near the center, tiny on the rim of B(y, r)
    sol = const_solution(np.exp(-40 * ((X1 - 0.5) ** 2 + X2**2)))
    rep = hs.check_double_ball(sol, (0.5, 0.0), 0.4, (0.9, 1.0, 2.0), 0.0)
    assert not rep.passed and rep.margins["inf_ratio_minus_gamma"] < 0


def test_critical_density_examples():
    sol = const_solution(1.5)
    rep = hs.check_critical_density(sol, (0.5, 0.0), 0.25, (0.5, 0.4, 1.0, 4.0), 0.0)
    assert rep.passed and rep.note == "branch=inf"
    low = hs.check_critical_density(const_solution(0.5), (0.5, 0.0), 0.25, (0.5, 0.4, 1.0, 4.0), 0.0)
    assert low.vacuous
    X1, _ = GRID.mesh()
    split = const_solution(np.where(X1 > 0.5, 2.0, 0.0))
    bad = hs.check_critical_density(split, (0.5, 0.0), 0.25, (0.3, 0.4, 1.0, 4.0), 0.0)
    assert not bad.passed and bad.note == "branch=none"


def test_power_decay_examples():
    X1, X2 = GRID.mesh()
    flat = const_solution(1.0)
    rep = hs.check_power_decay(flat, (0.5, 0.0), 0.25, (2.0, 0.5, 1.0, 4.0), 0.0, k_max=4)
    assert rep.passed and rep.measured["sequence"] == [0.0] * 4
    # a plateau above M^k on most of the half ball violates the first step
    d = geo.dtilde((0.5, 0.0), GRID.points())
    peak = const_solution(np.where(d < 0.15, 100.0, 0.5))
    bad = hs.check_power_decay(peak, (0.5, 0.0), 0.25, (2.0, 0.5, 1.0, 4.0), 0.0, k_max=6)
    assert not bad.passed and bad.note == "first_violation=k1"
    high = hs.check_power_decay(const_solution(3.0), (0.5, 0.0), 0.25, (2.0, 0.5, 1.0, 4.0), 0.0)
    assert high.vacuous


def test_harnack_quotient_examples():
    assert hs.harnack_quotient(const_solution(2.0), (0.5, 0.0), 0.25, 2.0, 0.0) == 1.0
    with pytest.raises(hs.DegenerateInputError):
        hs.harnack_quotient(const_solution(0.0), (0.5, 0.0), 0.25, 2.0, 0.0)
    rep = hs.check_harnack(const_solution(2.0), (0.5, 0.0), 0.25, 2.0, 0.0, log_C=1.0)
    assert rep.passed and rep.margins["log_C_minus_log_quotient"] == pytest.approx(1.0)
    assert rep.to_dict()["check_kind"] == "harnack"


def test_family_closure_and_shift():
    run = hs.ensemble_run(0, GRID)
    base = hs.run_checks(run)
    for lam in (0.25, 3.0):
        res = hs.run_checks(run, scale=lam)
        assert res["quotient"] == pytest.approx(base["quotient"], rel=1e-12)
        for k in ("double_ball", "critical_density", "power_decay"):
            assert res[k].passed == base[k].passed
    # (τ − λu) solves L(τ − λu) = x1²(−λf): check it against a direct solve
    coeffs, f, g = hs.ensemble_problem(0, GRID)
    tau, lam = 5.0, 0.5
    direct = sv.solve_dirichlet(GRID, coeffs, lambda a, b: -lam * f(a, b),
                                lambda a, b: tau - lam * g(a, b))
    np.testing.assert_allclose(run.sol.scaled(-lam, tau).values, direct.values, atol=1e-9)


def test_ensemble_is_deterministic_and_grid_independent():
    a = hs.ensemble_problem(7, GRID)
    b = hs.ensemble_problem(7, GRID.refine())
    np.testing.assert_allclose(b[0].a11[::2, ::2], a[0].a11)
    X1, X2 = GRID.mesh()
    np.testing.assert_array_equal(a[1](X1, X2), hs.ensemble_problem(7, GRID)[1](X1, X2))


def test_abp_fit_is_positive():
    g = sv.Grid(n1=33, n2=33)
    C = hs.fit_abp_constant(range(3), g)
    assert C > 0
    for s in range(3):
        coeffs, f, b = hs.abp_problem(s, g)
        assert sv.check_abp(sv.solve_dirichlet(g, coeffs, f, b), f, C).margin >= 0


def test_suite_geometry_only_and_determinism():
    cfg = hs.SuiteConfig(checks=("geometry",), structure_pairs=5)
    r1, code = hs.run_suite(cfg)
    r2, _ = hs.run_suite(cfg)
    assert code == 0
    assert hs.dumps_report(r1) == hs.dumps_report(r2)
    kinds = {c["check_kind"] for c in r1["checks"]}
    assert "solver_convergence" not in kinds and "structure_H" in kinds
    assert "ledger" not in r1
    with pytest.raises(ValueError):
        hs.run_suite(hs.SuiteConfig(checks=("tea",)))


def test_default_suite():
    report, code = hs.run_suite()
    assert code == 0, report["summary"]
    assert report["summary"]["total"] >= 12
    assert report["schema_version"] == hs.SCHEMA_VERSION
    assert {e["name"] for e in report["ledger"]} >= {"M", "C_harnack"}
