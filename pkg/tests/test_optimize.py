import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussqfi import analytic as an
from gaussqfi import interferometers as ifm
from gaussqfi.interferometers import ScenarioConfig
from gaussqfi.optimize import (
    InnerSpec, NonFiniteObjective, golden_max, optimize_phase, optimize_r1, optimize_r2, optimize_scenario,
    scenario_qfi, sweep, t_critical_numeric, t_critical_sweep,
)

N = 0.1
R1 = ifm.r1_max(N)


def test_golden_finds_interior_maximum():
    x, fx, evals, ok = golden_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0, 1e-10)
    assert ok and x == pytest.approx(0.3, abs=1e-9) and evals < 100


@given(a=st.floats(-5, 5), b=st.floats(-5, 5), c=st.floats(-2, 2))
def test_golden_endpoint_honesty(a, b, c):
    f = lambda t: a * t + b * math.sin(3 * t) + c * t * t
    x, fx, _, _ = golden_max(f, 0.0, 2.0, 1e-9)
    assert 0.0 <= x <= 2.0
    assert fx >= max(f(0.0), f(2.0)) - 1e-12
    assert fx == f(x)


def test_golden_rejects_non_finite():
    with pytest.raises(NonFiniteObjective, match="r1=0"):
        golden_max(lambda t: math.nan if t == 0.0 else t, 0.0, 1.0, 1e-8, "r1")
    with pytest.raises(ValueError):
        golden_max(lambda t: t, 1.0, 0.0, 1e-8)


def test_r1_lossless_at_bound():
    res = optimize_r1(lambda r: an.qfi_lossless(N, r), N)
    assert res.best_params["r1"] == R1
    assert res.best_value == pytest.approx(0.44, rel=1e-12)
    assert res.converged


def test_r1_below_critical_transmission():
    res = optimize_r1(lambda r: an.qfi_internal(0.8, N, r), N)
    assert res.best_params["r1"] == 0.0
    assert res.best_value == pytest.approx(0.32, rel=1e-12)


def test_mandel_heavy_loss_prefers_no_first_squeezing():
    cfg = ScenarioConfig(family="mandel", eta=0.3, n_phi=N)
    res = optimize_scenario(cfg, InnerSpec(r1=True, r2=True, backend="analytic"))
    assert res.best_params["r1"] == pytest.approx(0.0, abs=1e-6)
    assert res.best_params["r2"] == pytest.approx(5.0, abs=1e-6)


def test_r2_cap_respected():
    res = optimize_r2(lambda r: r, cap=2.5)
    assert res.best_params["r2"] == 2.5
    with pytest.raises(ValueError):
        optimize_r2(lambda r: r, cap=-1.0)


def test_phase_matches_angle_formula():
    eta, r2 = 0.5, 5.0
    res = optimize_phase(lambda v: an.qfi_yurke_external(eta, N, R1, r2, v))
    p1, p2 = an.phi_opt_yurke(N, eta, r2)
    assert res.best_params["varphi"] == pytest.approx(p1, abs=1e-3)
    assert len(res.alternatives) == 1 and res.alternatives[0] == pytest.approx(p2, abs=1e-3)
    assert res.best_params["varphi"] + res.alternatives[0] == pytest.approx(2 * math.pi, abs=1e-6)


def test_phase_constant_objective_is_degenerate():
    res = optimize_phase(lambda v: 1.5)
    assert res.degenerate and res.converged and res.best_value == 1.5


def test_phase_single_peak():
    res = optimize_phase(lambda v: math.cos(v - 4.0))
    assert res.best_params["varphi"] == pytest.approx(4.0, abs=1e-7)
    assert res.alternatives == () and not res.degenerate


def _width_at_90(n):
    r1 = ifm.r1_max(n)
    grid = np.linspace(0, 2 * math.pi, 20001)
    vals = np.array([an.qfi_yurke_external(0.5, n, r1, 3.0, v) for v in grid])
    return np.mean(vals >= 0.9 * vals.max()) * 2 * math.pi


def test_peaks_narrow_with_dose():
    assert _width_at_90(10.0) < _width_at_90(0.1)


def test_scenario_analytic_backend_agrees():
    cfg = ScenarioConfig(family="yurke", T=0.95, n_phi=N)
    num = optimize_scenario(cfg, InnerSpec())
    ana = optimize_scenario(cfg, InnerSpec(backend="analytic"))
    assert num.best_value == pytest.approx(ana.best_value, rel=1e-6)
    assert num.best_params["r1"] == pytest.approx(ana.best_params["r1"], abs=1e-4)


def test_scenario_yurke_phase_optimum():
    cfg = ScenarioConfig(family="yurke", eta=0.1, r2=5.0, n_phi=N)
    res = optimize_scenario(cfg, InnerSpec(r1=False, r1_at_max=True, phase=True))
    bound = 0.44 * (1 - 0.9 * 1.2 / (2 * 0.1 * math.cosh(5.0) ** 2)) - 1e-4
    assert res.best_value >= bound
    assert res.best_params["phi"] == pytest.approx(an.phi_opt_yurke(N, 0.1, 5.0)[0], abs=1e-3)


def test_scenario_r2_matches_closed_form():
    eta = 0.8
    cfg = ScenarioConfig(family="mandel", eta=eta, n_phi=N)
    res = optimize_scenario(cfg, InnerSpec(r1=False, r1_at_max=True, r2=True, backend="analytic", tol=1e-10))
    assert res.best_params["r2"] == pytest.approx(an.r2_opt_mandel(eta, N)[0], abs=1e-4)
    assert res.best_value == pytest.approx(an.qfi_mandel_full_r2_one(eta, N), rel=1e-6)


def test_scenario_needs_dose():
    with pytest.raises(ValueError, match="n_phi"):
        optimize_scenario(ScenarioConfig(family="yurke"), InnerSpec())


@pytest.mark.parametrize("bad", [dict(backend="gpu"), dict(r2_cap=-1), dict(r2=True, tie_r2=True),
                                 dict(r1=True, r1_at_max=True)])
def test_inner_spec_validation(bad):
    with pytest.raises(ValueError):
        InnerSpec(**bad)


def test_equal_squeezing_tie():
    cfg = ScenarioConfig(family="yurke", eta=0.5, phi=math.pi, n_phi=N)
    res = optimize_scenario(cfg, InnerSpec(r1=False, r1_at_max=True, tie_r2=True))
    assert res.best_params["r2"] == res.best_params["r1"] == R1


def test_branch_switch_around_critical_transmission():
    tc = an.t_critical(N)
    template = ScenarioConfig(family="yurke", n_phi=N)
    for T in (0.6, 0.8, tc - 0.005):
        res = optimize_scenario(template.replace(T=T))
        assert res.best_params["r1"] == 0.0
        assert res.best_params["alpha_sq"] == pytest.approx(N, rel=1e-12)
    for T in (tc + 0.01, 0.95, 1.0):
        res = optimize_scenario(template.replace(T=T))
        r1 = res.best_params["r1"]
        assert r1 > 0
        assert res.best_params["alpha_sq"] == pytest.approx(ifm.seed_for_target(N, r1) ** 2, rel=1e-9, abs=1e-15)
        assert res.best_params["n_phi"] == pytest.approx(N, rel=1e-10)


def test_numeric_critical_transmission():
    assert t_critical_numeric(N, backend="analytic") == pytest.approx(an.t_critical(N), abs=1e-3)
    rows = t_critical_sweep([0.1, 1.0], numeric=False)
    assert [r["t_c_formula"] for r in rows] == [an.t_critical(0.1), an.t_critical(1.0)]
    assert "t_c_numeric" not in rows[0]


def test_sweep_columns_and_references():
    vals = np.linspace(0.5, 1.0, 6)
    res = sweep(ScenarioConfig(family="yurke", n_phi=N), "T", vals, InnerSpec(backend="analytic"))
    assert res.axis == "T" and res.values == tuple(vals)
    np.testing.assert_allclose(res.column("snl"), 4 * N)
    np.testing.assert_allclose(res.column("mzi"), 4 * vals * N)
    np.testing.assert_allclose(res.column("iq_max"), 0.44)
    qfi = res.column("qfi")
    above = qfi > res.column("mzi") + 1e-9
    assert not above[vals < an.t_critical(N)].any() and above[vals > an.t_critical(N)].all()


def test_sweep_equal_squeezing_curve():
    etas = np.linspace(0.1, 1.0, 5)
    inner = InnerSpec(r1=False, r1_at_max=True, tie_r2=True)
    res = sweep(ScenarioConfig(family="yurke", phi=math.pi + 1e-3, n_phi=N), "eta", etas, inner)
    np.testing.assert_allclose(res.column("qfi"), [an.qfi_equal_squeezing(e, N) for e in etas], rtol=1e-5)


def test_sweep_records_failures_and_continues():
    res = sweep(ScenarioConfig(family="yurke", n_phi=N), "r1", [0.1, 0.5, 1.0], InnerSpec(r1=False))
    assert res.points[0].error is None
    assert "InfeasibleDose" in res.points[1].error and res.points[1].result is None
    assert math.isnan(res.column("qfi")[2])


@pytest.mark.parametrize("axis, inner", [("r1", InnerSpec()), ("phi", InnerSpec(phase=True)),
                                         ("r1", InnerSpec(r1=False, r1_at_max=True)), ("bogus", InnerSpec())])
def test_sweep_rejects_bad_axis(axis, inner):
    with pytest.raises(ValueError):
        sweep(ScenarioConfig(family="yurke", n_phi=N), axis, [0.1, 0.2], inner)


def test_sweep_rejects_non_monotone():
    with pytest.raises(ValueError, match="monotone"):
        sweep(ScenarioConfig(family="yurke", n_phi=N), "T", [0.5, 0.7, 0.6])


def test_sweep_parallel_is_deterministic():
    template = ScenarioConfig(family="yurke", eta=0.3, r2=2.0, n_phi=N)
    inner = InnerSpec(r1=False, r1_at_max=True, phase=True)
    vals = [0.05, 0.3, 1.0, 4.0]
    one = sweep(template, "n_phi", vals, inner)
    two = sweep(template, "n_phi", vals, inner, jobs=2)
    assert [p.result for p in one.points] == [p.result for p in two.points]


def test_companion_column():
    res = sweep(ScenarioConfig(family="mandel", n_phi=N), "eta", [0.4, 0.8],
                InnerSpec(r2=True, backend="analytic"), companion=True)
    comp = res.column("companion_qfi")
    assert np.all(np.isfinite(comp)) and np.all(comp > 0)
