import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussqfi import analytic as an
from gaussqfi import gaussian as g
from gaussqfi import interferometers as ifm
from gaussqfi.circuit import Circuit, Loss, PhaseShift, TraceOut
from gaussqfi.qfi import (
    RouteNotApplicable, applicable_routes, circuit_qfi, qfi, qfi_eigendecomp, qfi_pure, qfi_two_mode,
    qfi_vectorized, state_derivative,
)


def _lossy_two_mode(rng, seeded=True):
    amps = (rng.normal() + 1j * rng.normal(), rng.normal() + 1j * rng.normal()) if seeded else (0, 0)
    steps = (
        g.make_tms(rng.uniform(0.05, 1.0), 0.0, (0, 1)),
        PhaseShift(0),
        Loss(0, rng.uniform(0.3, 0.95)),
        Loss(1, rng.uniform(0.3, 0.95)),
        g.make_tms(rng.uniform(0.0, 1.5), rng.uniform(0, 6), (0, 1)),
        g.make_beam_splitter(rng.uniform(0.1, 0.9), (0, 1)),
        Loss(0, rng.uniform(0.3, 0.95)),
    )
    return Circuit(2, amps, steps)


def _three_mode(rng):
    # a thermal ancilla keeps every symplectic eigenvalue above 1
    steps = (
        g.make_tms(rng.uniform(0.3, 0.8), 0.0, (2, 3)),
        TraceOut((3,)),
        g.make_tms(rng.uniform(0.05, 0.8), 0.0, (0, 1)),
        PhaseShift(0),
        Loss(1, rng.uniform(0.3, 0.95)),
        g.make_tms(rng.uniform(0.0, 1.0), rng.uniform(0, 6), (0, 2)),
        g.make_beam_splitter(rng.uniform(0.1, 0.9), (1, 2)),
        Loss(0, rng.uniform(0.3, 0.95)),
        Loss(2, rng.uniform(0.3, 0.95)),
    )
    return Circuit(4, tuple(rng.normal(size=4) * 0.7), steps)


def _finite_difference(circuit, phi, h=1e-5):
    plus, minus = circuit.run(phi + h).complex, circuit.run(phi - h).complex
    return (plus.d - minus.d) / (2 * h), (plus.sigma - minus.sigma) / (2 * h)


def test_derivative_matches_finite_difference(rng):
    circuits = [_lossy_two_mode(rng) for _ in range(5)] + [_three_mode(rng) for _ in range(3)]
    for c in circuits:
        phi = rng.uniform(0, 6)
        pair = state_derivative(c, phi)
        dd, ds = _finite_difference(c, phi)
        np.testing.assert_allclose(pair.d_d, dd, atol=1e-7)
        np.testing.assert_allclose(pair.d_sigma, ds, atol=1e-7)


def test_bare_phase_on_coherent():
    alpha, phi = 1.2 - 0.4j, 0.3
    c = Circuit(1, (alpha,), (PhaseShift(0),))
    pair = state_derivative(c, phi)
    rotated = alpha * np.exp(-1j * phi)
    np.testing.assert_allclose(pair.d_d, [-1j * rotated, np.conj(-1j * rotated)], atol=1e-12)
    assert qfi_pure(pair).value == pytest.approx(4 * abs(alpha) ** 2, rel=1e-12)


def test_vacuum_has_no_derivative_or_information():
    c = Circuit(2, (0, 0), (g.make_beam_splitter(0.5), PhaseShift(0), Loss(0, 0.5)))
    pair = state_derivative(c, 0.4)
    np.testing.assert_allclose(pair.d_d, 0.0)
    np.testing.assert_allclose(pair.d_sigma, 0.0, atol=1e-15)
    assert qfi(pair).value == pytest.approx(0.0, abs=1e-14)
    pure = Circuit(1, (0,), (PhaseShift(0),))
    assert qfi_pure(state_derivative(pure, 1.0)).value == pytest.approx(0.0, abs=1e-30)


def test_thermal_state_without_derivative():
    c = Circuit(2, (0, 0), (g.make_tms(0.7), TraceOut((1,)), PhaseShift(0), Loss(0, 0.4)))
    assert qfi_eigendecomp(state_derivative(c, 0.2)).value == pytest.approx(0.0, abs=1e-14)


def test_lossless_optimum_all_routes():
    n = 0.1
    c = ifm.build(ifm.ScenarioConfig(family="yurke", r1=ifm.r1_max(n), n_phi=n))
    pair = state_derivative(c, 0.0)
    routes = applicable_routes(pair)
    assert "pure" in routes
    for route in routes:
        assert qfi(pair, route).value == pytest.approx(0.44, abs=1e-8)


def test_two_mode_matches_yurke_formula():
    n, eta, r2 = 0.1, 0.7, 1.0
    p1, _ = an.phi_opt_yurke(n, eta, 5.0)
    cfg = ifm.ScenarioConfig(family="yurke", r1=ifm.r1_max(n), r2=r2, eta=eta, phi=p1, n_phi=n)
    value = qfi_two_mode(state_derivative(ifm.build(cfg), p1)).value
    assert value == pytest.approx(an.qfi_yurke_external(eta, n, ifm.r1_max(n), r2, p1), rel=1e-8)


def test_mandel_no_a_has_structural_vacuum_mode():
    n, eta, r1, r2 = 0.1, 0.6, 0.2, 1.3
    cfg = ifm.ScenarioConfig(family="mandel", r1=r1, r2=r2, eta=eta, discard_a=True, n_phi=n)
    pair = state_derivative(ifm.build(cfg), 0.7)
    with pytest.raises(RouteNotApplicable):
        qfi_two_mode(pair)
    assert qfi(pair).value == pytest.approx(an.qfi_mandel_no_a(eta, n, r1, r2), rel=1e-8)


def test_two_mode_rejects_pure_states():
    c = ifm.build(ifm.ScenarioConfig(family="yurke", r1=0.3, r2=0.2, alpha=0.4))
    with pytest.raises(RouteNotApplicable):
        qfi_two_mode(state_derivative(c, 0.1))


def test_pure_route_rejects_mixed_states(rng):
    with pytest.raises(RouteNotApplicable):
        qfi_pure(state_derivative(_lossy_two_mode(rng), 0.3))


def test_eigendecomp_matches_two_mode(rng):
    for _ in range(100):
        pair = state_derivative(_lossy_two_mode(rng), rng.uniform(0, 6))
        assert qfi_eigendecomp(pair).value == pytest.approx(qfi_two_mode(pair).value, rel=1e-8)


def test_singular_pairs_dropped_on_three_modes(rng):
    # a vacuum normal mode survives loss; the oracle must regularise, the drop is exact
    c = Circuit(3, (0.4, 0.2, 0.0), (
        g.make_tms(0.6, 0.0, (0, 1)), PhaseShift(0), Loss(0, 0.7), g.make_beam_splitter(0.5, (1, 2)),
    ))
    pair = state_derivative(c, 0.3)
    res = qfi_eigendecomp(pair)
    assert not res.regularization_used and res.diagnostics["dropped"] > 0
    assert res.value == pytest.approx(qfi_vectorized(pair).value, rel=1e-5)


def test_eigendecomp_matches_vectorized_three_modes(rng):
    for _ in range(20):
        pair = state_derivative(_three_mode(rng), rng.uniform(0, 6))
        assert not qfi_vectorized(pair).regularization_used
        assert qfi_eigendecomp(pair).value == pytest.approx(qfi_vectorized(pair).value, rel=1e-8)


def test_pure_mode_terms_dropped_exactly():
    # the reduced (b, c) Mandel state keeps an exact vacuum mode under uniform loss
    n, eta, r1, r2 = 0.0434, 0.234, 0.05, 0.01
    cfg = ifm.ScenarioConfig(family="mandel", r1=r1, r2=r2, eta=eta, discard_a=True, n_phi=n)
    res = qfi_eigendecomp(state_derivative(ifm.build(cfg), 0.0))
    assert not res.regularization_used
    assert res.diagnostics["dropped"] > 0
    assert res.value == pytest.approx(an.qfi_mandel_no_a(eta, n, r1, r2), rel=1e-9)


def test_regularised_at_rank_change():
    n, eta = 0.1, 0.5
    r = ifm.r1_max(n)
    cfg = ifm.ScenarioConfig(family="yurke", r1=r, r2=r, eta=eta, phi=math.pi, n_phi=n)
    pair = state_derivative(ifm.build(cfg), math.pi)
    # at the point itself the output is vacuum-like; the value is the point QFI
    assert qfi(pair).value == pytest.approx(eta**2 * 0.44, rel=1e-6)
    near = state_derivative(ifm.build(cfg), math.pi + 1e-3)
    assert qfi(near).value == pytest.approx(an.qfi_equal_squeezing(eta, n), rel=1e-5)


def test_unknown_route(rng):
    with pytest.raises(ValueError):
        qfi(state_derivative(_lossy_two_mode(rng), 0.0), "bogus")


@given(seed=st.integers(0, 2**32 - 1), seeded=st.booleans())
def test_routes_agree(seed, seeded):
    rng = np.random.default_rng(seed)
    pair = state_derivative(_lossy_two_mode(rng, seeded), rng.uniform(0, 6))
    values = [qfi(pair, r).value for r in applicable_routes(pair)]
    assert len(values) >= 2
    np.testing.assert_allclose(values, values[0], rtol=1e-6)


@given(seed=st.integers(0, 2**32 - 1))
def test_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    base = Circuit(2, (rng.normal() + 0.3j, rng.normal()), (g.make_tms(rng.uniform(0, 1)), PhaseShift(0)))
    extra = [g.make_beam_splitter(rng.uniform(), (0, 1)), g.make_tms(rng.uniform(0, 1.5), rng.uniform(0, 6), (0, 1))]
    longer = base.with_steps(base.steps + tuple(extra))
    phi = rng.uniform(0, 6)
    assert circuit_qfi(longer, phi).value == pytest.approx(circuit_qfi(base, phi).value, rel=1e-8)


@given(seed=st.integers(0, 2**32 - 1), T=st.floats(0.0, 1.0), mode=st.integers(0, 1))
def test_data_processing(seed, T, mode):
    rng = np.random.default_rng(seed)
    c = _lossy_two_mode(rng)
    phi = rng.uniform(0, 6)
    more = c.with_steps(c.steps + (Loss(mode, T),))
    assert circuit_qfi(more, phi).value <= circuit_qfi(c, phi).value + 1e-9
