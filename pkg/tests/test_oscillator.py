import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambstring import (
    IntegrationError,
    OdeProblem,
    OscillatorState,
    energy,
    energy_inequality_check,
    propagate,
    propagator_U,
)
from lambstring._backend import get_kernels
from lambstring.oscillator import Form, growth_sups, lipschitz_check

from conftest import TWO_PI, linear_periodic, linear_problem, undriven_problem


def test_decay_oracle():
    prob = undriven_problem("-y")
    tr = propagate(prob, OscillatorState(0.0, 1.0), 2.0, 1e-3)
    assert tr.t1 == 2.0
    assert abs(tr.final.y - math.exp(-1)) <= 1e-8


def test_linear_periodic_start(linear):
    prob, _ = linear
    tr = propagate(prob, OscillatorState(0.0, 0.4), TWO_PI)
    assert tr.final.y == pytest.approx(0.4, abs=1e-12)
    t = np.linspace(0, TWO_PI, 101)
    assert np.max(np.abs(tr.y_at(t) - linear_periodic(t))) <= 1e-12


def test_equilibrium_m_positive():
    prob = undriven_problem("1 - y^3", m=2.0)
    tr = propagate(prob, OscillatorState(0.0, 1.0, 0.0), 30.0)
    assert np.all(tr.y == 1.0) and np.all(tr.v == 0.0)


def test_form_and_coefficients():
    m0 = undriven_problem("-y", mu=4.0)
    assert m0.form is Form.FIRST_ORDER
    assert m0.coefficients == (0.25, 0.0, 0.5)
    m2 = undriven_problem("-y", m=2.0)
    assert m2.form is Form.LIENARD
    assert m2.coefficients == (0.5, 1.0, 1.0)


def test_step_adjusts_to_span():
    prob = undriven_problem("-y")
    tr = propagate(prob, OscillatorState(0.5, 1.0), 1.5, 0.3)
    assert tr.n == 4 and tr.h == 0.25 and tr.t[-1] == 1.5
    assert np.all(np.diff(tr.t) > 0)


def test_dense_output_is_continuous_at_knots(duffing):
    tr = propagate(duffing.problem, OscillatorState(0.0, 0.2, 0.0), 5.0, 0.01)
    knots = tr.t[1:-1]
    eps = 1e-13
    for fn in (tr.y_at, tr.v_at):
        assert np.max(np.abs(fn(knots - eps) - fn(knots + eps))) <= 1e-12
    assert np.max(np.abs(tr.y_at(tr.t) - tr.y)) <= 1e-14


def test_dense_output_coverage():
    tr = propagate(undriven_problem("-y"), OscillatorState(0.0, 1.0), 1.0, 0.1)
    with pytest.raises(ValueError):
        tr.y_at(1.5)
    with pytest.raises(ValueError):
        tr.vdot_at(0.5)


def test_blowup_reports_last_good_time():
    prob = undriven_problem("y^3 - y^5", m=0.0)
    with pytest.raises(IntegrationError) as exc:
        propagate(prob, OscillatorState(0.0, 5.0), 10.0, 1.0)
    assert 0.0 <= exc.value.last_good_time < 10.0


def test_propagator_identities(linear):
    prob, _ = linear
    assert np.array_equal(propagator_U(prob, 1.3, 1.3, 0.7), [0.7])
    w = prob.omega0
    a = propagator_U(prob, 1.0, 2.0, propagator_U(prob, 0.0, 1.0, 0.1, 1e-3), 1e-3)
    b = propagator_U(prob, 0.0, 2.0, 0.1, 1e-3)
    assert abs(a - b).max() <= 1e-8
    c = propagator_U(prob, 0.5 + w, 2.5 + w, 0.1, 1e-3)
    d = propagator_U(prob, 0.5, 2.5, 0.1, 1e-3)
    assert abs(c - d).max() <= 1e-8
    with pytest.raises(ValueError):
        propagator_U(prob, 1.0, 0.5, 0.0)


@pytest.mark.parametrize("m, y, v, E", [(2, 0, 1, 1.0), (2, 2, 0, 2.0), (0, 0, 0, 0.0)])
def test_energy_examples(m, y, v, E):
    prob = undriven_problem("-y", m=m)
    assert energy(prob, OscillatorState(0.0, y, v)) == pytest.approx(E, abs=1e-12)


def test_energy_undriven_never_grows():
    prob = undriven_problem("-y^3 - y", m=2.0)
    rep = energy_inequality_check(propagate(prob, OscillatorState(0.0, 1.5, -0.5), 40.0))
    assert rep.margin <= 1e-12 and rep.passed
    eq = energy_inequality_check(propagate(prob, OscillatorState(0.0, 0.0, 0.0), 5.0))
    assert eq.margin == 0.0


def test_energy_driven_linear():
    prob, _ = linear_problem(m=2.0)
    rep = energy_inequality_check(propagate(prob, OscillatorState(0.0, 0.3, 0.1), 30.0, 1e-3))
    assert rep.margin <= 1e-6


def test_energy_check_requires_mass():
    prob = undriven_problem("-y")
    with pytest.raises(ValueError):
        energy_inequality_check(propagate(prob, OscillatorState(0.0, 1.0), 1.0))


def test_lipschitz_linear_is_pair_independent(linear):
    prob, _ = linear
    r1 = lipschitz_check(prob, 0.0, 1.0, 5.0, 0.01)
    r2 = lipschitz_check(prob, -3.0, 2.5, 5.0, 0.01)
    assert r1 == pytest.approx(r2, rel=1e-9)


def test_lipschitz_local_ratio_stabilizes(duffing):
    prob = duffing.problem
    r1 = lipschitz_check(prob, (0.5, 0.0), (0.5 + 1e-3, 0.0), 6.0, 0.01)
    r2 = lipschitz_check(prob, (0.5, 0.0), (0.5 + 1e-6, 0.0), 6.0, 0.01)
    assert r1 == pytest.approx(r2, rel=1e-2)


def test_contraction_gap_decreases():
    prob = undriven_problem("-y")
    a = propagate(prob, OscillatorState(0.0, 1.0), 4.0, 0.01)
    b = propagate(prob, OscillatorState(0.0, 0.5), 4.0, 0.01)
    gap = np.abs(a.y - b.y)
    assert gap[0] == 0.5 and np.all(np.diff(gap) < 0)


def test_growth_sups_monotone(duffing):
    sups = growth_sups(duffing.problem, OscillatorState(0.0, 1.0, 0.0), [1.0, 5.0, 20.0], 0.01)
    assert np.all(np.diff(sups) >= 0) and np.all(np.isfinite(sups))


@settings(max_examples=10, deadline=None)
@given(y0=st.floats(-3, 3), v0=st.floats(-3, 3))
def test_backends_agree(y0, v0):
    from conftest import load_scenario
    prob = load_scenario("demo:duffing-m2").problem
    py = propagate(prob, OscillatorState(0.0, y0, v0), 3.0, 0.01, kernels=get_kernels("python"))
    cy = propagate(prob, OscillatorState(0.0, y0, v0), 3.0, 0.01, kernels=get_kernels("cython"))
    assert np.max(np.abs(py.y - cy.y)) <= 1e-13 * (1 + np.max(np.abs(py.y)))
    assert np.max(np.abs(py.v - cy.v)) <= 1e-13 * (1 + np.max(np.abs(py.v)))
