import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambstring import (
    Drive,
    OdeProblem,
    OscillatorState,
    attractor_sample,
    build_map,
    convergence_metric,
    find_bracket,
    fixed_point_newton_m,
    fixed_points_m0,
    iterate_to_fixed_point,
    make_force,
    make_params,
    propagate,
    propagator_U,
)
from lambstring.poincare import NoFixedPointError, periodicity_defect

from conftest import TWO_PI, linear_periodic, profile, undriven_problem

DECAY = math.exp(-math.pi)


@pytest.fixture(scope="module")
def lin_map(linear):
    return build_map(linear[0])


def test_linear_map_oracle(lin_map):
    assert lin_map(0.0) == pytest.approx(0.4 * (1 - DECAY), abs=1e-10)
    assert lin_map(0.4) == pytest.approx(0.4, abs=1e-12)
    ys = np.linspace(-3, 3, 7)
    assert np.allclose(lin_map.apply_many(ys), DECAY * (ys - 0.4) + 0.4, atol=1e-10, rtol=0)


def test_map_matches_propagator(lin_map, duffing):
    assert lin_map(1.7) == propagator_U(lin_map.problem, 0.0, TWO_PI, 1.7, lin_map.h)[0]
    m = build_map(duffing.problem)
    Y = np.array([0.3, -0.2])
    U = propagator_U(duffing.problem, 0.0, m.omega0, Y, m.h)
    assert np.array_equal(m(Y), U)


def test_undriven_equilibrium_is_fixed():
    assert build_map(undriven_problem("-y"))(0.0) == 0.0


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-4, 4), b=st.floats(-4, 4))
def test_m0_map_is_increasing(a, b):
    from conftest import load_scenario
    pmap = build_map(load_scenario("demo:bistable-m0").problem, TWO_PI / 256)
    if a == b:
        return
    lo, hi = sorted((a, b))
    Tlo, Thi = pmap(lo), pmap(hi)
    assert Tlo <= Thi
    if hi - lo > 1e-6:
        assert Tlo < Thi


def test_bracket_linear(linear):
    br = find_bracket(linear[0])
    assert br.q == pytest.approx(1.0)
    assert br.tight_plus == pytest.approx(2.0, abs=1e-9)
    assert br.tight_minus == pytest.approx(-2.0, abs=1e-9)
    assert br.y_plus >= 2 and br.y_minus <= -2
    assert br.margin == pytest.approx(1e-3 * 4, rel=1e-6)


def test_bracket_collapses_without_drive():
    br = find_bracket(undriven_problem("-y"))
    assert abs(br.tight_plus) <= 1e-9 and abs(br.tight_minus) <= 1e-9
    assert br.margin == 1e-6


def test_bracket_cubic():
    # mu = 1/4, kappa = 1: a = 2 and alpha = a / (2 kappa) = 1; forcing cos(2t) has q = 1
    params = make_params(0.25, 1.0, 0)
    prob = OdeProblem(params, make_force("-y^3"), Drive.from_profile(profile(sin=[0.5])))
    br = find_bracket(prob)
    assert br.q == pytest.approx(1.0)
    assert br.tight_plus == pytest.approx(1.0, abs=1e-9)
    assert br.tight_minus == pytest.approx(-1.0, abs=1e-9)


def test_bracket_signs(linear):
    prob = linear[0]
    br = find_bracket(prob)
    alpha = prob.coefficients[0]
    hi = np.linspace(br.y_plus, 100, 500)
    lo = np.linspace(-100, br.y_minus, 500)
    assert np.all(alpha * prob.force(hi) + br.q < 0)
    assert np.all(alpha * prob.force(lo) - br.q > 0)


def test_linear_fixed_point(lin_map):
    fps = fixed_points_m0(lin_map, find_bracket(lin_map.problem))
    assert len(fps.points) == 1
    fp = fps.points[0]
    assert fp.Y == pytest.approx(0.4, abs=1e-9) and fp.stability == "attracting"


def test_bistable_fixed_points(demo):
    pmap = build_map(demo("bistable-m0").problem)
    fps = fixed_points_m0(pmap, find_bracket(pmap.problem))
    ys = [p.Y for p in fps.points]
    assert ys == sorted(ys)
    assert np.allclose(ys, [-1, 0, 1], atol=1e-8)
    assert [p.stability for p in fps.points] == ["attracting", "repelling", "attracting"]
    assert all(p.residual <= 1e-10 for p in fps.points)
    # constant sign of T(y) - y between consecutive roots
    for lo, hi in zip(ys[:-1], ys[1:]):
        g = pmap.apply_many(np.linspace(lo, hi, 40)[1:-1]) - np.linspace(lo, hi, 40)[1:-1]
        assert np.all(g > 0) or np.all(g < 0)
    assert fps.z_minus == ys[0] and fps.z_plus == ys[-1]


def test_undriven_linear_single_root():
    pmap = build_map(undriven_problem("-y"))
    fps = fixed_points_m0(pmap, find_bracket(pmap.problem))
    assert [p.Y for p in fps.points] == pytest.approx([0.0], abs=1e-9)
    assert fps.points[0].stability == "attracting"


def test_no_fixed_point_in_bad_bracket(lin_map):
    from lambstring.poincare import BracketB
    with pytest.raises(NoFixedPointError):
        fixed_points_m0(lin_map, BracketB(1.0, 2.0, 1.0, 2.0, 1.0, 0.0), 16)


def test_iteration_history(lin_map):
    it = iterate_to_fixed_point(lin_map, 0.0, 100, 1e-12)
    assert it.history[1] == pytest.approx(0.38272, abs=1e-5)
    assert it.history[2] == pytest.approx(0.39925, abs=1e-5)
    assert it.converged and it.monotone and np.all(np.diff(it.history) >= 0)
    assert it.Y == pytest.approx(0.4, abs=1e-11)
    at_fp = iterate_to_fixed_point(lin_map, 0.4, 10, 1e-10)
    assert len(at_fp.history) == 2


def test_iteration_escapes_into_bracket(lin_map):
    br = find_bracket(lin_map.problem)
    for seed in (-50.0, 50.0):
        it = iterate_to_fixed_point(lin_map, seed, 40)
        inside = br.contains(it.history)
        first = int(np.argmax(inside))
        assert inside.any() and inside[first:].all()


def test_newton_on_duffing(duffing):
    pmap = build_map(duffing.problem)
    it = iterate_to_fixed_point(pmap, [0.0, 0.0], 30)
    fp = fixed_point_newton_m(pmap, it.Y, 1e-10)
    assert fp.residual < 1e-10 and fp.spectral_radius < 1 and fp.stability == "attracting"
    assert periodicity_defect(duffing.problem, fp.Y, 3) <= 1e-9


def test_newton_undriven_oracle():
    pmap = build_map(undriven_problem("-y^3 - y", m=2.0))
    fp = fixed_point_newton_m(pmap, [0.3, -0.1], 1e-12)
    assert np.allclose(fp.Y, 0.0, atol=1e-12)
    # linearization y'' + y' + y/2 = 0 has Re(lambda) = -1/2
    assert fp.spectral_radius == pytest.approx(math.exp(-math.pi), rel=1e-5)
    exact = fixed_point_newton_m(pmap, [0.0, 0.0])
    assert exact.newton_steps == 0 and exact.residual == 0.0


def test_attractor_singleton(duffing):
    pmap = build_map(duffing.problem, duffing.problem.omega0 / 512)
    est = attractor_sample(pmap, burn_in=80, keep=5, grid=5)
    assert est.diameter < 1e-6
    assert est.invariance_defect < 1e-6
    assert np.isfinite([est.M_est, est.N_est]).all()


def test_attractor_undriven_is_equilibrium():
    pmap = build_map(undriven_problem("-y^3 - y", m=2.0), TWO_PI / 512)
    est = attractor_sample(pmap, burn_in=60, keep=3, grid=3)
    assert np.max(np.abs(est.cloud)) < 1e-6


def test_attractor_needs_mass(lin_map):
    with pytest.raises(ValueError):
        attractor_sample(lin_map)


def test_convergence_metric_linear(linear):
    prob = linear[0]
    y = propagate(prob, OscillatorState(0.0, 0.0), 25.0, 1e-3)
    yp = propagate(prob, OscillatorState(0.0, 0.4), 25.0, 1e-3)
    assert convergence_metric(yp, yp, 10.0, TWO_PI) == 0.0
    m10 = convergence_metric(y, yp, 10.0, TWO_PI)
    assert m10 < 1e-2
    assert m10 == pytest.approx(0.4 * math.exp(-5), rel=1e-3)
    m_next = convergence_metric(y, yp, 10.0 + TWO_PI, TWO_PI)
    assert m_next / m10 == pytest.approx(DECAY, rel=1e-3)
    with pytest.raises(ValueError):
        convergence_metric(y, yp, 20.0, 10.0)


def test_periodic_solution_oracle(linear):
    prob = linear[0]
    tr = propagate(prob, OscillatorState(0.0, 0.4), 3 * TWO_PI)
    t = np.linspace(0, 3 * TWO_PI, 301)
    assert np.max(np.abs(tr.y_at(t) - linear_periodic(t))) <= 1e-12
