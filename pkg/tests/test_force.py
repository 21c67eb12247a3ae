import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambstring import classify, make_force, potential
from lambstring.force import coercivity


@pytest.mark.parametrize("src, y, V", [
    ("-y", 2.0, 2.0),
    ("-y^3-y", 1.0, 0.75),
    ("-y^3-y", 0.0, 0.0),
    ("y - y^3", 0.0, 0.0),
])
def test_potential_examples(src, y, V):
    assert potential(make_force(src), y) == pytest.approx(V, abs=1e-12)


def test_potential_extends_past_working_interval():
    F = make_force("-y", -1.0, 1.0)
    assert F.potential(5.0) == pytest.approx(12.5, rel=1e-12)
    assert F.potential(-7.0) == pytest.approx(24.5, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(y=st.floats(-9.5, 9.5))
def test_minus_potential_slope_is_force(y):
    F = make_force("-y^3 - y + 0.5*sin(y)")
    h = 1e-4
    slope = -(F.potential(y + h) - F.potential(y - h)) / (2 * h)
    assert slope == pytest.approx(F(y), rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("src, ok", [
    ("-y", True), ("-y^3-y", True), ("y - y^3", True), ("-2*atan(y)", False), ("y", False),
    ("-tanh(y)", False),
])
def test_coercivity(src, ok):
    assert coercivity(make_force(src))[0] is ok


def test_classify_linear_is_f1_and_f3():
    rep = classify(make_force("-y"), 2.0, 2.0, 1.0, 0.5, c=0.5)
    assert rep.F_coercive and rep.F1 and rep.F3 and rep.Opial
    assert rep.witnesses["F1_r"] == 1.0


def test_classify_duffing_f3():
    rep = classify(make_force("-y^3-y"), 2.0, 1.0, 1.0, 1.0, c=0.5)
    assert rep.F3 and not rep.F1
    # |F''|/|F'| = 6|y|/(3y^2 + 1) peaks at sqrt(3) at y = 1/sqrt(3)
    assert rep.witnesses["F3_ratio_max"] == pytest.approx(math.sqrt(3), rel=1e-4)
    assert rep.witnesses["F3_k_threshold"] == pytest.approx(0.5 * math.sqrt(3), rel=1e-4)
    weak = classify(make_force("-y^3-y"), 2.0, 1.0, 0.5, 1.0, c=0.5)
    assert not weak.F3


def test_classify_rejects_wrong_signs():
    rep = classify(make_force("y"), 1.0, 1.0, 1.0, 0.0)
    assert not rep.F_coercive and not rep.F3 and not rep.Opial
    assert not classify(make_force("-2*atan(y)"), 1.0, 1.0, 1.0, 0.1).F_coercive


def test_classify_opial_threshold():
    F = make_force("-2*atan(y)")
    assert classify(F, 1.0, 1.0, 1.0, 3.0).Opial is True
    assert classify(F, 1.0, 1.0, 1.0, 3.2).Opial is False


def test_classify_f2_secant_window():
    # F = -r y with c r in [k^2/2 - 1, 1] and 1 < k^2/2 <= 2
    k = math.sqrt(3.0)
    assert classify(make_force("-y"), 1.0, 1.0, k, 0.0, c=0.8).F2
    assert not classify(make_force("-y"), 1.0, 1.0, k, 0.0, c=0.2).F2
    assert not classify(make_force("-y"), 1.0, 1.0, 1.0, 0.0, c=0.8).F2


def test_classify_requires_positive_box():
    with pytest.raises(ValueError):
        classify(make_force("-y"), 0.0, 1.0, 1.0, 0.0)


def test_report_serializes():
    d = classify(make_force("-y^3-y"), 1.0, 1.0, 2.0, 0.5, c=0.5).to_dict()
    assert set(d) >= {"F_coercive", "F1", "F2", "F3", "Opial", "witnesses"}
    assert np.isfinite(d["witnesses"]["F3_k_threshold"])
