import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feascbf.dynamics import AccParams, ControlBounds, acc_bounds, acc_system, resistance_force
from feascbf.sim import integrate_hold
from tests.oracles import rk4_reference


@pytest.mark.parametrize("v, expected", [(0.0, 0.0), (6.0, 39.1), (13.89, 0.1 + 69.45 + 0.25 * 13.89**2)])
def test_resistance_values(params, v, expected):
    assert resistance_force(v, params) == pytest.approx(expected, rel=1e-12)


def test_resistance_at_lead_speed_rounded(params):
    assert resistance_force(13.89, params) == pytest.approx(117.783, abs=5e-4)


def test_drift_and_input_at_x0(params, x0):
    sys = acc_system(params)
    np.testing.assert_allclose(sys.drift(x0), [-39.1 / 1650, 7.89], rtol=1e-12)
    assert sys.drift(x0)[0] == pytest.approx(-0.023697, abs=1e-6)
    np.testing.assert_allclose(sys.input_matrix(x0), [[1 / 1650], [0.0]])
    assert sys.n == 2 and sys.q == 1


def test_no_relative_motion_at_lead_speed(params):
    assert acc_system(params).drift([params.v_p, 42.0])[1] == 0.0


@given(st.floats(0.0, 40.0), st.floats(-50.0, 200.0))
def test_full_brake_decelerates(v, z):
    p = AccParams()
    sys = acc_system(p)
    assert sys.xdot([v, z], [-p.c_d * p.mass * p.grav])[0] < 0


def test_bounds(params):
    b = acc_bounds(params)
    assert b.u_min[0] == pytest.approx(-6474.6)
    assert b.u_max[0] == pytest.approx(6474.6)
    assert -b.u_min[0] / params.mass == pytest.approx(3.924)


def test_asymmetric_bounds():
    b = acc_bounds(AccParams(c_a=0.3, c_d=0.5))
    assert b.u_max[0] < -b.u_min[0]


@pytest.mark.parametrize("kw", [{"mass": 0.0}, {"c_a": 1.2}, {"c_d": -0.1}, {"grav": -9.81}])
def test_params_validated(kw):
    with pytest.raises(ValueError):
        AccParams(**kw)


def test_bounds_validated():
    with pytest.raises(ValueError):
        ControlBounds([1.0], [0.0])
    with pytest.raises(ValueError):
        ControlBounds([0.0, 0.0], [1.0])


@given(st.floats(0.0, 35.0))
def test_resistance_monotone_and_nonnegative(v):
    p = AccParams()
    assert resistance_force(v, p) >= 0
    if v > 0:
        assert resistance_force(v + 1e-3, p) > resistance_force(v, p)


@given(st.floats(0.5, 30.0), st.floats(0.0, 150.0), st.floats(-6474.6, 6474.6))
def test_rk4_matches_reference_and_finite_difference(v, z, u):
    p = AccParams()
    sys = acc_system(p)
    x = np.array([v, z])
    ref = rk4_reference(lambda s: sys.drift(s) + sys.input_matrix(s)[:, 0] * u, x, 0.1, 10)
    np.testing.assert_allclose(integrate_hold(sys, x, [u], 0.1, 10), ref, rtol=0, atol=1e-12)
    # central difference of a single short RK4 step recovers the vector field
    h = 1e-4
    fwd = integrate_hold(sys, x, [u], h, 1)
    bwd = integrate_hold(sys, x, [u], -h, 1)
    np.testing.assert_allclose((fwd - bwd) / (2 * h), sys.xdot(x, [u]), atol=1e-9)


def test_zero_order_hold_under_constant_resistance_free_motion():
    # with f = 0 and g = e1 the held step is exact: v(dt) = v + u dt
    from feascbf.dynamics import AffineSystem

    sys = AffineSystem(2, 1, lambda x: np.array([0.0, -x[0]]), lambda x: np.array([[1.0], [0.0]]))
    out = integrate_hold(sys, [1.0, 0.0], [2.0], 0.5, 4)
    np.testing.assert_allclose(out, [2.0, -(0.5 + 0.25)], atol=1e-14)
