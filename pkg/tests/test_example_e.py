import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liesub.example_e import (
    ExampleEConfig,
    flow_closed_form,
    flow_Y,
    group_law_residual,
    holonomy_jacobi_growth,
    holonomy_time,
    lift_consistency,
    lift_geodesic,
    lipschitz_estimate,
    mu,
    mu_bar,
    mu_smoothness_residuals,
)

E = math.e


def test_mu_values():
    assert mu(0.0) == 0.0 and mu(-1.0) == 0.0
    assert mu(1.0) == pytest.approx(1 / E, rel=1e-15)
    assert mu_bar(-1.0) == pytest.approx(-1 / E, rel=1e-15)
    s = np.linspace(-3, 3, 61)
    assert np.all(mu_bar(-s) == -mu_bar(s))
    assert max(mu_smoothness_residuals()) < 1e-6


@pytest.mark.parametrize("phi,t,expected", [
    (0.0, 7.0, 7 / E),
    (np.pi / 2, 7.0, 0.0),
    (np.pi, 7.0, -7 / E),
    (np.pi / 3, 2.0, 2 * math.exp(-2)),
])
def test_holonomy_times(phi, t, expected):
    assert holonomy_time(phi, t) == pytest.approx(expected, abs=1e-15)


def test_distribution_rate_agrees_at_axis_angles():
    cfg = ExampleEConfig()
    for phi in (0.0, np.pi / 2, np.pi):
        assert cfg.distribution_rate(phi) == pytest.approx(cfg.rate(phi), abs=1e-16)
    # elsewhere the two readings differ
    assert abs(cfg.distribution_rate(np.pi / 3) - cfg.rate(np.pi / 3)) > 1e-2


def test_flow_from_quarter_turn():
    f = flow_Y(np.pi / 2, 1.0)
    assert f.theta_T == pytest.approx(2 * math.atan(E), abs=1e-10)
    assert f.theta_T == pytest.approx(2.43657, abs=1e-5)
    assert f.closed_form_error < 1e-10
    assert f.derivative == pytest.approx(f.closed_derivative, rel=1e-9)


def test_fixed_points():
    assert flow_Y(0.0, 3.0).theta_T == 0.0
    assert flow_Y(0.0, 3.0).derivative == pytest.approx(math.exp(3.0), rel=1e-14)
    assert flow_Y(np.pi, 3.0).derivative == pytest.approx(math.exp(-3.0), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(-6, 6), st.floats(-8, 8))
def test_ode_flow_matches_closed_form(theta0, T):
    f = flow_Y(theta0, T)
    assert f.closed_form_error < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-4, 4), st.floats(-4, 4))
def test_group_law(theta, T1, T2):
    assert group_law_residual(np.array([theta]), T1, T2) < 1e-10


def test_growth_along_phi_zero():
    r = holonomy_jacobi_growth(None, 0.0, 50.0, 501)
    assert r.passed
    assert r.measured["fitted_exponent"] == pytest.approx(1 / E, rel=1e-6)
    ts, norms = r.series["growth"][:, 0], r.series["growth"][:, 2]
    assert np.abs(norms / np.exp(ts / E) - 1).max() < 0.01
    at20 = norms[np.argmin(np.abs(ts - 20))]
    assert at20 == pytest.approx(math.exp(20 / E), rel=1e-6)
    assert at20 == pytest.approx(1568.6, rel=0.01)


def test_no_growth_orthogonal_to_X():
    r = holonomy_jacobi_growth(None, np.pi / 2, 50.0, 101)
    assert r.passed and r.status == "no-growth"
    assert np.all(r.series["growth"][:, 2] == 1.0)


def test_lift_geodesic_columns():
    L = lift_geodesic(0.3, 10.0, 11, theta0=0.5)
    assert L.shape == (11, 5)
    assert np.all((L[:, 1] >= 0) & (L[:, 1] < 2 * np.pi))
    th_closed = [flow_closed_form(0.5, holonomy_time(0.3, t))[0] for t in L[:, 0]]
    assert np.allclose(L[:, 3], th_closed, atol=1e-9)


def test_lift_consistency():
    for phi in (0.0, 0.4, 2.0):
        assert lift_consistency(phi) < 1e-8


def test_lipschitz_constants_grow():
    for T in (1.0, 5.0):
        L = lipschitz_estimate(None, T)
        assert L >= 0.99 * math.exp(T)
        assert L <= math.exp(T) * (1 + 1e-9)
    with pytest.raises(ValueError):
        lipschitz_estimate(None, 1.0, samples=5)
