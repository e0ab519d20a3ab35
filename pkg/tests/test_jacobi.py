import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from liesub.jacobi import (
    decompose,
    evaluate,
    jacobi_from_initial,
    jacobi_ode_oracle,
    jacobi_ode_trajectory,
)
from liesub.liegroup import AlgebraElement, inner, parallel_transport, product, special_unitary, transport_operator


def _root_oracle(a):
    """Eigenvalues of (ad_X)^2 for X = i diag(a)/|a| from the roots a_j - a_k."""
    a = np.asarray(a, float)
    n2 = float(a @ a)
    out = [0.0] * (len(a) - 1)
    for j in range(len(a)):
        for k in range(j + 1, len(a)):
            out += [-((a[j] - a[k]) ** 2) / n2] * 2
    return np.sort(out)


@pytest.mark.parametrize("a", [(1, -1, 0), (1, 1, -2), (2, -0.5, -1.5), (3, -1, -2)])
def test_decomposition_matches_roots(su3, a):
    X = su3.from_matrix(1j * np.diag(a)).normalized()
    dec = decompose(X)
    mult = [V.shape[1] for V in dec.eigenspaces]
    got = np.sort(np.repeat(dec.eigenvalues, mult))
    assert np.allclose(got, _root_oracle(a), atol=1e-12)
    assert np.allclose(dec.reconstruct(), np.linalg.matrix_power(su3.ad_matrix(X.coords), 2), atol=1e-12)
    assert dec.eigenvalues[0] == 0.0 and np.all(np.diff(dec.eigenvalues) < 0)


def test_su2_single_curvature(su2, rng):
    X = su2.random_element(rng, unit=True)
    dec = decompose(X)
    assert len(dec.eigenvalues) == 2
    assert [V.shape[1] for V in dec.eigenspaces] == [1, 2]
    # (ad_X)^2 = -2 on X-perp for unit X in su(2); curvature 1/2
    assert dec.curvatures[1] == pytest.approx(0.5, abs=1e-13)
    assert dec.is_regular


def test_singular_direction_in_su3(su3):
    X = su3.from_matrix(1j * np.diag([1, 1, -2])).normalized()
    dec = decompose(X)
    assert dec.eigenspaces[0].shape[1] == 4  # centralizer u(2)
    assert not dec.is_regular


def test_unit_direction_required(su2):
    with pytest.raises(ValueError):
        decompose(su2.basis_element(0) * 3)


def _random_instance(G, rng):
    X = G.random_element(rng, unit=True)
    return X, G.random_element(rng), G.random_element(rng)


@pytest.mark.parametrize("G", [special_unitary(2), special_unitary(3),
                               product(special_unitary(2), special_unitary(2))], ids=lambda g: g.name)
def test_closed_form_matches_ode_oracle(G, rng):
    for _ in range(3):
        X, J0, J0p = _random_instance(G, rng)
        f = jacobi_from_initial(X, J0, J0p)
        ts, traj = jacobi_ode_trajectory(X, J0, J0p, 10.0, 4000)
        assert np.abs(f.evaluate_many(ts) - traj).max() < 1e-9
        assert np.allclose(f.value_at_zero(), J0.coords, atol=1e-14)
        assert np.allclose(f.derivative_at_zero(), J0p.coords, atol=1e-12)


def test_rk4_convergence_order(su3, rng):
    X, J0, J0p = _random_instance(su3, rng)
    exact = evaluate(jacobi_from_initial(X, J0, J0p), 20.0).coords
    e1 = np.linalg.norm(jacobi_ode_oracle(X, J0, J0p, 20.0, 400).coords - exact)
    e2 = np.linalg.norm(jacobi_ode_oracle(X, J0, J0p, 20.0, 800).coords - exact)
    assert 12 <= e1 / e2 <= 20


def test_ode_oracle_rejects_coarse_grid(su2, rng):
    X, J0, J0p = _random_instance(su2, rng)
    with pytest.raises(ValueError):
        jacobi_ode_oracle(X, J0, J0p, 1.0, 50)


def test_oscillation_frequency_from_ode_zero_crossing(su2):
    # J0 in V_1, J0' = 0: <J(t), P_t J0> = cos(sqrt(k) t)|J0|^2, first zero at pi / (2 sqrt(1/2))
    X, v = su2.basis_element(0), su2.basis_element(1)
    zero = AlgebraElement(su2, np.zeros(3))

    def pairing(t):
        return inner(jacobi_ode_oracle(X, v, zero, t, 2000), parallel_transport(X, t, v))

    t0 = brentq(pairing, 1.5, 3.0, xtol=1e-13)
    assert t0 == pytest.approx(np.pi / np.sqrt(2), abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(0, 30))
def test_linearity_in_initial_data(seed, s, t):
    G = special_unitary(3)
    rng = np.random.default_rng(seed)
    X = G.random_element(rng, unit=True)
    a, ap, b, bp = (G.random_element(rng) for _ in range(4))
    fa, fb = jacobi_from_initial(X, a, ap), jacobi_from_initial(X, b, bp)
    fab = jacobi_from_initial(X, a * s + b, ap * s + bp)
    lhs = evaluate(fab, t).coords
    rhs = s * evaluate(fa, t).coords + evaluate(fb, t).coords
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + abs(s)) * (1 + t))


def test_parallel_iff_zero_derivative_and_commuting(su3, rng):
    X = su3.from_matrix(1j * np.diag([1, -1, 0])).normalized()
    v = su3.from_matrix(1j * np.diag([1, 1, -2])).normalized()  # commutes with X
    f = jacobi_from_initial(X, v, su3.zero())
    ts = np.linspace(0, 30, 61)
    assert np.allclose(f.evaluate_many(ts), transport_operator(X).apply(ts, v.coords), atol=1e-12)
    w = su3.random_element(rng)
    g = jacobi_from_initial(X, w, su3.zero())
    assert np.abs(g.evaluate_many(ts) - transport_operator(X).apply(ts, w.coords)).max() > 1e-2


def test_linear_growth_slope_is_F0(su3, rng):
    X = su3.random_element(rng, unit=True)
    F0 = X * 0.3
    f = jacobi_from_initial(X, su3.zero(), F0)
    ts = np.linspace(100, 200, 11)
    norms = np.linalg.norm(f.evaluate_many(ts), axis=1)
    assert np.polyfit(ts, norms, 1)[0] == pytest.approx(0.3, abs=1e-12)


def test_oracle_step_is_classical_rk4(su3, rng):
    # explicit four-stage RK4 on (j, p) written out independently
    X, J0, J0p = _random_instance(su3, rng)
    ad = su3.ad_matrix(X.coords)

    def rhs(y):
        j, p = y[:8], y[8:]
        return np.concatenate([p - 0.5 * ad @ j, -0.5 * ad @ p + 0.25 * ad @ ad @ j])

    y = np.concatenate([J0.coords, J0p.coords])
    h = 0.01
    for _ in range(100):
        k1 = rhs(y)
        k2 = rhs(y + h / 2 * k1)
        k3 = rhs(y + h / 2 * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert np.allclose(jacobi_ode_oracle(X, J0, J0p, 1.0, 100).coords, y[:8], atol=1e-13)
