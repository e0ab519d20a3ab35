import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import su2_u
from liesub.liegroup import (
    Ad,
    AlgebraElement,
    GroupElement,
    GroupMismatchError,
    SkewExp,
    bracket,
    covariant_deriv_along_geodesic,
    exp_map,
    geodesic,
    inner,
    log_norm,
    parallel_transport,
    principal_angles,
    product,
    sectional_curvature,
    special_orthogonal,
    special_unitary,
    transport_operator,
)

seeds = st.integers(0, 2**32 - 1)
GROUPS = [special_unitary(2), special_unitary(3), special_orthogonal(3),
          product(special_unitary(2), special_unitary(2)), product(special_unitary(3), special_unitary(2))]


def test_basis_invariants():
    for G in GROUPS:
        G.check()
    assert special_unitary(3).algebra_dim == 8
    assert product(special_unitary(3), special_unitary(3)).algebra_dim == 16


def test_su2_basis_is_u_over_sqrt2(su2):
    for k in (1, 2, 3):
        assert np.allclose(su2.basis[k - 1], su2_u(k) / np.sqrt(2))


def test_su2_brackets_match_matrix_commutators(su2):
    u = {k: su2.from_matrix(su2_u(k)) for k in (1, 2, 3)}
    # oracle: explicit commutators of the hand-written matrices
    for a, b, c in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        comm = su2_u(a) @ su2_u(b) - su2_u(b) @ su2_u(a)
        assert np.allclose(comm, 2 * su2_u(c))
        assert np.allclose(bracket(u[a], u[b]).matrix, comm, atol=1e-14)
    assert inner(u[1], u[1]) == pytest.approx(2.0, abs=1e-14)
    assert inner(u[1], u[2]) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("G", GROUPS, ids=lambda g: g.name)
def test_bracket_matches_matrix_commutator(G, rng):
    for _ in range(5):
        X, Y = G.random_element(rng), G.random_element(rng)
        comm = X.matrix @ Y.matrix - Y.matrix @ X.matrix
        assert np.allclose(bracket(X, Y).matrix, comm, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(GROUPS))
def test_bracket_axioms(seed, G):
    rng = np.random.default_rng(seed)
    X, Y, Z = (G.random_element(rng) for _ in range(3))
    assert np.allclose(bracket(X, Y).coords, -bracket(Y, X).coords, atol=1e-12)
    jac = bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X)) + bracket(Z, bracket(X, Y))
    assert jac.norm() < 1e-11
    # ad-invariance of the metric
    assert abs(inner(bracket(X, Y), Z) + inner(Y, bracket(X, Z))) < 1e-11
    ad = G.ad_matrix(X.coords)
    assert np.allclose(ad, -ad.T, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(GROUPS))
def test_Ad_is_isometric_homomorphism(seed, G):
    rng = np.random.default_rng(seed)
    g = G.random_group_element(rng)
    X, Y = G.random_element(rng), G.random_element(rng)
    assert inner(Ad(g, X), Ad(g, Y)) == pytest.approx(inner(X, Y), abs=1e-10)
    assert np.allclose(Ad(g, bracket(X, Y)).coords, bracket(Ad(g, X), Ad(g, Y)).coords, atol=1e-10)
    assert np.allclose(G.Ad_matrix(g.matrix) @ X.coords, Ad(g, X).coords, atol=1e-12)


def test_exp_of_quarter_turn(su2):
    u2 = su2.from_matrix(su2_u(2))
    g = exp_map(u2 * (np.pi / 2))
    assert np.allclose(g.matrix, su2_u(2), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.0, 50.0), st.sampled_from(GROUPS))
def test_exp_lands_in_group(seed, scale, G):
    X = G.random_element(np.random.default_rng(seed), unit=True) * scale
    g = exp_map(X)
    assert g.unitarity_residual() < 1e-10
    assert g.det_residual() < 1e-10
    assert np.allclose(g.matrix, sla.expm(X.matrix), atol=1e-9 * max(1.0, scale))


def test_geodesic_and_log_norm(su3, rng):
    X = su3.random_element(rng, unit=True)
    g = su3.random_group_element(rng)
    for t in (0.1, 0.7, 1.5):
        # short geodesics through e are minimizing: distance = t |X|
        assert log_norm(exp_map(X * t)) == pytest.approx(t, abs=1e-12)
        assert np.linalg.norm(sla.logm(exp_map(X * t).matrix)) == pytest.approx(t, abs=1e-10)
        assert np.allclose(geodesic(g, X, t).matrix, g.matrix @ sla.expm(t * X.matrix), atol=1e-12)


def test_skewexp_batches_agree(su3, rng):
    X = su3.random_element(rng, unit=True)
    E = SkewExp(X.matrix)
    ts = np.linspace(0, 40, 9)
    M = E.many(ts)
    for t, m in zip(ts, M):
        assert np.allclose(m, sla.expm(t * X.matrix), atol=1e-11)
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert np.allclose(E.apply(ts, v), M @ v, atol=1e-12)
    rows = rng.standard_normal((9, 3))
    assert np.allclose(E.apply_rows(ts, rows), np.einsum("tij,tj->ti", M, rows), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(-30, 30))
def test_parallel_transport_isometry(seed, t):
    G = special_unitary(3)
    rng = np.random.default_rng(seed)
    X = G.random_element(rng, unit=True)
    v, w = G.random_element(rng), G.random_element(rng)
    pv, pw = parallel_transport(X, t, v), parallel_transport(X, t, w)
    assert inner(pv, pw) == pytest.approx(inner(v, w), abs=1e-10)
    # X itself is parallel along its own geodesic
    assert np.allclose(parallel_transport(X, t, X).coords, X.coords, atol=1e-12)


def test_transport_is_parallel_by_finite_differences(su3, rng):
    X = su3.random_element(rng, unit=True)
    v = su3.random_element(rng)
    dt = 1e-4
    ts = np.arange(0, 2.0, dt)
    ys = transport_operator(X).apply(ts, v.coords)
    D = covariant_deriv_along_geodesic(X, ys, dt)
    assert np.abs(D).max() < 1e-6


def test_covariant_derivative_of_left_invariant_field(su3, rng):
    X = su3.random_element(rng, unit=True)
    Y = su3.random_element(rng)
    ys = np.tile(Y.coords, (5, 1))
    D = covariant_deriv_along_geodesic(X, ys, 0.1)
    assert np.allclose(D, 0.5 * bracket(X, Y).coords, atol=1e-14)
    with pytest.raises(ValueError):
        covariant_deriv_along_geodesic(X, ys[:2], 0.1)


def test_sectional_curvature_values(su2, rng):
    e1, e2 = su2.basis_element(0), su2.basis_element(1)
    assert sectional_curvature(e1, e2) == pytest.approx(0.5, abs=1e-14)
    S = special_unitary(2)
    G = product(S, S)
    a, b = G.embed(0, S.basis_element(0)), G.embed(1, S.basis_element(1))
    assert sectional_curvature(a, b) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        sectional_curvature(e1, e1 * 2)
    # nonnegative everywhere
    G3 = special_unitary(3)
    for _ in range(20):
        assert sectional_curvature(G3.random_element(rng), G3.random_element(rng)) >= 0


def test_group_mismatch_raises(su2, su3):
    with pytest.raises(GroupMismatchError):
        bracket(su2.basis_element(0), su3.basis_element(0))
    with pytest.raises(GroupMismatchError):
        Ad(su3.identity(), su2.basis_element(0))
    with pytest.raises(ValueError):
        AlgebraElement(su2, np.zeros(4))
    with pytest.raises(ValueError):
        GroupElement(su2, np.eye(3))
    with pytest.raises(ValueError):
        parallel_transport(su2.basis_element(0) * 2, 1.0, su2.basis_element(1))


def test_product_pair_split_roundtrip(rng):
    S2, S3 = special_unitary(2), special_unitary(3)
    G = product(S3, S2)
    a, b = S3.random_element(rng), S2.random_element(rng)
    x = G.pair(a, b)
    a2, b2 = G.split(x)
    assert np.array_equal(a2.coords, a.coords) and np.array_equal(b2.coords, b.coords)
    M = x.matrix
    assert np.allclose(M[:3, :3], a.matrix) and np.allclose(M[3:, 3:], b.matrix)
    assert np.abs(M[:3, 3:]).max() == 0
    assert bracket(G.embed(0, a), G.embed(1, b)).norm() == 0


def test_principal_angles_small_angle_accuracy():
    A = np.eye(4)[:, :2]
    eps = 1e-12
    B = np.array([[1, 0], [0, np.cos(eps)], [0, np.sin(eps)], [0, 0]])
    ang = principal_angles(A, B)
    assert ang.max() == pytest.approx(eps, rel=1e-6)
    C = np.eye(4)[:, 2:]
    assert np.allclose(principal_angles(A, C), np.pi / 2)
