import numpy as np
import pytest

from liesub.biquotient import preset, random_horizontal_unit, vertical_frame
from liesub.flats import (
    FlatCandidate,
    find_horizontal_flat,
    holonomy_orthogonality,
    search_horizontal_flat,
    verify_part1,
    verify_part2,
)
from liesub.liegroup import AlgebraElement, bracket, inner, sectional_curvature


@pytest.fixture(scope="module")
def diag():
    spec = preset("su2xsu2-diag-circle")
    g = spec.group.identity()
    return spec, g, search_horizontal_flat(spec, g, seed=0, restarts=50)


def test_diagonal_circle_has_a_horizontal_flat(diag):
    spec, g, res = diag
    c = res.candidate
    assert c is not None and res.restarts_used <= 50
    assert c.commutator_norm < 1e-10
    r = c.invariant_residuals()
    assert max(r.values()) < 1e-10
    fr = vertical_frame(spec, g)
    assert fr.vertical_residual(c.X.coords) < 1e-12 and fr.vertical_residual(c.Y.coords) < 1e-12
    assert abs(inner(c.X, c.Y)) < 1e-12
    assert sectional_curvature(c.X, c.Y) < 1e-20


def test_flat_parts(diag):
    spec, _, res = diag
    c = res.candidate
    p1 = verify_part1(spec, c)
    assert p1.passed and abs(p1.measured["K_B"]) < 1e-10
    p2 = verify_part2(spec, c, 5.0, 10)
    assert p2.passed and p2.series["grid_residuals"].shape == (21, 21)
    assert p2.measured["max_vertical_residual"] < 1e-8
    p3 = holonomy_orthogonality(spec, c, T=100.0)
    assert p3.passed and p3.measured["max_inner_JY"] < 1e-8


def test_zero_width_grid_is_the_base_point(diag):
    spec, _, res = diag
    r = verify_part2(spec, res.candidate, 0.0, 3)
    assert r.measured["max_vertical_residual"] < 1e-12


def test_orthogonality_negative_control(diag, rng):
    spec, g, res = diag
    c = res.candidate
    # a horizontal Y that does not commute with X and is hit by J'(0)
    for _ in range(20):
        Y = random_horizontal_unit(spec, g, rng)
        Y = (Y - c.X * inner(Y, c.X)).normalized()
        if bracket(c.X, Y).norm() > 0.1:
            break
    r = holonomy_orthogonality(spec, c, T=100.0, Y=Y)
    assert not r.passed


def test_perturbed_candidate_fails(diag):
    spec, g, res = diag
    c = res.candidate
    Hb = vertical_frame(spec, g).horizontal_basis()
    # tilt Y towards a horizontal direction that does not commute with X
    for col in Hb.T:
        w = AlgebraElement(spec.group, col)
        if bracket(c.X, w).norm() > 0.1:
            break
    Y = (c.Y + w * 1e-3).normalized()
    bad = FlatCandidate(spec, g, c.X, Y, bracket(c.X, Y).norm(), 0, 0)
    assert not verify_part1(spec, bad).passed
    with pytest.raises(ValueError):
        verify_part2(spec, bad)


def test_hopf_none_found_with_certificate():
    spec = preset("hopf")
    res = search_horizontal_flat(spec, spec.group.identity(), seed=0, restarts=5)
    assert res.candidate is None
    # the only horizontal plane is span{u2, u3}/sqrt2 with |[.,.]| = sqrt 2
    assert res.certified_lower_bound == pytest.approx(np.sqrt(2), abs=1e-12)
    assert res.best_residual >= res.certified_lower_bound - 1e-12


def test_search_determinism():
    spec = preset("su2xsu2-diag-circle")
    g = spec.group.identity()
    a = find_horizontal_flat(spec, g, seed=3)
    b = find_horizontal_flat(spec, g, seed=3)
    assert np.array_equal(a.X.coords, b.X.coords) and np.array_equal(a.Y.coords, b.Y.coords)
    assert a.restart == b.restart


def test_restart_history_monotone():
    spec = preset("su3-circle-(1,1,-2)")
    res = search_horizontal_flat(spec, spec.group.identity(), seed=0, restarts=3)
    h = np.array(res.best_by_restart)
    assert np.all(np.diff(h) <= 0)
    assert res.best_residual == h[-1]


def test_search_argument_validation():
    spec = preset("su2xsu2-diag-circle")
    with pytest.raises(ValueError):
        search_horizontal_flat(spec, spec.group.identity(), restarts=0)
