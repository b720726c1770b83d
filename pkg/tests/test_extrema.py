import numpy as np
import pytest

from norming.libs.errors import PreconditionError
from norming.libs.poly import MultiPoly, random_polynomial
from norming.theory.extrema import (
    bezout_extrema_check,
    classify,
    critical_point_report,
    find_critical_points,
    interior_extremum_witness,
    newton_polish,
)
from norming.theory.gallery import ellipse_polynomial, ellipse_rectangle_family


def kinds(points):
    return sorted(cp.kind for cp in points)


@pytest.mark.parametrize(
    "eigenvalues, kind",
    [([-1.0, -2.0], "Max"), ([1.0, 3.0], "Min"), ([1.0, -1.0], "Saddle"), ([1.0, 1e-12], "Degenerate")],
)
def test_classify(eigenvalues, kind):
    """Kinds from Hessian eigenvalue signs"""
    assert classify(np.array(eigenvalues))[0] == kind


def test_newton_polish_converges():
    """Newton lands on the minimum of a shifted paraboloid"""
    p = MultiPoly.from_terms(2, {(2, 0): 1.0, (0, 2): 1.0, (1, 0): -0.2, (0, 1): 0.4})
    X, residual = newton_polish(p, np.array([[0.5, 0.5], [-0.3, 0.8]]))
    assert np.allclose(X, [[0.1, -0.2], [0.1, -0.2]])
    assert np.all(residual <= 1e-12)


def test_product_quadratic(product_quadratic):
    """Q(x)Q(y) with Q(t) = t^2 - 1/16: one maximum at the origin and four saddles"""
    points = find_critical_points(product_quadratic)
    assert kinds(points) == ["Max"] + ["Saddle"] * 4
    top = next(cp for cp in points if cp.kind == "Max")
    assert top.location == pytest.approx([0.0, 0.0], abs=1e-9)
    report = bezout_extrema_check(product_quadratic, points)
    assert (report.critical_points, report.extrema, report.status) == (5, 1, "ok")


def test_product_cubic(product_cubic):
    """Q(t) = t^3 - 0.16 t: 13 critical points, 2 maxima and 2 minima"""
    points = find_critical_points(product_cubic)
    assert len(points) == 13
    assert kinds(points).count("Max") == 2
    assert kinds(points).count("Min") == 2
    assert kinds(points).count("Saddle") == 9
    report = bezout_extrema_check(product_cubic, points)
    assert report.bound == 25
    assert report.status == "ok"


def test_critical_points_are_sorted(product_cubic):
    """Output order is lexicographic in the coordinates"""
    locations = [tuple(cp.location) for cp in find_critical_points(product_cubic)]
    assert locations == sorted(locations)


def test_random_cubics_respect_bezout(rng):
    """Random degree-3 polynomials never show more than (d-1)^2 nondegenerate critical points"""
    for _ in range(200):
        p = random_polynomial(2, 3, rng)
        report = bezout_extrema_check(p, find_critical_points(p, 0.1))
        assert report.status in ("ok", "skipped")
        if report.status == "ok":
            assert report.critical_points <= 4


def test_linear_polynomials_are_rejected():
    """Critical point search needs degree >= 2"""
    with pytest.raises(PreconditionError):
        find_critical_points(MultiPoly.from_terms(2, {(1, 0): 1.0}))


def test_seed_step_range(product_quadratic):
    """Seed steps above 0.2 are too coarse"""
    with pytest.raises(PreconditionError):
        find_critical_points(product_quadratic, 0.5)


def test_report_document(product_quadratic):
    """The report carries the seed step and every point"""
    report = critical_point_report(product_quadratic, 0.1)
    assert report.seed_grid_step == 0.1
    assert len(report.points) == 5


def test_interior_extremum_not_triggered():
    """A polynomial vanishing on the ellipse stays above kappa on the rectangle"""
    h = 0.2
    P = ellipse_polynomial(h).scale(1.0 / (1.0 - h * h / 4.0))
    report = interior_extremum_witness(P, ellipse_rectangle_family(h), 2)
    assert report.required_domains == 2
    assert not report.hypothesis_triggered
    assert report.mechanism_confirmed is None
    assert report.set_max > report.kappa
    assert "hypothesis not triggered" in report.notes


def test_interior_extremum_degree_check():
    """The polynomial degree may not exceed d"""
    P = ellipse_polynomial(0.2)
    with pytest.raises(PreconditionError):
        interior_extremum_witness(P, ellipse_rectangle_family(0.2), 1)


def test_negation_swaps_maxima_and_minima(rng):
    """-P has the same critical points as P with Max and Min exchanged"""
    swap = {"Max": "Min", "Min": "Max", "Saddle": "Saddle", "Degenerate": "Degenerate"}
    for _ in range(20):
        p = random_polynomial(2, 4, rng)
        points, negated = find_critical_points(p, 0.1), find_critical_points(-p, 0.1)
        assert len(negated) == len(points)
        for cp, neg in zip(points, negated):
            assert neg.location == pytest.approx(cp.location, abs=1e-9)
            assert neg.kind == swap[cp.kind]
            assert neg.value == pytest.approx(-cp.value, abs=1e-12)


@pytest.mark.parametrize("fixture", ["product_quadratic", "product_cubic"])
def test_finer_seeds_find_the_same_points(fixture, request):
    """Halving the seed step neither loses nor invents critical points"""
    p = request.getfixturevalue(fixture)
    coarse, fine = find_critical_points(p, 0.05), find_critical_points(p, 0.025)
    assert kinds(fine) == kinds(coarse)
    for a, b in zip(coarse, fine):
        assert b.location == pytest.approx(a.location, abs=1e-9)
