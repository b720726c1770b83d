import math

import numpy as np
import pytest

from norming.libs.errors import PreconditionError
from norming.libs.poly import evaluate_many
from norming.theory.gallery import (
    gallery_ellipse_rectangle,
    gallery_product_poly,
    gallery_sublevel,
    gallery_triangle,
)


@pytest.mark.parametrize("h", [0.1, 0.25, 0.5, 1.0])
def test_triangle(h):
    """R_1(Z_h) >= 1 + 2/h, above the published 2/h, which is flagged"""
    case = gallery_triangle(h)
    lower = case.row("R_1 lower")
    assert lower.measured >= 1.0 + 2.0 / h - 1e-9
    assert lower.status == "pass"
    assert case.row("R_1 >= published").status == "pass"
    assert case.row("R_1 published").status == "flag"
    assert case.row("witness 1 - 2y/h ratio").measured == pytest.approx(1.0 + 2.0 / h)
    assert all(row.provenance in ("published", "derived", "measured") for row in case.rows)


def test_triangle_precondition():
    """h must lie in (0, 1]"""
    with pytest.raises(PreconditionError):
        gallery_triangle(0.0)


def test_triangle_rerun_is_byte_identical():
    """Same inputs give the same JSON"""
    assert gallery_triangle(0.5).to_json() == gallery_triangle(0.5).to_json()


@pytest.mark.parametrize("h, witness", [(0.1, 99.75), (0.2, 24.75)])
def test_ellipse_rectangle(h, witness):
    """Witness lower bound from P_h, dominated by the topological bound"""
    case = gallery_ellipse_rectangle(h)
    row = case.row("R_2 witness lower")
    assert row.expected == pytest.approx(witness, abs=1e-9)
    assert row.measured >= witness
    assert case.row("topological bound R_2").status == "pass"
    assert case.row("topological bound R_2").measured >= row.measured
    assert case.row("ellipse area").measured == pytest.approx(math.pi * h / 4.0)


def test_rectangle_area_discrepancy():
    """The rectangle has area h/24; the published h/48 is flagged, not silently corrected"""
    case = gallery_ellipse_rectangle(0.2)
    assert case.row("rectangle area").measured == pytest.approx(0.2 / 24.0)
    assert case.row("rectangle area").status == "pass"
    assert case.row("rectangle area published").status == "flag"


def test_product_cubic_components(rng):
    """Roots {-0.4, 0, 0.4}: two compact positive components and a non-norming union"""
    case = gallery_product_poly(3, [-0.4, 0.0, 0.4], rng=rng)
    assert case.row("compact positive components").measured == 2
    assert case.row("half adjoint cube count").status == "pass"
    assert case.row("flood fill components").status == "pass"
    assert case.row("witness ratio M_0(Pbar)/max_Z |Pbar|").measured >= 1e6
    assert case.row("norming at degree 6").status == "pass"
    assert case.row("topological bound violations").status == "pass"
    assert case.family.size == 2
    assert not case.family.certified


def test_product_quadratic_components(rng):
    """Roots {-1/4, 1/4}: the central cell gives one component"""
    case = gallery_product_poly(2, [-0.25, 0.25], rng=rng)
    assert case.row("compact positive components").measured == 1
    assert case.row("compact positive components").status == "pass"


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(d=3, roots=[-0.4, 0.0, 0.4], zeta=0.0),
        dict(d=2, roots=[0.2, 0.2]),
        dict(d=2, roots=[-0.8, 0.2]),
        dict(d=3, roots=[-0.4, 0.0]),
    ],
    ids=["zeta-zero", "repeated-root", "root-outside", "root-count"],
)
def test_product_preconditions(kwargs):
    """Invalid constructions are rejected"""
    with pytest.raises(PreconditionError):
        gallery_product_poly(**kwargs)


def test_sublevel():
    """The eta-sublevel set has Remez constant >= 1/eta while interior rigidity stays fixed"""
    case = gallery_sublevel(0.01, 2)
    assert case.row("R_d witness lower").measured >= 100.0
    assert case.row("rigidity bound via interior").measured == pytest.approx(0.75)
    assert all(row.status != "flag" for row in case.rows)
    assert np.all(np.abs(np.asarray(case.points)[:, 0]) < 1.0)


def test_product_scale_shrinks_first_factor_roots(rng):
    """scale s moves the x-roots to s * root and leaves the y-roots alone"""
    case = gallery_product_poly(2, [-0.25, 0.25], scale=0.5, rng=rng)
    P = case.witness.shift(case.params["zeta"])
    ys = np.linspace(-0.6, 0.6, 13)
    on_x_roots = np.array([[x, y] for x in (-0.125, 0.125) for y in ys])
    on_y_roots = np.array([[x, y] for x in ys for y in (-0.25, 0.25)])
    assert np.max(np.abs(evaluate_many(P, on_x_roots))) <= 1e-12
    assert np.max(np.abs(evaluate_many(P, on_y_roots))) <= 1e-12
    assert abs(evaluate_many(P, [[0.25, 0.0]])[0]) > 1e-3
