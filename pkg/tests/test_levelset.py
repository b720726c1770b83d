import math

import numpy as np
import pytest

from norming.libs.errors import FlowExitError, PreconditionError
from norming.libs.poly import MultiPoly, coefficient_derivative_bound, evaluate_many, taylor_truncate
from norming.theory.fields import FieldSpec, PolynomialField, derive_jet
from norming.theory.gallery import ellipse_polynomial
from norming.theory.levelset import (
    JetModel,
    estimate_gamma,
    extract_zero_set,
    flow_map,
    isotopy_check,
    thresholds,
    zero_on_trajectory,
)

R2 = MultiPoly.from_terms(2, {(2, 0): 1.0, (0, 2): 1.0})
NESTED_OVALS = MultiPoly.from_terms(
    2, {(4, 0): 1.0, (2, 2): 2.0, (0, 4): 1.0, (2, 0): -0.2, (0, 2): -0.2, (0, 0): 0.0064}
)


def exact_model(p: MultiPoly) -> JetModel:
    return JetModel(d=p.d, taylor=p, remainder_bound=0.0)


def test_circle_zero_set():
    """One closed component whose polished vertices sit on the circle"""
    curve = extract_zero_set(PolynomialField(R2.shift(-0.25)), 0.02)
    assert len(curve.components) == 1
    component = curve.components[0]
    assert component.closed
    assert np.allclose(np.linalg.norm(component.array, axis=1), 0.5, atol=1e-9)
    assert component.spacing().max() < 0.03


def test_nested_ovals_zero_set():
    """(r^2 - 0.04)(r^2 - 0.16) has two closed components"""
    curve = extract_zero_set(PolynomialField(NESTED_OVALS), 0.01)
    assert len(curve.components) == 2
    assert curve.closed_components == [0, 1]
    radii = sorted(float(np.linalg.norm(c.array, axis=1).mean()) for c in curve.components)
    assert radii == pytest.approx([0.2, 0.4], abs=1e-6)


def test_open_zero_set():
    """A line through the disc gives one open polyline"""
    line = MultiPoly.from_terms(2, {(1, 0): 1.0, (0, 0): -0.1})
    curve = extract_zero_set(PolynomialField(line), 0.02)
    assert len(curve.components) == 1
    assert not curve.components[0].closed


def test_cell_size_range():
    """Cells above 0.05 are too coarse"""
    with pytest.raises(PreconditionError):
        extract_zero_set(PolynomialField(R2), 0.1)


@pytest.mark.parametrize("t", [0.01, -0.01])
def test_flow_map_radial_closed_form(t):
    """For f = x^2 + y^2 the flow gives r(t) = sqrt(0.16 + t)"""
    end = flow_map(exact_model(R2), [0.4, 0.0], t)
    assert np.linalg.norm(end) == pytest.approx(math.sqrt(0.16 + t), abs=1e-7)
    assert end[1] == pytest.approx(0.0, abs=1e-12)


def test_flow_map_exit():
    """Flows that lose the gradient floor raise"""
    with pytest.raises(FlowExitError):
        flow_map(exact_model(R2), [0.4, 0.0], -0.1, floor=0.7)


def test_thresholds_formula():
    """C3 = C2 + C2/(d+1)! + 1/(d-1)! with C2 = n^2 d^2 (d-1)^2"""
    thr = thresholds(exact_model(R2), 0.5)
    assert thr.markov_c2 == 16.0
    assert thr.C3 == pytest.approx(16.0 + 16.0 / 6.0 + 1.0)
    assert thr.delta == pytest.approx(0.5 / (3.0 * thr.C3))
    assert thr.eta == pytest.approx(thr.delta * 0.25)
    assert thr.T == pytest.approx(2.0 * 0.25 / (4.0 * thr.C3))
    with pytest.raises(PreconditionError):
        thresholds(exact_model(R2), 1.5)


def test_gamma_estimate_is_below_true_minimum(ellipse):
    """|grad| on x^2 + 2y^2 = 0.09 is at least 0.6; the estimate stays below it"""
    model = exact_model(ellipse)
    gamma = estimate_gamma(model, extract_zero_set(model.evaluator, 0.01))
    assert 0.5 < gamma <= 0.6


def test_zero_on_trajectory(ellipse):
    """A zero-set point of an exact model is its own image"""
    model = exact_model(ellipse)
    record = zero_on_trajectory(model, [0.3, 0.0], thresholds(model, 0.5))
    assert record.status == "ok"
    assert record.t_zero == pytest.approx(0.0, abs=1e-9)


def test_exact_model_verified(ellipse):
    """f = P: every trajectory vanishes at t = 0 and components pair up"""
    verdict = isotopy_check(exact_model(ellipse), 0.01)
    assert verdict.status == "Verified"
    assert verdict.pairing == [(0, 0)]
    assert verdict.t_max_abs <= 1e-8
    assert verdict.continuity_ok


def test_perturbed_ellipse_verified(ellipse):
    """A small sine perturbation within the threshold keeps the zero set isotopic"""
    T = isotopy_check(exact_model(ellipse), 0.01).constants.T
    omega = 1.0
    eps = 0.25 * T / (2.0 * omega) ** 3
    model = JetModel.from_field(FieldSpec(name="sine_product", polynomial=ellipse, eps=eps, omega=omega), 2)
    assert model.remainder_bound == pytest.approx(0.25 * T)

    verdict = isotopy_check(model, 0.01)
    assert verdict.status == "Verified"
    assert verdict.pairing == [(0, 0)]
    assert all(0.5 <= r.dpdt_min and r.dpdt_max <= 1.5 for r in verdict.diagnostics)
    assert verdict.f_residual_max <= 1e-6


def test_nested_ovals_never_verified():
    """Two nested ovals cannot be isotopic to a conic; the checker does not claim they are"""
    model = JetModel.from_field(FieldSpec(name="polynomial", polynomial=NESTED_OVALS), 2)
    assert model.remainder_bound == coefficient_derivative_bound(NESTED_OVALS, 3)
    verdict = isotopy_check(model, 0.01)
    assert verdict.status != "Verified"
    assert verdict.components_f == 2


def test_inconsistent_model_rejected(rng):
    """Claiming a zero remainder for a quartic field is caught by the spot check"""
    model = JetModel(
        d=2,
        taylor=taylor_truncate(NESTED_OVALS, 2),
        remainder_bound=0.0,
        field=FieldSpec(name="polynomial", polynomial=NESTED_OVALS),
    )
    with pytest.raises(PreconditionError):
        model.validate_remainder(rng)


def test_derive_jet_polynomial():
    """A polynomial field of degree <= d is its own jet"""
    taylor, remainder = derive_jet(FieldSpec(name="polynomial", polynomial=R2), 3)
    assert taylor.d == 3
    assert taylor.terms() == R2.terms()
    assert remainder == 0.0


THIN_ELLIPSE = ellipse_polynomial(0.2)
THIN_PERTURBATION = MultiPoly.from_terms(2, {(3, 3): 1.0, (4, 2): 0.3})


def test_thin_ellipse_regularity():
    """0.04 x^2 + y^2 - 0.01: one oval with min |grad| = 0.04 at the ends of the long axis"""
    model = exact_model(THIN_ELLIPSE)
    curve = extract_zero_set(model.evaluator, 0.01)
    assert len(curve.components) == 1
    assert 0.02 <= estimate_gamma(model, curve) <= 0.04


def test_thin_ellipse_flow_residual(rng):
    """f(Psi(y, t)) = f(y) + t along random flow lines started on the zero set"""
    model = exact_model(THIN_ELLIPSE)
    curve = extract_zero_set(model.evaluator, 0.01)
    eta = thresholds(model, estimate_gamma(model, curve)).eta
    vertices = curve.vertices[rng.choice(len(curve.vertices), 100)]
    for y, t in zip(vertices, rng.uniform(-eta, eta, 100)):
        end = flow_map(model, y, float(t))
        residual = evaluate_many(THIN_ELLIPSE, end)[0] - evaluate_many(THIN_ELLIPSE, y)[0] - t
        assert abs(residual) <= 1e-6


def test_thin_ellipse_verified():
    verdict = isotopy_check(exact_model(THIN_ELLIPSE), 0.01)
    assert verdict.status == "Verified"
    assert verdict.pairing == [(0, 0)]
    assert 0.02 <= verdict.gamma <= 0.04


def test_thin_ellipse_perturbed_within_threshold():
    """A sextic perturbation at half the threshold: verified, with every zero found within eta/2"""
    T = isotopy_check(exact_model(THIN_ELLIPSE), 0.01).constants.T
    eps = 0.5 * T / coefficient_derivative_bound(THIN_PERTURBATION, 3)
    full = THIN_ELLIPSE + THIN_PERTURBATION.scale(eps)
    model = JetModel.from_field(FieldSpec(name="polynomial", polynomial=full), 2)
    assert model.remainder_bound == pytest.approx(0.5 * T)

    verdict = isotopy_check(model, 0.01)
    assert verdict.status == "Verified"
    assert verdict.pairing == [(0, 0)]
    assert max(abs(r.t_zero) for r in verdict.diagnostics) <= verdict.constants.eta / 2.0


@pytest.mark.parametrize("p", [THIN_ELLIPSE, MultiPoly.from_terms(2, {(2, 0): 1.0, (0, 2): 2.0, (0, 0): -0.09})])
def test_verdict_survives_mesh_refinement(p):
    """Halving the cell size never turns a verified pair into a failure"""
    coarse = isotopy_check(exact_model(p), 0.01)
    fine = isotopy_check(exact_model(p), 0.005)
    assert coarse.status == "Verified"
    assert fine.status != "Failed"
