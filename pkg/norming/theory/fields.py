"""
Built-in smooth fields for jet models, keyed by name so models stay serializable.

    taylor        f is the Taylor polynomial itself
    polynomial    f is an arbitrary polynomial; Taylor part and remainder derived
    sine_product  f = base + eps * sin(omega x) sin(omega y)
"""
from __future__ import annotations

import math
from typing import Callable, Dict, Literal, Optional, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, Field

from norming.libs.errors import PreconditionError
from norming.libs.poly import (
    MultiPoly,
    coefficient_derivative_bound,
    evaluate_many,
    gradient,
    taylor_truncate,
)


class ScalarField(Protocol):
    """Planar scalar field evaluated on batches of points"""

    def value(self, points: np.ndarray) -> np.ndarray:
        ...

    def gradient(self, points: np.ndarray) -> np.ndarray:
        ...


class PolynomialField:
    def __init__(self, p: MultiPoly):
        self.p = p
        self.grads = gradient(p)

    def value(self, points: np.ndarray) -> np.ndarray:
        return evaluate_many(self.p, points)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return np.column_stack([evaluate_many(g, points) for g in self.grads])


class SineProductField(PolynomialField):
    def __init__(self, base: MultiPoly, eps: float, omega: float):
        super().__init__(base)
        self.eps = eps
        self.omega = omega

    def value(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        wx, wy = self.omega * points[:, 0], self.omega * points[:, 1]
        return super().value(points) + self.eps * np.sin(wx) * np.sin(wy)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        wx, wy = self.omega * points[:, 0], self.omega * points[:, 1]
        extra = self.eps * self.omega * np.column_stack([np.cos(wx) * np.sin(wy), np.sin(wx) * np.cos(wy)])
        return super().gradient(points) + extra


class FieldSpec(BaseModel):
    name: Literal["taylor", "polynomial", "sine_product"] = "taylor"
    # the full polynomial for "polynomial", the base polynomial for "sine_product"
    polynomial: Optional[MultiPoly] = None
    eps: float = 0.0
    omega: float = Field(default=1.0, gt=0)


def _required_polynomial(spec: FieldSpec) -> MultiPoly:
    if spec.polynomial is None:
        raise PreconditionError(f"field '{spec.name}' needs a polynomial")
    if spec.polynomial.n != 2:
        raise PreconditionError(f"fields are planar, got a polynomial in {spec.polynomial.n} variables")
    return spec.polynomial


def _polynomial_jet(p: MultiPoly, d: int) -> Tuple[MultiPoly, float]:
    taylor = taylor_truncate(p, d) if p.d > d else p.lift(d)
    remainder = coefficient_derivative_bound(p, d + 1) if p.d > d else 0.0
    return taylor, remainder


def _sine_series(eps: float, omega: float, d: int) -> MultiPoly:
    """Degree-d truncation of eps sin(omega x) sin(omega y)"""

    def coefficient(k: int) -> float:
        return (-1) ** ((k - 1) // 2) * omega**k / math.factorial(k)

    terms = {
        (a, b): eps * coefficient(a) * coefficient(b)
        for a in range(1, d + 1, 2)
        for b in range(1, d + 1 - a, 2)
    }
    return MultiPoly.from_terms(2, terms, d=d)


def _build_taylor(spec: FieldSpec, taylor: MultiPoly) -> ScalarField:
    return PolynomialField(taylor)


def _build_polynomial(spec: FieldSpec, taylor: MultiPoly) -> ScalarField:
    return PolynomialField(_required_polynomial(spec))


def _build_sine_product(spec: FieldSpec, taylor: MultiPoly) -> ScalarField:
    return SineProductField(_required_polynomial(spec), spec.eps, spec.omega)


def _jet_taylor(spec: FieldSpec, d: int) -> Tuple[MultiPoly, float]:
    raise PreconditionError("a 'taylor' field is its own Taylor polynomial; give the polynomial explicitly")


def _jet_polynomial(spec: FieldSpec, d: int) -> Tuple[MultiPoly, float]:
    return _polynomial_jet(_required_polynomial(spec), d)


def _jet_sine_product(spec: FieldSpec, d: int) -> Tuple[MultiPoly, float]:
    taylor, remainder = _polynomial_jet(_required_polynomial(spec), d)
    # every ordered (d+1)-fold derivative of sin(wx) sin(wy) is bounded by w^(d+1)
    remainder += abs(spec.eps) * (2.0 * spec.omega) ** (d + 1)
    return taylor + _sine_series(spec.eps, spec.omega, d), remainder


FIELD_REGISTRY: Dict[str, Tuple[Callable[[FieldSpec, MultiPoly], ScalarField], Callable[[FieldSpec, int], Tuple[MultiPoly, float]]]] = {
    "taylor": (_build_taylor, _jet_taylor),
    "polynomial": (_build_polynomial, _jet_polynomial),
    "sine_product": (_build_sine_product, _jet_sine_product),
}


def build_field(spec: FieldSpec, taylor: MultiPoly) -> ScalarField:
    """Evaluator for the field named by `spec`"""
    builder, _ = FIELD_REGISTRY[spec.name]
    return builder(spec, taylor)


def derive_jet(spec: FieldSpec, d: int) -> Tuple[MultiPoly, float]:
    """Degree-d Taylor polynomial at the origin and a certified bound on M_{d+1}"""
    _, jet = FIELD_REGISTRY[spec.name]
    return jet(spec, d)
