"""
Dense multivariate polynomials on the unit ball.

Coefficients are stored in graded-lexicographic monomial order: monomials are
sorted by total degree, and within one degree by descending exponent of x_1,
then x_2, and so on (for n=2, d=2: 1, x, y, x^2, xy, y^2).
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import chebyshev
from pydantic import BaseModel, Field, model_validator

from norming.libs import constants
from norming.libs.errors import GridStepError, PreconditionError

MAX_VARIABLES = 6
EVAL_CHUNK = 1 << 15


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def monomial_exponents(n: int, d: int) -> np.ndarray:
    """Exponent table of shape (binom(n+d, n), n) in graded-lex order"""
    rows = [exps for deg in range(d + 1) for exps in _compositions(deg, n)]
    table = np.array(rows, dtype=np.int64).reshape(len(rows), n)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def monomial_index(n: int, d: int) -> Dict[Tuple[int, ...], int]:
    """Maps an exponent tuple to its position in the coefficient vector"""
    return {tuple(int(e) for e in row): i for i, row in enumerate(monomial_exponents(n, d))}


def dimension(n: int, d: int) -> int:
    """Number of monomials of degree <= d in n variables"""
    return math.comb(n + d, n)


class MultiPoly(BaseModel):
    """
    Real polynomial in `n` variables of degree at most `d`.
    """

    n: int = Field(gt=0)
    d: int = Field(ge=0)
    coeffs: List[float]
    order: Literal["grlex"] = "grlex"

    @model_validator(mode="after")
    def _check_shape(self) -> MultiPoly:
        if self.n > MAX_VARIABLES:
            raise ValueError(f"at most {MAX_VARIABLES} variables are supported, got {self.n}")
        if self.d > constants.MAX_DEGREE * MAX_VARIABLES:
            raise ValueError(f"degree {self.d} is out of range")
        expected = dimension(self.n, self.d)
        if len(self.coeffs) != expected:
            raise ValueError(
                f"coefficient vector has length {len(self.coeffs)}, expected binom(n+d, n) = {expected}"
            )
        return self

    @classmethod
    def from_array(cls, n: int, d: int, coeffs: Sequence[float]) -> MultiPoly:
        """Build from any coefficient sequence in graded-lex order"""
        return cls(n=n, d=d, coeffs=[float(c) for c in np.asarray(coeffs, dtype=float)])

    @classmethod
    def zero(cls, n: int, d: int = 0) -> MultiPoly:
        """The zero polynomial"""
        return cls(n=n, d=d, coeffs=[0.0] * dimension(n, d))

    @classmethod
    def constant(cls, n: int, value: float, d: int = 0) -> MultiPoly:
        """A constant polynomial with degree bound `d`"""
        coeffs = [0.0] * dimension(n, d)
        coeffs[0] = float(value)
        return cls(n=n, d=d, coeffs=coeffs)

    @classmethod
    def from_terms(cls, n: int, terms: Dict[Tuple[int, ...], float], d: Optional[int] = None) -> MultiPoly:
        """
        Build from a mapping exponent tuple -> coefficient.
        The degree bound defaults to the largest total degree present.
        """
        degree = max((sum(e) for e in terms), default=0) if d is None else d
        index = monomial_index(n, degree)
        coeffs = np.zeros(dimension(n, degree))
        for exps, value in terms.items():
            if len(exps) != n:
                raise PreconditionError(f"exponent {exps} does not have {n} entries")
            if exps not in index:
                raise PreconditionError(f"monomial {exps} exceeds degree bound {degree}")
            coeffs[index[exps]] += value
        return cls.from_array(n, degree, coeffs)

    @property
    def array(self) -> np.ndarray:
        """Coefficients as a float array"""
        return np.asarray(self.coeffs, dtype=float)

    @property
    def exponents(self) -> np.ndarray:
        """Exponent table matching `coeffs`"""
        return monomial_exponents(self.n, self.d)

    def terms(self) -> Dict[Tuple[int, ...], float]:
        """Non-zero terms as exponent tuple -> coefficient"""
        return {
            tuple(int(e) for e in exps): c
            for exps, c in zip(self.exponents, self.coeffs)
            if c != 0.0
        }

    def lift(self, d: int) -> MultiPoly:
        """Same polynomial with a larger degree bound"""
        if d < self.d:
            raise PreconditionError(f"cannot lift degree {self.d} polynomial to degree bound {d}")
        if d == self.d:
            return self
        return MultiPoly.from_terms(self.n, self.terms(), d=d)

    def __add__(self, other: MultiPoly) -> MultiPoly:
        _check_same_dimension(self, other)
        d = max(self.d, other.d)
        return MultiPoly.from_array(self.n, d, self.lift(d).array + other.lift(d).array)

    def __sub__(self, other: MultiPoly) -> MultiPoly:
        return self + other.scale(-1.0)

    def __neg__(self) -> MultiPoly:
        return self.scale(-1.0)

    def __mul__(self, other: MultiPoly) -> MultiPoly:
        return multiply(self, other)

    def scale(self, factor: float) -> MultiPoly:
        """Multiply every coefficient by `factor`"""
        return MultiPoly.from_array(self.n, self.d, self.array * factor)

    def shift(self, value: float) -> MultiPoly:
        """Add a constant"""
        coeffs = self.array.copy()
        coeffs[0] += value
        return MultiPoly.from_array(self.n, self.d, coeffs)


def _check_same_dimension(p: MultiPoly, q: MultiPoly) -> None:
    if p.n != q.n:
        raise PreconditionError(f"dimension mismatch: {p.n} != {q.n}")


def multiply(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    """Product of two polynomials"""
    _check_same_dimension(p, q)
    terms: Dict[Tuple[int, ...], float] = {}
    for e1, c1 in p.terms().items():
        for e2, c2 in q.terms().items():
            key = tuple(a + b for a, b in zip(e1, e2))
            terms[key] = terms.get(key, 0.0) + c1 * c2
    return MultiPoly.from_terms(p.n, terms, d=p.d + q.d)


def univariate(n: int, axis: int, coeffs: Sequence[float]) -> MultiPoly:
    """Embed sum_k coeffs[k] t^k as a polynomial in x_axis"""
    terms = {}
    for k, c in enumerate(coeffs):
        exps = [0] * n
        exps[axis] = k
        terms[tuple(exps)] = float(c)
    return MultiPoly.from_terms(n, terms, d=len(coeffs) - 1)


def taylor_truncate(p: MultiPoly, d: int) -> MultiPoly:
    """Drop all monomials of total degree above `d`"""
    return MultiPoly.from_terms(p.n, {e: c for e, c in p.terms().items() if sum(e) <= d}, d=d)


def random_polynomial(n: int, d: int, rng: np.random.Generator) -> MultiPoly:
    """Coefficients i.i.d. uniform on [-1, 1]"""
    return MultiPoly.from_array(n, d, rng.uniform(-1.0, 1.0, dimension(n, d)))


def _as_points(points, n: int) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.shape[-1] != n:
        raise PreconditionError(f"dimension mismatch: point has {arr.shape[-1]} coordinates, polynomial has {n}")
    return arr


def monomial_matrix(n: int, d: int, points) -> np.ndarray:
    """Rows are the monomial vectors of the given points"""
    pts = _as_points(points, n)
    exps = monomial_exponents(n, d)
    return np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)


def evaluate(p: MultiPoly, x: Sequence[float]) -> float:
    """Value of `p` at a single point, with compensated summation"""
    pt = _as_points(x, p.n)
    if pt.shape[0] != 1:
        raise PreconditionError("evaluate expects a single point")
    monomials = np.prod(pt[0][None, :] ** p.exponents, axis=1)
    return math.fsum(p.array * monomials)


def evaluate_many(p: MultiPoly, points) -> np.ndarray:
    """Values of `p` at every row of `points`"""
    pts = _as_points(points, p.n)
    coeffs = p.array
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], EVAL_CHUNK):
        chunk = pts[start : start + EVAL_CHUNK]
        out[start : start + EVAL_CHUNK] = monomial_matrix(p.n, p.d, chunk) @ coeffs
    return out


def partial(p: MultiPoly, axis: int) -> MultiPoly:
    """Exact partial derivative with respect to x_axis (degree bound drops by one)"""
    if p.d == 0:
        return MultiPoly.zero(p.n, 0)
    index = monomial_index(p.n, p.d - 1)
    coeffs = np.zeros(dimension(p.n, p.d - 1))
    for exps, c in zip(p.exponents, p.array):
        if exps[axis] == 0 or c == 0.0:
            continue
        lowered = list(int(e) for e in exps)
        lowered[axis] -= 1
        coeffs[index[tuple(lowered)]] += c * exps[axis]
    return MultiPoly.from_array(p.n, p.d - 1, coeffs)


def gradient(p: MultiPoly) -> List[MultiPoly]:
    """The n partial derivatives of `p`"""
    return [partial(p, axis) for axis in range(p.n)]


def hessian(p: MultiPoly) -> List[List[MultiPoly]]:
    """Second partial derivatives as a nested n x n list"""
    return [gradient(g) for g in gradient(p)]


def derivative(p: MultiPoly, alpha: Sequence[int]) -> MultiPoly:
    """Mixed partial derivative for the multi-index `alpha`"""
    out = p
    for axis, count in enumerate(alpha):
        for _ in range(count):
            out = partial(out, axis)
    return out


def _multinomial(alpha: Sequence[int]) -> int:
    k = sum(alpha)
    return math.factorial(k) // math.prod(math.factorial(a) for a in alpha)


def derivative_norm_samples(p: MultiPoly, k: int, points) -> np.ndarray:
    """
    Pointwise order-k derivative norm: sum of |partial derivatives| over all
    ordered k-tuples of axes (each multi-index alpha weighted by k!/alpha!).
    """
    pts = _as_points(points, p.n)
    total = np.zeros(pts.shape[0])
    for alpha in _compositions(k, p.n):
        total += _multinomial(alpha) * np.abs(evaluate_many(derivative(p, alpha), pts))
    return total


def coefficient_derivative_bound(p: MultiPoly, k: int) -> float:
    """Upper bound of M_k(p) on the unit ball from |x_i| <= 1"""
    bound = 0.0
    exps = p.exponents
    coeffs = np.abs(p.array)
    for alpha in _compositions(k, p.n):
        falling = np.ones(len(coeffs))
        for axis, a in enumerate(alpha):
            for j in range(a):
                falling *= np.clip(exps[:, axis] - j, 0, None)
        bound += _multinomial(alpha) * float(falling @ coeffs)
    return bound


def chebyshev_T(d: int, t: float) -> float:
    """Chebyshev polynomial of the first kind T_d(t), any real t"""
    if d < 0:
        raise PreconditionError(f"Chebyshev degree must be non-negative, got {d}")
    if abs(t) <= 1.0:
        return math.cos(d * math.acos(t))
    return float(chebyshev.chebval(t, [0.0] * d + [1.0]))


def markov_derivative_bound(n: int, d: int, k: int) -> float:
    """
    Constant C_k(n, d) with M_k(P) <= C_k(n, d) M_0(P) for every degree-d
    polynomial on the unit ball, by iterating Kellogg's gradient inequality.
    """
    if not 0 <= k <= d:
        raise PreconditionError(f"derivative order must satisfy 0 <= k <= d, got k={k}, d={d}")
    return float(math.prod(n * (d - i) ** 2 for i in range(k)))


def max_admissible_step(n: int, d: int) -> float:
    """Grid steps must be strictly below this for the sup-norm certificate"""
    if d == 0:
        return math.inf
    return 1.0 / (math.sqrt(n) * d * d)


def inflation(n: int, d: int, grid_step: float) -> float:
    """Factor turning a grid maximum into a certified ball maximum"""
    if grid_step <= 0:
        raise PreconditionError(f"grid step must be positive, got {grid_step}")
    limit = max_admissible_step(n, d)
    if grid_step >= limit:
        raise GridStepError(grid_step, limit)
    return 1.0 / (1.0 - grid_step * math.sqrt(n) * d * d)


def default_grid_step(n: int, d: int, fraction: float = 0.5, cap: float = 0.05) -> float:
    """A certifiable grid step: `fraction` of the admissible bound, never above `cap`"""
    return min(cap, fraction * max_admissible_step(n, d))


@lru_cache(maxsize=16)
def ball_grid(n: int, step: float) -> np.ndarray:
    """
    Grid points of spacing `step` inside the closed unit ball, followed by a
    boundary layer obtained by projecting the outermost grid shell onto the sphere.
    """
    if step <= 0:
        raise PreconditionError(f"grid step must be positive, got {step}")
    k = int(math.floor(1.0 / step + 1e-9))
    axis = step * np.arange(-k, k + 1)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    norms = np.linalg.norm(mesh, axis=1)
    inside = mesh[norms <= 1.0 + constants.POINT_IN_BALL_SLACK]
    shell = mesh[norms > max(1.0 - step * math.sqrt(n), 0.0)]
    shell = shell / np.linalg.norm(shell, axis=1)[:, None]
    sphere = np.unique(np.round(shell, 12), axis=0)
    grid = np.vstack([inside, sphere])
    grid.setflags(write=False)
    return grid


class SupNormEnclosure(BaseModel):
    """Certified enclosure of sup |P| over the closed unit ball"""

    grid_max: float = Field(ge=0)
    certified_max: float
    grid_step: float = Field(gt=0)
    inflation: float = Field(ge=1)
    argmax: List[float]


def sup_norm_ball(p: MultiPoly, grid_step: float) -> SupNormEnclosure:
    """Grid maximum of |p| over the ball, inflated by the Kellogg bound"""
    factor = inflation(p.n, p.d, grid_step)
    grid = ball_grid(p.n, float(grid_step))
    values = np.abs(evaluate_many(p, grid))
    best = int(np.argmax(values))
    grid_max = float(values[best])
    return SupNormEnclosure(
        grid_max=grid_max,
        certified_max=grid_max * factor,
        grid_step=grid_step,
        inflation=factor,
        argmax=[float(v) for v in grid[best]],
    )


def normalized(p: MultiPoly, grid_step: Optional[float] = None) -> Tuple[MultiPoly, SupNormEnclosure]:
    """`p` divided by its certified sup-norm, so that M_0 <= 1"""
    step = grid_step or default_grid_step(p.n, p.d)
    enclosure = sup_norm_ball(p, step)
    if enclosure.certified_max == 0.0:
        raise PreconditionError("cannot normalize the zero polynomial")
    return p.scale(1.0 / enclosure.certified_max), enclosure


def sphere_points(n: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform points on the unit sphere"""
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if n == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    rng = np.random.default_rng(count)
    raw = rng.normal(size=(count, n))
    return raw / np.linalg.norm(raw, axis=1)[:, None]


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n"""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)
