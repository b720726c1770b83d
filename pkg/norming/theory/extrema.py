"""
Critical points of polynomials on the unit ball, the Bezout count check, and
the interior-extremum mechanism behind the topological Remez bound.
"""
from __future__ import annotations

import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from norming.libs import config, constants
from norming.libs.emit import Document
from norming.libs.errors import PreconditionError
from norming.libs.poly import (
    MultiPoly,
    ball_grid,
    default_grid_step,
    evaluate_many,
    gradient,
    hessian,
    sup_norm_ball,
)
from norming.theory.domains import DomainFamily, interior_samples, required_domains

NEWTON_ITERATIONS = 60
MAX_NEWTON_STEP = 0.25
DIVERGENCE_RADIUS = 1.5
# fraction of the seed step within which two converged points are the same critical point
DEDUP_FRACTION = 0.1
NORMALIZATION_TOLERANCE = 1e-6

CriticalKind = Literal["Max", "Min", "Saddle", "Degenerate"]


class CriticalPoint(BaseModel):
    location: List[float]
    kind: CriticalKind
    value: float
    gradient_norm: float
    hessian_eigen_signs: List[int]
    hessian_eigenvalues: List[float]


class CriticalPointReport(Document):
    polynomial: MultiPoly
    seed_grid_step: float
    points: List[CriticalPoint]


class BezoutReport(Document):
    degree: int
    n: int
    bound: int
    critical_points: int
    extrema: int
    status: Literal["ok", "violation", "skipped"]
    notice: Optional[str] = None


class DomainExtremum(BaseModel):
    domain: int
    boundary_max: float
    interior_max: float
    critical_point: Optional[CriticalPoint] = None
    found: bool = False


class InteriorExtremumReport(Document):
    degree: int
    required_domains: int
    kappa: Optional[float]
    set_max: float
    hypothesis_triggered: bool
    # None when the hypothesis did not trigger: no claim is made
    mechanism_confirmed: Optional[bool]
    domains: List[DomainExtremum]
    notes: List[str] = []


class _Derivatives:
    """Gradient and Hessian polynomials of one polynomial, evaluated in batches"""

    def __init__(self, p: MultiPoly):
        self.p = p
        self.grads = gradient(p)
        self.hess = hessian(p)

    def gradient_at(self, points: np.ndarray) -> np.ndarray:
        return np.column_stack([evaluate_many(g, points) for g in self.grads])

    def hessian_at(self, points: np.ndarray) -> np.ndarray:
        n = self.p.n
        out = np.empty((points.shape[0], n, n))
        for i in range(n):
            for j in range(i, n):
                out[:, i, j] = out[:, j, i] = evaluate_many(self.hess[i][j], points)
        return out


def newton_polish(p: MultiPoly, seeds: np.ndarray, derivatives: Optional[_Derivatives] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Damped Newton on grad p = 0 from every seed at once. Returns the final
    points and their gradient norms; diverged seeds get an infinite residual.
    """
    derivatives = derivatives or _Derivatives(p)
    X = np.array(seeds, dtype=float, copy=True)
    alive = np.ones(X.shape[0], dtype=bool)
    for _ in range(NEWTON_ITERATIONS):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        G = derivatives.gradient_at(X[idx])
        H = derivatives.hessian_at(X[idx])
        delta = -(np.linalg.pinv(H) @ G[..., None])[..., 0]
        length = np.linalg.norm(delta, axis=1)
        long_steps = length > MAX_NEWTON_STEP
        delta[long_steps] *= (MAX_NEWTON_STEP / length[long_steps])[:, None]
        X[idx] += delta
        alive[idx[np.linalg.norm(X[idx], axis=1) > DIVERGENCE_RADIUS]] = False
        alive[idx[length < 1e-15]] = False
    residual = np.full(X.shape[0], np.inf)
    finite = np.all(np.isfinite(X), axis=1) & (np.linalg.norm(X, axis=1) <= DIVERGENCE_RADIUS)
    if np.any(finite):
        residual[finite] = np.linalg.norm(derivatives.gradient_at(X[finite]), axis=1)
    return X, residual


def classify(eigenvalues: np.ndarray) -> Tuple[CriticalKind, List[int]]:
    """Kind from Hessian eigenvalues; tiny eigenvalues relative to the spectral radius are degenerate"""
    radius = float(np.max(np.abs(eigenvalues)))
    if radius == 0.0 or np.any(np.abs(eigenvalues) < constants.DEGENERATE_EIGEN_RATIO * radius):
        signs = [0 if abs(v) < constants.DEGENERATE_EIGEN_RATIO * radius else int(np.sign(v)) for v in eigenvalues]
        return "Degenerate", signs
    signs = [int(np.sign(v)) for v in eigenvalues]
    if all(s < 0 for s in signs):
        return "Max", signs
    if all(s > 0 for s in signs):
        return "Min", signs
    return "Saddle", signs


def _critical_point(p: MultiPoly, derivatives: _Derivatives, x: np.ndarray, residual: float) -> CriticalPoint:
    eigenvalues = np.linalg.eigvalsh(derivatives.hessian_at(x.reshape(1, -1))[0])
    kind, signs = classify(eigenvalues)
    return CriticalPoint(
        location=[float(v) for v in x],
        kind=kind,
        value=float(evaluate_many(p, x.reshape(1, -1))[0]),
        gradient_norm=float(residual),
        hessian_eigen_signs=signs,
        hessian_eigenvalues=[float(v) for v in eigenvalues],
    )


def find_critical_points(p: MultiPoly, seed_grid_step: Optional[float] = None) -> List[CriticalPoint]:
    """
    Newton from every seed of a ball grid; converged points inside the closed
    ball are deduplicated within a tenth of the seed step and sorted by coordinates.
    """
    step = seed_grid_step or config.get().seed_grid_step
    if p.d < 2:
        raise PreconditionError(f"critical point search needs degree >= 2, got {p.d}")
    if not 0.0 < step <= 0.2:
        raise PreconditionError(f"seed grid step must lie in (0, 0.2], got {step}")

    derivatives = _Derivatives(p)
    X, residual = newton_polish(p, ball_grid(p.n, step), derivatives)
    keep = (residual <= constants.CRITICAL_RESIDUAL) & (
        np.linalg.norm(X, axis=1) <= 1.0 + constants.POINT_IN_BALL_SLACK
    )
    logging.debug("%d of %d seeds converged to critical points", int(keep.sum()), X.shape[0])
    X, residual = X[keep], residual[keep]

    radius = DEDUP_FRACTION * step
    accepted: List[int] = []
    for i in np.lexsort((*X.T[::-1], residual)):
        if all(np.linalg.norm(X[i] - X[j]) > radius for j in accepted):
            accepted.append(int(i))
    chosen = X[accepted]
    order = np.lexsort(chosen.T[::-1]) if len(accepted) else []
    return [_critical_point(p, derivatives, X[accepted[k]], residual[accepted[k]]) for k in order]


def critical_point_report(p: MultiPoly, seed_grid_step: Optional[float] = None) -> CriticalPointReport:
    step = seed_grid_step or config.get().seed_grid_step
    return CriticalPointReport(polynomial=p, seed_grid_step=step, points=find_critical_points(p, step))


def bezout_extrema_check(p: MultiPoly, points: Sequence[CriticalPoint]) -> BezoutReport:
    """Nondegenerate critical points of a degree-d polynomial number at most (d-1)^n"""
    bound = (p.d - 1) ** p.n
    extrema = sum(1 for cp in points if cp.kind in ("Max", "Min"))
    if any(cp.kind == "Degenerate" for cp in points):
        return BezoutReport(
            degree=p.d,
            n=p.n,
            bound=bound,
            critical_points=len(points),
            extrema=extrema,
            status="skipped",
            notice="degenerate critical points present; the count bound applies to nondegenerate ones only",
        )
    status = "ok" if len(points) <= bound and extrema <= bound else "violation"
    if status == "violation":
        logging.error("Bezout bound %d exceeded by %d critical points: duplicate detection failed", bound, len(points))
    return BezoutReport(
        degree=p.d, n=p.n, bound=bound, critical_points=len(points), extrema=extrema, status=status
    )


def _interior_step(domain) -> float:
    lo, hi = domain.bounding_box()
    return float(min(0.01, np.min(hi - lo) / 40.0))


def interior_extremum_witness(
    p: MultiPoly, F: DomainFamily, d: int, boundary_samples: int = 400
) -> InteriorExtremumReport:
    """
    Compares boundary and interior maxima of |p| on the leading j_d domains
    and locates the interior extremum wherever the interior wins.
    """
    if p.d > d:
        raise PreconditionError(f"polynomial degree {p.d} exceeds d={d}")
    if p.n != F.n:
        raise PreconditionError(f"polynomial has {p.n} variables, family has dimension {F.n}")
    notes = []
    enclosure = sup_norm_ball(p, default_grid_step(p.n, max(p.d, 1), config.get().grid_step_fraction))
    if enclosure.grid_max > 1.0 + NORMALIZATION_TOLERANCE or enclosure.certified_max < 1.0 - NORMALIZATION_TOLERANCE:
        logging.warning("Polynomial is not normalized: grid max %.6g, certified %.6g", enclosure.grid_max, enclosure.certified_max)
        notes.append("polynomial not normalized to sup 1 on the ball")

    j = required_domains(F.n, d)
    indices = F.leading(min(j, F.size))
    kappa = (F.sorted_volumes()[j - 1] / (4.0 * F.n)) ** d if j <= F.size else None
    if kappa is None:
        notes.append(f"family has {F.size} < {j} domains")

    derivatives = _Derivatives(p) if p.d >= 2 else None
    results: List[DomainExtremum] = []
    set_max = 0.0
    for index in indices:
        domain = F.domains[index]
        boundary = np.abs(evaluate_many(p, domain.boundary_samples(boundary_samples)))
        inner_points = interior_samples(domain, _interior_step(domain))
        inner = np.abs(evaluate_many(p, inner_points))
        set_max = max(set_max, float(boundary.max()))
        entry = DomainExtremum(domain=index, boundary_max=float(boundary.max()), interior_max=float(inner.max()))
        if entry.interior_max > entry.boundary_max and derivatives is not None:
            x, residual = newton_polish(p, inner_points[[int(np.argmax(inner))]], derivatives)
            if residual[0] <= constants.CRITICAL_RESIDUAL and domain.contains(x)[0]:
                entry.critical_point = _critical_point(p, derivatives, x[0], residual[0])
                entry.found = entry.critical_point.kind in ("Max", "Min")
        results.append(entry)

    triggered = kappa is not None and set_max < kappa
    if not triggered:
        notes.append("hypothesis not triggered")
    return InteriorExtremumReport(
        degree=d,
        required_domains=j,
        kappa=kappa,
        set_max=set_max,
        hypothesis_triggered=triggered,
        mechanism_confirmed=all(r.found for r in results) if triggered else None,
        domains=results,
        notes=notes,
    )
