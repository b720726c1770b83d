"""
Remez (norming) constants: finite sets through linear programs on refined cells,
the measure bound through Chebyshev polynomials, and the topological bound
for families of disjoint domains.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
from functools import cached_property
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field, model_validator
from scipy.spatial.distance import pdist

from norming.libs import config, constants
from norming.libs.emit import Document
from norming.libs.errors import ConsistencyError, PreconditionError
from norming.libs.poly import (
    MultiPoly,
    ball_grid,
    chebyshev_T,
    default_grid_step,
    dimension,
    evaluate_many,
    inflation,
    monomial_matrix,
    sup_norm_ball,
)
from norming.libs.simplex import LinearProgram, LpStatus, SimplexSolver
from norming.theory.domains import DomainFamily, required_domains

BOUNDARY_SAMPLES = 400


class PointSet(Document):
    """Finite candidate zero set inside the closed unit ball"""

    n: int = Field(gt=0)
    points: List[List[float]] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_points(self) -> PointSet:
        for i, p in enumerate(self.points):
            if len(p) != self.n:
                raise ValueError(f"point {i} has {len(p)} coordinates, expected {self.n}")
            if math.hypot(*p) > 1.0 + constants.POINT_IN_BALL_SLACK:
                raise ValueError(f"point {i} lies outside the closed unit ball")
        if len(self.points) > 1 and self.rho <= 0.0:
            raise ValueError("point set contains duplicate points")
        return self

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(-1, self.n)

    @cached_property
    def rho(self) -> float:
        """Minimal pairwise distance (inf for a single point)"""
        if len(self.points) < 2:
            return math.inf
        return float(np.min(pdist(self.array)))

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_array(cls, points) -> PointSet:
        arr = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(n=arr.shape[1], points=arr.tolist())


class NormingCheck(BaseModel):
    norming: bool
    rank: int
    dimension: int
    # polynomial vanishing on Z, scaled to grid sup 1 on the ball; only when not norming
    certificate: Optional[MultiPoly] = None


class RemezReport(Document):
    """Certified enclosure [lower, upper] of R_d(Z)"""

    degree: int = Field(ge=0)
    lower: float = Field(ge=1.0)
    upper: float
    witness: MultiPoly
    norming: bool
    method: Literal["finite_lp", "topological", "measure"]
    grid_step: Optional[float] = None
    argmax: Optional[List[float]] = None
    lp_count: int = 0
    notes: List[str] = []

    @model_validator(mode="after")
    def _check_enclosure(self) -> RemezReport:
        if self.upper < self.lower:
            raise ValueError(f"enclosure is empty: lower {self.lower} > upper {self.upper}")
        if self.norming == math.isinf(self.upper):
            raise ValueError("a report is non-norming exactly when its upper bound is infinite")
        return self


class MeasureBound(Document):
    lam: float = Field(alias="lambda")
    n: int
    d: int
    chebyshev_bound: float
    simple_bound: float


class TopologicalBound(Document):
    """Topological Remez bound with the data it was computed from"""

    n: int
    degree: int
    bound: float
    required_domains: int
    binding_index: int
    binding_lambda: float
    # same formula with the raw Lebesgue measure in place of lambda
    raw_bound: float
    raw_mu: float
    max_degree: int
    certified_volumes: bool

    def to_report(self) -> RemezReport:
        notes = [] if self.certified_volumes else ["volumes from approximating contours (uncertified)"]
        return RemezReport(
            degree=self.degree,
            lower=1.0,
            upper=self.bound,
            witness=MultiPoly.constant(self.n, 1.0),
            norming=True,
            method="topological",
            notes=notes,
        )


class Counterexample(BaseModel):
    polynomial: MultiPoly
    sampled_max: float
    threshold: float
    source: Literal["random", "probe"]
    numerically_zero: bool = False


class WitnessTestReport(Document):
    degree: int
    trials: int
    status: Literal["ran", "skipped"]
    mode: Literal["bound", "sharpness"] = "bound"
    kappa: Optional[float] = None
    domains_sampled: List[int] = []
    violations: List[Counterexample] = []
    notice: Optional[str] = None


class WitnessRatio(BaseModel):
    ball_max: float
    certified_ball_max: float
    set_max: float
    # ball_max / set_max: a sound lower bound for R_d(Z) when Z contains the sample
    ratio: float
    certified_ratio: float


def norming_check(Z: PointSet, d: int) -> NormingCheck:
    """
    Z is d-norming iff its evaluation matrix has full column rank. Otherwise
    a kernel polynomial vanishing on Z is returned as the certificate.
    """
    D = dimension(Z.n, d)
    V = monomial_matrix(Z.n, d, Z.array)
    _, R, _ = scipy.linalg.qr(V, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > constants.RANK_TOLERANCE * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank == D:
        return NormingCheck(norming=True, rank=rank, dimension=D)

    # right singular vector of the smallest singular value spans (part of) the kernel
    _, _, vh = np.linalg.svd(V, full_matrices=True)
    kernel = MultiPoly.from_array(Z.n, d, vh[-1])
    scale = float(np.max(np.abs(evaluate_many(kernel, ball_grid(Z.n, 0.05)))))
    certificate = kernel.scale(1.0 / scale)
    logging.info("Point set of size %d is not %d-norming (rank %d < %d)", len(Z), d, rank, D)
    return NormingCheck(norming=False, rank=rank, dimension=D, certificate=certificate)


def _initial_cells(n: int, step: float) -> np.ndarray:
    """Centers of the lattice cubes of side `step` that meet the closed unit ball"""
    k = int(math.ceil(1.0 / step - 1e-9))
    axis = step * np.arange(-k, k + 1)
    centers = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return centers[np.linalg.norm(centers, axis=1) - 0.5 * step * math.sqrt(n) <= 1.0]


def _cell_anchor(center: np.ndarray, side: float) -> Tuple[np.ndarray, float]:
    """
    Point of the ball to evaluate for a cell, and a radius around it that
    covers the part of the cell inside the ball.
    """
    half_diagonal = 0.5 * side * math.sqrt(center.size)
    norm = float(np.linalg.norm(center))
    if norm <= 1.0:
        return center, half_diagonal
    return center / norm, half_diagonal + norm - 1.0


class _CellSearch:
    """
    Best-first refinement of cube cells covering the ball.

    The extremal polynomial P* attains R_d(Z) = M_0(P*) somewhere in a cell
    with anchor c and radius r, and |grad P*| <= d^2 M_0(P*) on the ball, so
    R_d(Z) <= V(c) / (1 - r d^2) where V(c) is the LP value at c. The largest
    such bound over all leaf cells is a certified upper value.
    """

    def __init__(self, Z: PointSet, d: int):
        self.n, self.d = Z.n, d
        rows = monomial_matrix(Z.n, d, Z.array)
        self.polytope = LinearProgram(np.zeros(dimension(Z.n, d)), rows, -np.ones(len(Z)), np.ones(len(Z)))
        self.heap: List[tuple] = []
        self.order = itertools.count()
        self.solves = 0
        self.best = -math.inf
        self.argmax: Optional[np.ndarray] = None
        self.witness: Optional[np.ndarray] = None

    @property
    def upper(self) -> float:
        return max(self.best, -self.heap[0][0])

    def visit(self, center: np.ndarray, side: float, warm: Optional[np.ndarray]) -> np.ndarray:
        point, radius = _cell_anchor(center, side)
        objective = monomial_matrix(self.n, self.d, point)[0]
        outcome = SimplexSolver(self.polytope.with_objective(objective), start=warm).solve()
        self.solves += 1
        if outcome.status is not LpStatus.OPTIMAL:
            raise ConsistencyError(f"LP {outcome.status.value} at {point.tolist()} although Z is norming")
        if outcome.optimum > self.best:
            self.best, self.argmax, self.witness = outcome.optimum, point, outcome.solution
        shrink = radius * self.d * self.d
        bound = outcome.optimum / (1.0 - shrink) if shrink < 1.0 else math.inf
        heapq.heappush(self.heap, (-bound, next(self.order), center, side, outcome.solution))
        return outcome.solution

    def refine(self, target: float, max_lps: int) -> bool:
        """Split the worst cells until upper <= target * lower; False when the LP budget runs out"""
        children = 2**self.n
        while self.upper > target * max(self.best, 1.0):
            if self.solves + children > max_lps:
                return False
            _, _, center, side, solution = heapq.heappop(self.heap)
            for offset in itertools.product((-0.25, 0.25), repeat=self.n):
                child = center + side * np.asarray(offset)
                if np.linalg.norm(child) - 0.25 * side * math.sqrt(self.n) <= 1.0:
                    self.visit(child, 0.5 * side, solution)
        return True


def remez_finite(
    Z: PointSet,
    d: int,
    grid_step: Optional[float] = None,
    tolerance: Optional[float] = None,
    max_lps: Optional[int] = None,
) -> RemezReport:
    """
    Enclosure of R_d(Z): maximize P(x) over the polytope |P(z)| <= 1 at the
    center of every lattice cell of side `grid_step`. The polytope is
    symmetric, so max P(x) = max |P(x)| and one LP per cell suffices;
    consecutive LPs are warm started. Cells are then split best-first until
    upper <= (1 + tolerance) lower or `max_lps` LPs have been solved.
    """
    cfg = config.get()
    step = grid_step or default_grid_step(Z.n, d, cfg.grid_step_fraction)
    inflation(Z.n, d, step)
    tolerance = cfg.remez_gap if tolerance is None else tolerance
    max_lps = cfg.remez_max_lps if max_lps is None else max_lps
    if tolerance <= 0:
        raise PreconditionError(f"tolerance must be positive, got {tolerance}")
    check = norming_check(Z, d)
    if not check.norming:
        return RemezReport(
            degree=d,
            lower=math.inf,
            upper=math.inf,
            witness=check.certificate,
            norming=False,
            method="finite_lp",
            grid_step=step,
            notes=[f"evaluation matrix has rank {check.rank} < {check.dimension}"],
        )

    search = _CellSearch(Z, d)
    warm: Optional[np.ndarray] = None
    for center in _initial_cells(Z.n, step):
        warm = search.visit(center, step, warm)
    converged = search.refine(1.0 + tolerance, max_lps)
    lower = max(search.best, 1.0)
    upper = max(search.upper, lower)
    logging.debug("remez_finite: %d LPs, enclosure [%.6g, %.6g]", search.solves, lower, upper)

    notes = []
    if not converged:
        logging.warning("Cell refinement stopped after %d LPs with upper/lower = %.4g", search.solves, upper / lower)
        notes.append(f"LP budget of {max_lps} exhausted; upper/lower = {upper / lower:.6g}")
    return RemezReport(
        degree=d,
        lower=lower,
        upper=upper,
        witness=MultiPoly.from_array(Z.n, d, search.witness),
        norming=True,
        method="finite_lp",
        grid_step=step,
        argmax=[float(v) for v in search.argmax],
        lp_count=search.solves,
        notes=notes,
    )


def measure_remez_bound(lam: float, n: int, d: int) -> MeasureBound:
    """
    Bounds of R_d(Z) in terms of lambda = m(Z)/m(B^n): the Chebyshev bound
    T_d((1 + s)/(1 - s)) with s = (1 - lambda)^(1/n), and (4n/lambda)^d.
    """
    if not 0.0 < lam <= 1.0:
        raise PreconditionError(f"lambda must lie in (0, 1], got {lam}")
    if n < 1 or d < 0:
        raise PreconditionError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    if lam == 1.0:
        chebyshev_bound = 1.0
    else:
        # 1 - s without cancellation; (1 + s)/(1 - s) = (2 - u)/u
        u = -math.expm1(math.log1p(-lam) / n)
        chebyshev_bound = chebyshev_T(d, (2.0 - u) / u)
    simple_bound = (4.0 * n / lam) ** d
    if chebyshev_bound > simple_bound * (1.0 + 1e-12):
        raise ConsistencyError(f"Chebyshev bound {chebyshev_bound} exceeds simple bound {simple_bound}")
    return MeasureBound(lam=lam, n=n, d=d, chebyshev_bound=chebyshev_bound, simple_bound=simple_bound)


def topological_remez_bound(F: DomainFamily, d: int) -> TopologicalBound:
    """(4n / lambda_{j_d})^d with lambda the volume normalized by the unit ball"""
    j = required_domains(F.n, d)
    if j > F.size:
        raise PreconditionError(
            f"degree {d} needs N >= (d-1)^n + 1 = {j} domains, family has {F.size}"
        )
    lam = F.sorted_volumes(normalized=True)[j - 1]
    mu = F.sorted_volumes(normalized=False)[j - 1]
    return TopologicalBound(
        n=F.n,
        degree=d,
        bound=(4.0 * F.n / lam) ** d,
        required_domains=j,
        binding_index=F.order()[j - 1],
        binding_lambda=lam,
        raw_bound=(4.0 * F.n / mu) ** d,
        raw_mu=mu,
        max_degree=F.max_degree(),
        certified_volumes=F.certified,
    )


def _boundary_cloud(F: DomainFamily, indices: Sequence[int], samples: int) -> np.ndarray:
    return np.vstack([F.domains[i].boundary_samples(samples) for i in indices])


def topological_bound_witness_test(
    F: DomainFamily,
    d: int,
    trials: int,
    rng: np.random.Generator,
    probes: Sequence[MultiPoly] = (),
    boundary_samples: int = BOUNDARY_SAMPLES,
) -> WitnessTestReport:
    """
    Random degree-d polynomials normalized to certified sup 1 must reach
    kappa_d = (lambda_{j_d}/4n)^d on the sampled boundaries of the first j_d
    domains. When the family is too small and probes are given, the probes
    are tested against the smallest domain's kappa instead (sharpness mode).
    """
    if trials < 0:
        raise PreconditionError(f"trials must be non-negative, got {trials}")
    j = required_domains(F.n, d)
    lambdas = F.sorted_volumes(normalized=True)
    if j <= F.size:
        mode = "bound"
        kappa = (lambdas[j - 1] / (4.0 * F.n)) ** d
        indices = F.leading(j)
    elif probes:
        mode = "sharpness"
        kappa = (lambdas[-1] / (4.0 * F.n)) ** d
        indices = F.order()
        trials = 0
    else:
        return WitnessTestReport(
            degree=d,
            trials=0,
            status="skipped",
            notice=f"degree {d} needs N >= {j} domains, family has {F.size}",
        )
    if mode == "bound" and trials < 1:
        raise PreconditionError("trials must be at least 1")

    cloud = _boundary_cloud(F, indices, boundary_samples)
    violations: List[Counterexample] = []

    if trials:
        step = default_grid_step(F.n, d, config.get().grid_step_fraction)
        grid_monomials = monomial_matrix(F.n, d, ball_grid(F.n, step))
        cloud_monomials = monomial_matrix(F.n, d, cloud)
        coeffs = rng.uniform(-1.0, 1.0, (trials, dimension(F.n, d)))
        grid_max = np.max(np.abs(grid_monomials @ coeffs.T), axis=0)
        certified = grid_max * inflation(F.n, d, step)
        cloud_max = np.max(np.abs(cloud_monomials @ coeffs.T), axis=0) / certified
        # M_0(P) is only known to lie in [grid_max, certified]; the test threshold uses the sound side
        thresholds = kappa * grid_max / certified
        for t in np.flatnonzero(cloud_max < thresholds):
            violations.append(
                Counterexample(
                    polynomial=MultiPoly.from_array(F.n, d, coeffs[t] / certified[t]),
                    sampled_max=float(cloud_max[t]),
                    threshold=float(thresholds[t]),
                    source="random",
                )
            )

    for probe in probes:
        if probe.n != F.n:
            raise PreconditionError(f"probe has {probe.n} variables, family has dimension {F.n}")
        enclosure = sup_norm_ball(probe, default_grid_step(probe.n, probe.d, config.get().grid_step_fraction))
        scaled = probe.scale(1.0 / enclosure.certified_max)
        sampled = float(np.max(np.abs(evaluate_many(scaled, cloud))))
        threshold = kappa * enclosure.grid_max / enclosure.certified_max
        zero = sampled <= constants.POLISH_RESIDUAL
        if sampled < threshold or zero:
            violations.append(
                Counterexample(
                    polynomial=scaled, sampled_max=sampled, threshold=threshold, source="probe", numerically_zero=zero
                )
            )

    if violations and mode == "bound":
        logging.warning("%d polynomials fell below kappa_%d = %.3e", len(violations), d, kappa)
    return WitnessTestReport(
        degree=d,
        trials=trials,
        status="ran",
        mode=mode,
        kappa=kappa,
        domains_sampled=list(indices),
        violations=violations,
        notice=None if mode == "bound" else f"family has {F.size} < {j} domains; probes tested against the smallest domain",
    )


def witness_ratio(p: MultiPoly, points, grid_step: Optional[float] = None) -> WitnessRatio:
    """sup over the ball of |p| divided by max of |p| over `points`"""
    step = grid_step or default_grid_step(p.n, p.d, config.get().grid_step_fraction)
    enclosure = sup_norm_ball(p, step)
    set_max = float(np.max(np.abs(evaluate_many(p, points))))
    if set_max == 0.0:
        ratio = certified_ratio = math.inf if enclosure.grid_max > 0 else math.nan
    else:
        ratio = enclosure.grid_max / set_max
        certified_ratio = enclosure.certified_max / set_max
    return WitnessRatio(
        ball_max=enclosure.grid_max,
        certified_ball_max=enclosure.certified_max,
        set_max=set_max,
        ratio=ratio,
        certified_ratio=certified_ratio,
    )
