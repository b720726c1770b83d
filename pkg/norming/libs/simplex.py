"""
Dense primal simplex for small linear programs

    maximize    c . x
    subject to  lower_i <= a_i . x <= upper_i      (x free)

The method walks vertices of the feasible polytope directly in row space:
a basis is a set of linearly independent tight rows, each pinned at one of
its two bounds. Two-sided rows are handled natively, so a norming polytope
|P(z_j)| <= 1 maps to one row per point. Bland's rule (lowest row index)
picks both the row that leaves the basis and the row that enters it, which
rules out cycling on degenerate vertices.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from norming.libs import constants
from norming.libs.errors import ConsistencyError, PreconditionError, SingularBasisError


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"


@dataclass
class LinearProgram:
    """
    Objective and two-sided row constraints; `lower`/`upper` may be -inf/+inf.
    """

    objective: np.ndarray
    rows: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, self.objective.size)
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        if not np.all(np.isfinite(self.objective)):
            raise PreconditionError("objective vector must be finite")
        m = self.rows.shape[0]
        if self.lower.size != m or self.upper.size != m:
            raise PreconditionError(f"{m} rows but {self.lower.size} lower and {self.upper.size} upper bounds")
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise PreconditionError(f"constraint {bad} has lower bound above upper bound")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise PreconditionError("constraint bounds must not be NaN")

    @classmethod
    def from_constraints(
        cls, objective: Sequence[float], constraints: Iterable[Tuple[Sequence[float], float, float]]
    ) -> LinearProgram:
        """Build from (row, lower, upper) triples"""
        objective = np.asarray(objective, dtype=float)
        rows, lower, upper = [], [], []
        for row, lo, hi in constraints:
            row = np.asarray(row, dtype=float)
            if row.size != objective.size:
                raise PreconditionError(f"row of length {row.size}, objective has length {objective.size}")
            rows.append(row)
            lower.append(lo)
            upper.append(hi)
        return cls(objective, np.array(rows).reshape(len(rows), objective.size), np.array(lower), np.array(upper))

    @property
    def num_variables(self) -> int:
        return self.objective.size

    @property
    def num_constraints(self) -> int:
        return self.rows.shape[0]

    @property
    def bound_scale(self) -> float:
        """1 + largest finite bound magnitude; feasibility tolerances scale with it"""
        bounds = np.r_[self.lower, self.upper]
        finite = bounds[np.isfinite(bounds)]
        return 1.0 + float(np.max(np.abs(finite), initial=0.0))

    def with_objective(self, objective: Sequence[float]) -> LinearProgram:
        """Same feasible set, new objective"""
        return LinearProgram(objective, self.rows, self.lower, self.upper)

    def violation(self, x: np.ndarray) -> float:
        """Largest bound violation of `x` (0 when feasible)"""
        if self.num_constraints == 0:
            return 0.0
        activity = self.rows @ x
        with np.errstate(invalid="ignore"):
            below = np.where(np.isfinite(self.lower), self.lower - activity, -np.inf)
            above = np.where(np.isfinite(self.upper), activity - self.upper, -np.inf)
        return float(max(0.0, np.max(below), np.max(above)))


@dataclass
class LpOutcome:
    """Result of a solve; `optimum`/`solution` are set only when Optimal"""

    status: LpStatus
    optimum: Optional[float] = None
    solution: Optional[np.ndarray] = None
    iterations: int = 0


@dataclass
class _Basis:
    rows: List[int] = field(default_factory=list)
    # +1 pinned at upper, -1 pinned at lower, 0 for equality rows
    sides: List[int] = field(default_factory=list)

    def drop(self, position: int) -> None:
        del self.rows[position]
        del self.sides[position]

    def add(self, row: int, side: int) -> None:
        self.rows.append(row)
        self.sides.append(side)


class SimplexSolver:
    """
    Single-use solver instance. `start` must be a feasible point when given;
    it is used as a warm start (typically the optimum of a neighbouring LP).
    """

    def __init__(self, lp: LinearProgram, start: Optional[np.ndarray] = None, max_iterations: Optional[int] = None):
        self.lp = lp
        self.start = None if start is None else np.asarray(start, dtype=float).copy()
        self.max_iterations = max_iterations or 50 * (lp.num_constraints + lp.num_variables + 10)
        self.iterations = 0
        self._used = False

    def solve(self) -> LpOutcome:
        if self._used:
            raise ConsistencyError("SimplexSolver instances are single-use")
        self._used = True

        lp = self.lp
        tolerance = constants.LP_FEASIBILITY_TOLERANCE * lp.bound_scale
        x = np.zeros(lp.num_variables) if self.start is None else self.start
        if lp.violation(x) > tolerance:
            x = self._phase_one(x)
            if x is None:
                return LpOutcome(LpStatus.INFEASIBLE, iterations=self.iterations)

        status, x = self._walk(lp.rows, lp.lower, lp.upper, lp.objective, x)
        if status is LpStatus.UNBOUNDED:
            return LpOutcome(LpStatus.UNBOUNDED, iterations=self.iterations)

        violation = lp.violation(x)
        if violation > tolerance:
            raise ConsistencyError(f"simplex returned an infeasible point (violation {violation:.3e})")
        return LpOutcome(
            LpStatus.OPTIMAL,
            optimum=float(lp.objective @ x),
            solution=x,
            iterations=self.iterations,
        )

    def _phase_one(self, x0: np.ndarray) -> Optional[np.ndarray]:
        """Minimize a uniform slack t on all rows; feasible iff the optimum is t = 0"""
        lp = self.lp
        d = lp.num_variables
        rows, lower, upper = [], [], []
        for a, lo, hi in zip(lp.rows, lp.lower, lp.upper):
            if math.isfinite(lo):
                rows.append(np.r_[a, 1.0])
                lower.append(lo)
                upper.append(math.inf)
            if math.isfinite(hi):
                rows.append(np.r_[a, -1.0])
                lower.append(-math.inf)
                upper.append(hi)
        rows.append(np.r_[np.zeros(d), 1.0])
        lower.append(0.0)
        upper.append(math.inf)
        objective = np.r_[np.zeros(d), -1.0]
        start = np.r_[x0, lp.violation(x0)]
        logging.debug("Simplex phase one from infeasibility %.3e", start[-1])
        _, solution = self._walk(np.array(rows), np.array(lower), np.array(upper), objective, start)
        if solution[-1] > constants.LP_FEASIBILITY_TOLERANCE * lp.bound_scale:
            return None
        return solution[:d]

    def _initial_basis(self, rows: np.ndarray, lower: np.ndarray, upper: np.ndarray, x: np.ndarray) -> _Basis:
        basis = _Basis()
        if rows.shape[0] == 0:
            return basis
        activity = rows @ x
        slack = constants.LP_FEASIBILITY_TOLERANCE * (1.0 + np.abs(activity))
        at_upper = np.isfinite(upper) & (np.abs(activity - upper) <= slack)
        at_lower = np.isfinite(lower) & (np.abs(activity - lower) <= slack)
        chosen: List[np.ndarray] = []
        for i in np.flatnonzero(at_upper | at_lower):
            if len(chosen) == rows.shape[1]:
                break
            candidate = chosen + [rows[i]]
            if np.linalg.matrix_rank(np.array(candidate)) == len(candidate):
                chosen.append(rows[i])
                side = 0 if lower[i] == upper[i] else (1 if at_upper[i] else -1)
                basis.add(int(i), side)
        return basis

    def _walk(
        self, rows: np.ndarray, lower: np.ndarray, upper: np.ndarray, c: np.ndarray, x: np.ndarray
    ) -> Tuple[LpStatus, np.ndarray]:
        x = x.astype(float).copy()
        dim = c.size
        basis = self._initial_basis(rows, lower, upper, x)
        dual_tolerance = 1e-10 * max(1.0, float(np.linalg.norm(c)))

        while True:
            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise ConsistencyError(f"simplex did not terminate within {self.max_iterations} iterations")

            k = len(basis.rows)
            tight = rows[basis.rows] if k else np.zeros((0, dim))
            if k:
                condition = float(np.linalg.cond(tight))
                if not math.isfinite(condition) or condition > constants.LP_MAX_CONDITION:
                    raise SingularBasisError(condition)

            if k < dim:
                if k:
                    y, *_ = np.linalg.lstsq(tight.T, c, rcond=None)
                    direction = c - tight.T @ y
                else:
                    y = np.zeros(0)
                    direction = c.copy()
                if np.linalg.norm(direction) > dual_tolerance:
                    status = self._step(rows, lower, upper, basis, x, direction)
                    if status is LpStatus.UNBOUNDED:
                        return status, x
                    continue
            else:
                y = np.linalg.solve(tight.T, c)

            leaving = None
            for position in sorted(range(k), key=lambda p: basis.rows[p]):
                side = basis.sides[position]
                if (side == 1 and y[position] < -dual_tolerance) or (side == -1 and y[position] > dual_tolerance):
                    leaving = position
                    break
            if leaving is None:
                return LpStatus.OPTIMAL, x

            target = np.zeros(k)
            target[leaving] = -basis.sides[leaving]
            if k == dim:
                direction = np.linalg.solve(tight, target)
            else:
                direction, *_ = np.linalg.lstsq(tight, target, rcond=None)
            basis.drop(leaving)
            status = self._step(rows, lower, upper, basis, x, direction)
            if status is LpStatus.UNBOUNDED:
                return status, x

    @staticmethod
    def _step(
        rows: np.ndarray, lower: np.ndarray, upper: np.ndarray, basis: _Basis, x: np.ndarray, direction: np.ndarray
    ) -> Optional[LpStatus]:
        """Ratio test along `direction`; moves `x` in place and adds the blocking row"""
        if rows.shape[0] == 0:
            return LpStatus.UNBOUNDED
        rates = rows @ direction
        activity = rows @ x
        pivot_floor = constants.LP_PIVOT_TOLERANCE * np.linalg.norm(rows, axis=1) * np.linalg.norm(direction)
        limits = np.full(rows.shape[0], math.inf)
        with np.errstate(invalid="ignore", divide="ignore"):
            rising = (rates > pivot_floor) & np.isfinite(upper)
            falling = (rates < -pivot_floor) & np.isfinite(lower)
            limits[rising] = (upper[rising] - activity[rising]) / rates[rising]
            limits[falling] = (lower[falling] - activity[falling]) / rates[falling]
        limits[basis.rows] = math.inf
        limits = np.maximum(limits, 0.0)
        theta = float(np.min(limits))
        if not math.isfinite(theta):
            return LpStatus.UNBOUNDED
        ties = np.flatnonzero(limits <= theta + 1e-12 * (1.0 + theta))
        entering = int(ties[0])
        x += theta * direction
        side = 0 if lower[entering] == upper[entering] else (1 if rates[entering] > 0 else -1)
        basis.add(entering, side)
        return None


def solve(lp: LinearProgram, start: Optional[np.ndarray] = None) -> LpOutcome:
    """Solve `lp` with a fresh solver instance"""
    return SimplexSolver(lp, start=start).solve()
