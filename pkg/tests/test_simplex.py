import itertools
import math

import numpy as np
import pytest

from norming.libs.errors import ConsistencyError, PreconditionError
from norming.libs.simplex import LinearProgram, LpStatus, SimplexSolver, solve

INF = math.inf


def vertex_oracle(lp: LinearProgram) -> float:
    """Best objective over every vertex of {|A x| <= 1}, by enumeration"""
    m, dim = lp.rows.shape
    best = -INF
    for subset in itertools.combinations(range(m), dim):
        block = lp.rows[list(subset)]
        if abs(np.linalg.det(block)) < 1e-12:
            continue
        for signs in itertools.product((-1.0, 1.0), repeat=dim):
            x = np.linalg.solve(block, np.array(signs))
            if lp.violation(x) <= 1e-9:
                best = max(best, float(lp.objective @ x))
    return best


def test_small_program():
    """max x + y with x <= 1, y <= 2, x + y <= 2.5"""
    lp = LinearProgram.from_constraints(
        [1.0, 1.0],
        [([1.0, 0.0], -INF, 1.0), ([0.0, 1.0], -INF, 2.0), ([1.0, 1.0], -INF, 2.5)],
    )
    outcome = solve(lp)
    assert outcome.status is LpStatus.OPTIMAL
    assert outcome.optimum == pytest.approx(2.5)


def test_two_sided_rows():
    """|x + y| <= 1, |x - y| <= 1: the optimum of 3x + y sits at (1, 0)"""
    lp = LinearProgram([3.0, 1.0], [[1.0, 1.0], [1.0, -1.0]], [-1.0, -1.0], [1.0, 1.0])
    outcome = solve(lp)
    assert outcome.optimum == pytest.approx(3.0)
    assert outcome.solution == pytest.approx([1.0, 0.0])


def test_degenerate_vertex():
    """Redundant constraints through the optimal vertex do not stall the walk"""
    lp = LinearProgram.from_constraints(
        [1.0, 1.0],
        [
            ([1.0, 0.0], -INF, 1.0),
            ([0.0, 1.0], -INF, 1.0),
            ([1.0, 1.0], -INF, 2.0),
            ([2.0, 1.0], -INF, 3.0),
            ([1.0, 2.0], -INF, 3.0),
            ([1.0, 0.0], 0.0, INF),
            ([0.0, 1.0], 0.0, INF),
        ],
    )
    outcome = solve(lp)
    assert outcome.status is LpStatus.OPTIMAL
    assert outcome.optimum == pytest.approx(2.0)


def test_unbounded():
    """max x with only x >= 0"""
    lp = LinearProgram([1.0, 0.0], [[1.0, 0.0]], [0.0], [INF])
    assert solve(lp).status is LpStatus.UNBOUNDED


def test_infeasible():
    """x in [2, 3] and x in [-1, 1] cannot both hold"""
    lp = LinearProgram([1.0], [[1.0], [1.0]], [2.0, -1.0], [3.0, 1.0])
    assert solve(lp).status is LpStatus.INFEASIBLE


def test_infeasible_start_is_repaired():
    """Phase one finds a feasible point when the origin is not one"""
    lp = LinearProgram([-1.0, -1.0], [[1.0, 0.0], [0.0, 1.0]], [0.5, 0.25], [2.0, 2.0])
    outcome = solve(lp)
    assert outcome.optimum == pytest.approx(-0.75)


def test_bounds_are_validated():
    """A row with lower > upper is a precondition error"""
    with pytest.raises(PreconditionError):
        LinearProgram([1.0], [[1.0]], [1.0], [0.0])


def test_solver_is_single_use():
    """A solver instance refuses a second solve"""
    solver = SimplexSolver(LinearProgram([1.0], [[1.0]], [-1.0], [1.0]))
    solver.solve()
    with pytest.raises(ConsistencyError):
        solver.solve()


@pytest.mark.parametrize("seed", range(5))
def test_matches_vertex_enumeration(seed):
    """Five variables, eight two-sided rows: simplex optimum equals the best vertex"""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(8, 5))
    lp = LinearProgram(rng.normal(size=5), A, -np.ones(8), np.ones(8))
    cold = solve(lp)
    assert cold.status is LpStatus.OPTIMAL
    assert cold.optimum == pytest.approx(vertex_oracle(lp), rel=1e-7, abs=1e-9)

    # warm start from the optimum of another objective over the same polytope
    other = solve(lp.with_objective(rng.normal(size=5)))
    warm = SimplexSolver(lp, start=other.solution).solve()
    assert warm.optimum == pytest.approx(cold.optimum, rel=1e-9, abs=1e-12)
