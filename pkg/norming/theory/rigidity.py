"""
Lower bounds on rigidity constants RG_d(Z) and one-dimensional divided differences.
"""
from __future__ import annotations

import itertools
import logging
import math
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import Field

from norming.libs import constants
from norming.libs.emit import Document, Provenance
from norming.libs.errors import PreconditionError
from norming.theory.domains import DomainFamily
from norming.theory.remez import PointSet, RemezReport, topological_remez_bound

RigiditySource = Literal["from_remez", "one_dim_points", "interior", "density", "topological", "divided_diff"]


class RigidityBound(Document):
    degree: int = Field(ge=0)
    lower: float = Field(ge=0.0)
    source: RigiditySource
    # divided-difference values are order-of-magnitude estimates, not certified bounds
    estimate: bool = False
    applicable: bool = True
    reason: Optional[str] = None
    inputs_digest: Provenance


def _check_degree(d: int) -> None:
    if not 0 <= d <= constants.MAX_DEGREE:
        raise PreconditionError(f"degree must lie in [0, {constants.MAX_DEGREE}], got {d}")


def _half_factorial(d: int) -> float:
    """(d+1)!/2"""
    _check_degree(d)
    return math.factorial(d + 1) / 2.0


def rigidity_from_remez(report: RemezReport) -> RigidityBound:
    """RG_d(Z) >= (d+1)!/2 / R_d(Z); zero when Z is not norming"""
    d = report.degree
    lower = 0.0 if math.isinf(report.upper) else _half_factorial(d) / report.upper
    return RigidityBound(
        degree=d,
        lower=lower,
        source="from_remez",
        inputs_digest=Provenance.of(upper=report.upper, method=report.method, norming=report.norming),
    )


def rigidity_1d_points(count: int, d: int) -> RigidityBound:
    """(d+1)!/2^(d+1) for at least d+1 points on the line, else 0"""
    if count < 0:
        raise PreconditionError(f"point count must be non-negative, got {count}")
    _check_degree(d)
    applicable = count >= d + 1
    lower = math.factorial(d + 1) / 2.0 ** (d + 1) if applicable else 0.0
    return RigidityBound(
        degree=d,
        lower=lower,
        source="one_dim_points",
        applicable=applicable,
        reason=None if applicable else f"{count} points vanish on a degree-{d} polynomial",
        inputs_digest=Provenance.of(count=count, d=d),
    )


def rigidity_interior(d: int) -> RigidityBound:
    """Sets with non-empty interior: (d+1)!/2^(d+1)"""
    _check_degree(d)
    return RigidityBound(
        degree=d,
        lower=math.factorial(d + 1) / 2.0 ** (d + 1),
        source="interior",
        inputs_digest=Provenance.of(d=d),
    )


def density_bound(n: int, d: int, count: int, rho: float) -> RigidityBound:
    """
    ((d+1)!/2) * ((M rho^n - (4d)^n rho) / 4n)^d for M = `count` points at
    mutual distance >= rho, valid once M > (4d)^n (1/rho)^(n-1).
    """
    if n < 1 or count < 1:
        raise PreconditionError(f"need n >= 1 and at least one point, got n={n}, M={count}")
    inputs = Provenance.of(n=n, d=d, M=count, rho=rho)
    if not math.isfinite(rho):
        return RigidityBound(
            degree=d, lower=0.0, source="density", applicable=False, reason="single point", inputs_digest=inputs
        )
    if rho <= 0.0:
        raise PreconditionError(f"separation must be positive, got {rho}")
    required = (4 * d) ** n * (1.0 / rho) ** (n - 1)
    if count <= required:
        return RigidityBound(
            degree=d,
            lower=0.0,
            source="density",
            applicable=False,
            reason=f"M = {count} does not exceed (4d)^n (1/rho)^(n-1) = {required:.6g}",
            inputs_digest=inputs,
        )
    base = (count * rho**n - (4 * d) ** n * rho) / (4.0 * n)
    return RigidityBound(degree=d, lower=_half_factorial(d) * base**d, source="density", inputs_digest=inputs)


def rigidity_density(Z: PointSet, d: int) -> RigidityBound:
    """Density bound from the size and minimal separation of Z"""
    return density_bound(Z.n, d, len(Z), Z.rho)


def rigidity_topological(F: DomainFamily, d: int) -> RigidityBound:
    """((d+1)!/2) (lambda_{j_d}/4n)^d"""
    bound = topological_remez_bound(F, d)
    lower = _half_factorial(d) * (bound.binding_lambda / (4.0 * F.n)) ** d
    return RigidityBound(
        degree=d,
        lower=lower,
        source="topological",
        inputs_digest=Provenance.of(lam=bound.binding_lambda, n=F.n, d=d, binding_index=bound.binding_index),
    )


def divided_difference(nodes: Sequence[float], values: Sequence[float]) -> float:
    """Leading coefficient of Newton's divided-difference table"""
    x = np.asarray(nodes, dtype=float)
    table = np.asarray(values, dtype=float).copy()
    if x.size == 0 or x.size != table.size:
        raise PreconditionError(f"need equally many nodes and values (>= 1), got {x.size} and {table.size}")
    if np.unique(x).size != x.size:
        raise PreconditionError("divided differences need pairwise distinct nodes")
    for level in range(1, x.size):
        table[level:] = (table[level:] - table[level - 1 : -1]) / (x[level:] - x[: x.size - level])
    return float(table[-1])


def indicator_divided_difference(z0: float, others: Sequence[float]) -> float:
    """Closed form for data 1 at z0 and 0 elsewhere: 1/prod(z0 - z_i)"""
    return 1.0 / math.prod(z0 - z for z in others)


def rigidity_1d_whitney(Z: PointSet, d: int, probe_grid: int) -> RigidityBound:
    """
    Infimum of |Delta_{d+1}| for data (1 at z0, 0 on a (d+1)-subset of Z),
    over subsets and probe points z0 in [-1, 1] away from Z.
    """
    if Z.n != 1:
        raise PreconditionError(f"divided-difference estimates need a point set on the line, got n={Z.n}")
    if len(Z) <= d:
        raise PreconditionError(f"need at least d+1 = {d + 1} points, got {len(Z)}")
    if probe_grid < 10:
        raise PreconditionError(f"probe grid needs at least 10 points, got {probe_grid}")
    zs = np.sort(Z.array[:, 0])
    probes = np.linspace(-1.0, 1.0, probe_grid)
    probes = probes[np.min(np.abs(probes[:, None] - zs[None, :]), axis=1) > 1e-12]
    if probes.size == 0:
        raise PreconditionError("every probe point coincides with Z")

    best, best_probe, best_subset = math.inf, math.nan, ()
    for subset in itertools.combinations(range(zs.size), d + 1):
        nodes = zs[list(subset)]
        magnitudes = 1.0 / np.prod(np.abs(probes[:, None] - nodes[None, :]), axis=1)
        k = int(np.argmin(magnitudes))
        if magnitudes[k] < best:
            best, best_probe, best_subset = float(magnitudes[k]), float(probes[k]), tuple(float(v) for v in nodes)
    logging.debug("whitney estimate %.6g at z0=%.4f subset=%s", best, best_probe, best_subset)
    return RigidityBound(
        degree=d,
        lower=best,
        source="divided_diff",
        estimate=True,
        inputs_digest=Provenance.of(
            points=zs.tolist(), d=d, probe_grid=probe_grid, argmin_probe=best_probe, argmin_subset=list(best_subset)
        ),
    )
