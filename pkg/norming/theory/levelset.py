"""
Zero sets of planar fields and the isotopy check between the zero set of a
smooth field f and the zero set of its Taylor polynomial P.

The check follows a normal-bundle construction: every point y of {f = 0}
is flowed along v = grad f / |grad f|^2 (so that f changes at unit speed)
through [-eta, eta]; along the way P must change at speed in [1/2, 3/2] and
vanish exactly once. The zero positions then carry {f = 0} onto components
of {P = 0}.
"""
from __future__ import annotations

import logging
import math
from functools import cached_property
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from norming.libs import config, constants
from norming.libs.emit import Document
from norming.libs.errors import FlowExitError, PreconditionError
from norming.libs.poly import (
    MultiPoly,
    coefficient_derivative_bound,
    default_grid_step,
    evaluate_many,
    markov_derivative_bound,
    sup_norm_ball,
)
from norming.theory.fields import FieldSpec, PolynomialField, ScalarField, build_field, derive_jet

POLISH_ITERATIONS = 4
FLOW_STEPS = 50
MAX_BISECTIONS = 80
FLOW_TOLERANCE = 1e-6
REMAINDER_SPOT_CHECKS = 1000

EdgeKey = Tuple[int, int, int]


class JetModel(Document):
    """
    Degree-d Taylor data of a planar field f at the origin, with a bound on
    M_{d+1}(f). The field is assumed not to vanish outside the ball of radius 1/2.
    """

    n: Literal[2] = 2
    d: int = Field(ge=0)
    taylor: MultiPoly
    remainder_bound: float = Field(ge=0.0)
    field: FieldSpec = FieldSpec()
    support_radius: float = 0.5

    @model_validator(mode="after")
    def _check_taylor(self) -> JetModel:
        if self.taylor.n != 2:
            raise ValueError("jet models are planar")
        if self.taylor.d > self.d:
            raise ValueError(f"Taylor polynomial has degree bound {self.taylor.d} > d = {self.d}")
        return self

    @classmethod
    def from_field(cls, spec: FieldSpec, d: int) -> JetModel:
        """Taylor part and remainder bound derived from a registry field"""
        taylor, remainder = derive_jet(spec, d)
        return cls(d=d, taylor=taylor, remainder_bound=remainder, field=spec)

    @cached_property
    def evaluator(self) -> ScalarField:
        return build_field(self.field, self.taylor)

    @property
    def polynomial(self) -> MultiPoly:
        return self.taylor.lift(self.d)

    def validate_remainder(self, rng: np.random.Generator, samples: int = REMAINDER_SPOT_CHECKS) -> float:
        """Spot-check |f - P| <= M_{d+1}/(d+1)! on random ball points; returns the largest gap"""
        radius = np.sqrt(rng.uniform(0.0, 1.0, samples))
        angle = rng.uniform(0.0, 2.0 * np.pi, samples)
        points = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
        gap = np.abs(self.evaluator.value(points) - evaluate_many(self.taylor, points))
        allowed = self.remainder_bound / math.factorial(self.d + 1)
        worst = float(gap.max())
        if worst > allowed + 1e-12 * (1.0 + allowed):
            raise PreconditionError(
                f"model is inconsistent: |f - P| reaches {worst:.3e} > M_(d+1)/(d+1)! = {allowed:.3e}"
            )
        return worst


class Component(BaseModel):
    vertices: List[List[float]]
    closed: bool

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float).reshape(-1, 2)

    def spacing(self) -> np.ndarray:
        """Lengths of consecutive edges (cyclic when closed)"""
        pts = self.array
        nxt = np.roll(pts, -1, axis=0) if self.closed else pts[1:]
        return np.linalg.norm(nxt - pts[: len(nxt)], axis=1)


class LevelCurve(BaseModel):
    components: List[Component]
    cell_size: float

    @property
    def vertices(self) -> np.ndarray:
        if not self.components:
            return np.zeros((0, 2))
        return np.vstack([c.array for c in self.components])

    @property
    def labels(self) -> np.ndarray:
        """Component index of every row of `vertices`"""
        return np.concatenate([np.full(len(c.vertices), i) for i, c in enumerate(self.components)]).astype(int)

    @property
    def closed_components(self) -> List[int]:
        return [i for i, c in enumerate(self.components) if c.closed]


class Thresholds(BaseModel):
    gamma: float
    markov_c2: float
    C3: float
    delta: float
    eta: float
    T: float


class TrajectoryRecord(BaseModel):
    vertex: int
    component: int
    status: Literal["ok", "exit", "band", "no_zero", "multiple_zeros", "flow_residual"]
    t_zero: Optional[float] = None
    dpdt_min: float
    dpdt_max: float
    sign_changes: int
    f_residual: float


class IsotopyVerdict(Document):
    status: Literal["Verified", "Failed", "Inconclusive"]
    reason: Optional[str] = None
    pairing: List[Tuple[int, int]] = []
    gamma: Optional[float] = None
    constants: Optional[Thresholds] = None
    remainder_bound: float
    cell_size: float
    components_f: int = 0
    components_p: int = 0
    t_max_abs: Optional[float] = None
    f_residual_max: Optional[float] = None
    continuity_ok: Optional[bool] = None
    diagnostics: List[TrajectoryRecord] = []
    curve_f: Optional[LevelCurve] = Field(default=None, exclude=True)
    curve_p: Optional[LevelCurve] = Field(default=None, exclude=True)


def _interpolate(values: np.ndarray, axis: np.ndarray, key: EdgeKey, h: float) -> Tuple[float, float]:
    direction, i, j = key
    v0 = values[i, j]
    v1 = values[i + 1, j] if direction == 0 else values[i, j + 1]
    t = v0 / (v0 - v1)
    if direction == 0:
        return axis[i] + t * h, axis[j]
    return axis[i], axis[j] + t * h


def _cell_segments(
    pos: np.ndarray, i: int, j: int, center_positive: Optional[bool]
) -> List[Tuple[EdgeKey, EdgeKey]]:
    corners = (pos[i, j], pos[i + 1, j], pos[i + 1, j + 1], pos[i, j + 1])
    edges = ((0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j))
    crossed = [edges[k] for k in range(4) if corners[k] != corners[(k + 1) % 4]]
    if len(crossed) == 2:
        return [(crossed[0], crossed[1])]
    # saddle cell: the corner pair sharing the center's sign stays connected
    if center_positive == corners[0]:
        return [(edges[0], edges[1]), (edges[2], edges[3])]
    return [(edges[3], edges[0]), (edges[1], edges[2])]


def _walk(start: int, adjacency: List[List[int]]) -> List[int]:
    path, seen = [start], {start}
    previous, current = -1, start
    while True:
        options = sorted(k for k in adjacency[current] if k != previous)
        if not options or options[0] in seen:
            return path
        previous, current = current, options[0]
        path.append(current)
        seen.add(current)


def polish(field: ScalarField, points: np.ndarray, max_move: float) -> np.ndarray:
    """Newton projection onto {g = 0}; each step is clamped to `max_move`"""
    pts = np.array(points, dtype=float, copy=True)
    for _ in range(POLISH_ITERATIONS):
        g = field.value(pts)
        G = field.gradient(pts)
        norm2 = np.sum(G**2, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(norm2[:, None] > 0, (g / norm2)[:, None] * G, 0.0)
        length = np.linalg.norm(step, axis=1)
        too_long = length > max_move
        step[too_long] *= (max_move / length[too_long])[:, None]
        pts -= step
    return pts


def extract_zero_set(field: ScalarField, cell_size: Optional[float] = None, radius: float = 1.0) -> LevelCurve:
    """
    Marching squares at level 0 on the disc of `radius`. Ambiguous saddle
    cells are resolved by the sign of the field at the cell center.
    """
    h = cell_size or config.get().cell_size
    if not 0.0 < h <= 0.05:
        raise PreconditionError(f"cell size must lie in (0, 0.05], got {h}")
    k = int(math.ceil(radius / h - 1e-9))
    axis = h * np.arange(-k, k + 1)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    values = field.value(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    values[X**2 + Y**2 > radius**2] = np.nan

    pos = values >= 0.0
    valid = np.isfinite(values)
    cell_valid = valid[:-1, :-1] & valid[1:, :-1] & valid[1:, 1:] & valid[:-1, 1:]
    code = pos[:-1, :-1] * 1 + pos[1:, :-1] * 2 + pos[1:, 1:] * 4 + pos[:-1, 1:] * 8
    active = np.argwhere(cell_valid & (code != 0) & (code != 15))

    saddles = [(i, j) for i, j in active if code[i, j] in (5, 10)]
    centers: Dict[Tuple[int, int], bool] = {}
    if saddles:
        mids = np.array([[axis[i] + h / 2, axis[j] + h / 2] for i, j in saddles])
        centers = dict(zip(saddles, (field.value(mids) >= 0.0).tolist()))

    segments: List[Tuple[EdgeKey, EdgeKey]] = []
    for i, j in active:
        segments.extend(_cell_segments(pos, int(i), int(j), centers.get((i, j))))
    if not segments:
        return LevelCurve(components=[], cell_size=h)

    keys = sorted({key for seg in segments for key in seg})
    index = {key: n for n, key in enumerate(keys)}
    adjacency: List[List[int]] = [[] for _ in keys]
    rows, cols = [], []
    for a, b in segments:
        adjacency[index[a]].append(index[b])
        adjacency[index[b]].append(index[a])
        rows.append(index[a])
        cols.append(index[b])
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(keys), len(keys)))
    count, labels = connected_components(graph, directed=False)

    points = np.array([_interpolate(values, axis, key, h) for key in keys])
    points = polish(field, points, max_move=h)

    components = []
    for label in range(count):
        members = np.flatnonzero(labels == label)
        ends = [int(m) for m in members if len(adjacency[m]) == 1]
        start = min(ends) if ends else int(members.min())
        path = _walk(start, adjacency)
        components.append(Component(vertices=points[path].tolist(), closed=not ends))
    components.sort(key=lambda c: tuple(np.round(c.array.min(axis=0), 12)))
    logging.debug("extracted %d zero-set components at cell size %g", len(components), h)
    return LevelCurve(components=components, cell_size=h)


def _second_derivative_bound(model: JetModel) -> float:
    """Bound on M_2(f): Markov or coefficient bound of P plus the remainder share"""
    P, d = model.taylor, model.d
    if d < 1:
        raise PreconditionError("regularity estimates need d >= 1")
    taylor_part = 0.0
    if P.d >= 2:
        enclosure = sup_norm_ball(P, default_grid_step(2, P.d, config.get().grid_step_fraction))
        taylor_part = min(
            markov_derivative_bound(2, P.d, 2) * enclosure.certified_max,
            coefficient_derivative_bound(P, 2),
        )
    return taylor_part + model.remainder_bound / math.factorial(d - 1)


def estimate_gamma(model: JetModel, curve: LevelCurve) -> float:
    """
    Under-estimate of min |grad f| over {f = 0}: the smallest gradient norm on
    the polished vertices minus M_2 times half the largest vertex spacing.
    """
    if not curve.components:
        raise PreconditionError("cannot estimate regularity of an empty zero set")
    vertices = curve.vertices
    smallest = float(np.min(np.linalg.norm(model.evaluator.gradient(vertices), axis=1)))
    spacing = max(float(c.spacing().max()) if len(c.vertices) > 1 else curve.cell_size for c in curve.components)
    gamma = smallest - _second_derivative_bound(model) * spacing / 2.0
    if gamma <= 0.0:
        raise PreconditionError(
            f"cannot certify regularity at this resolution (min |grad f| = {smallest:.3e}, gamma estimate {gamma:.3e})"
        )
    return gamma


def thresholds(model: JetModel, gamma: float) -> Thresholds:
    """
    C3 = C2 + C2/(d+1)! + 1/(d-1)!, delta = gamma/(3 C3),
    eta = delta gamma / 2 and T = min(1, d! gamma^2 / (4 C3)).
    """
    d = model.d
    if d < 2:
        raise PreconditionError(f"thresholds need d >= 2, got {d}")
    if not 0.0 < gamma < 1.0:
        raise PreconditionError(f"gamma must lie in (0, 1), got {gamma}")
    c2 = markov_derivative_bound(model.n, d, 2)
    C3 = c2 + c2 / math.factorial(d + 1) + 1.0 / math.factorial(d - 1)
    delta = gamma / (3.0 * C3)
    return Thresholds(
        gamma=gamma,
        markov_c2=c2,
        C3=C3,
        delta=delta,
        eta=delta * gamma / 2.0,
        T=min(1.0, math.factorial(d) * gamma**2 / (4.0 * C3)),
    )


def _velocity(field: ScalarField, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    G = field.gradient(X)
    norm2 = np.sum(G**2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        V = G / norm2[:, None]
    return V, np.sqrt(norm2)


def _rk4(field: ScalarField, X: np.ndarray, h, floor: float) -> Tuple[np.ndarray, np.ndarray]:
    """One RK4 step of dx/dt = grad f/|grad f|^2 per row; `h` may vary per row"""
    h = np.broadcast_to(np.asarray(h, dtype=float), (X.shape[0],))[:, None]
    k1, g1 = _velocity(field, X)
    k2, g2 = _velocity(field, X + 0.5 * h * k1)
    k3, g3 = _velocity(field, X + 0.5 * h * k2)
    k4, g4 = _velocity(field, X + h * k3)
    ok = np.minimum.reduce([g1, g2, g3, g4]) >= floor
    return X + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), ok


def flow_map(model: JetModel, y, t_target: float, step: Optional[float] = None, floor: float = 0.0) -> np.ndarray:
    """
    Psi(y, t): flow from y for time t, so that f(Psi(y, t)) = f(y) + t.
    Raises FlowExitError when |grad f| drops below `floor` on the way.
    """
    X = np.asarray(y, dtype=float).reshape(1, 2)
    if t_target == 0.0:
        return X[0].copy()
    size = step or abs(t_target) / FLOW_STEPS
    count = max(1, int(math.ceil(abs(t_target) / size - 1e-9)))
    h = t_target / count
    for _ in range(count):
        X, ok = _rk4(model.evaluator, X, h, floor)
        if not ok[0]:
            raise FlowExitError(float(np.linalg.norm(model.evaluator.gradient(X))), floor)
    return X[0]


def _trace(model: JetModel, Y: np.ndarray, thr: Thresholds) -> Tuple[List[dict], np.ndarray]:
    """Trajectories through [-eta, eta] from every row of Y, data-parallel"""
    field, P = model.evaluator, model.taylor
    K = FLOW_STEPS
    h = thr.eta / K
    floor = thr.gamma / 2.0
    m = Y.shape[0]

    path = np.empty((2 * K + 1, m, 2))
    path[K] = Y
    inside = np.ones(m, dtype=bool)
    forward = backward = Y
    for k in range(1, K + 1):
        forward, ok_f = _rk4(field, forward, h, floor)
        backward, ok_b = _rk4(field, backward, -h, floor)
        inside &= ok_f & ok_b
        path[K + k], path[K - k] = forward, backward

    times = h * np.arange(-K, K + 1)
    flat = path.reshape(-1, 2)
    p_vals = evaluate_many(P, flat).reshape(2 * K + 1, m)
    f_vals = field.value(flat).reshape(2 * K + 1, m)
    residual = np.max(np.abs(f_vals - f_vals[K][None, :] - times[:, None]), axis=0)
    dpdt = np.diff(p_vals, axis=0) / h
    band = np.all(np.abs(dpdt - 1.0) <= 0.5, axis=0)
    crossing = ((p_vals[:-1] <= 0) & (p_vals[1:] > 0)) | ((p_vals[:-1] >= 0) & (p_vals[1:] < 0))
    changes = crossing.sum(axis=0)

    status = np.full(m, "ok", dtype=object)
    status[changes > 1] = "multiple_zeros"
    status[changes == 0] = "no_zero"
    status[~band] = "band"
    status[residual > FLOW_TOLERANCE + constants.POLISH_RESIDUAL] = "flow_residual"
    status[~inside] = "exit"

    images = np.full((m, 2), np.nan)
    t_zero = np.full(m, np.nan)
    good = np.flatnonzero(status == "ok")
    if good.size:
        first = np.argmax(crossing[:, good], axis=0)
        lo, hi = times[first], times[first + 1]
        anchor = path[first, good]
        p_lo = p_vals[first, good]
        for _ in range(MAX_BISECTIONS):
            if np.max(hi - lo) <= constants.BISECTION_TOLERANCE:
                break
            mid = 0.5 * (lo + hi)
            moved, _ = _rk4(field, anchor, mid - lo, 0.0)
            p_mid = evaluate_many(P, moved)
            same = p_mid * p_lo > 0
            lo, anchor, p_lo = np.where(same, mid, lo), np.where(same[:, None], moved, anchor), np.where(same, p_mid, p_lo)
            hi = np.where(same, hi, mid)
        t_zero[good] = 0.5 * (lo + hi)
        images[good], _ = _rk4(field, anchor, t_zero[good] - lo, 0.0)

    records = [
        dict(
            status=str(status[i]),
            t_zero=None if np.isnan(t_zero[i]) else float(t_zero[i]),
            dpdt_min=float(dpdt[:, i].min()),
            dpdt_max=float(dpdt[:, i].max()),
            sign_changes=int(changes[i]),
            f_residual=float(residual[i]),
        )
        for i in range(m)
    ]
    return records, images


def zero_on_trajectory(model: JetModel, y, thr: Thresholds) -> TrajectoryRecord:
    """The level t(y) in [-eta, eta] where P vanishes along the flow line through y"""
    records, _ = _trace(model, np.asarray(y, dtype=float).reshape(1, 2), thr)
    return TrajectoryRecord(vertex=0, component=0, **records[0])


def _inconclusive(model: JetModel, h: float, reason: str, **extra) -> IsotopyVerdict:
    logging.info("Isotopy check inconclusive: %s", reason)
    return IsotopyVerdict(
        status="Inconclusive", reason=reason, remainder_bound=model.remainder_bound, cell_size=h, **extra
    )


def isotopy_check(
    model: JetModel, cell_size: Optional[float] = None, rng: Optional[np.random.Generator] = None
) -> IsotopyVerdict:
    """
    Verified when every component of {f = 0} is carried by the normal-bundle
    flow onto a distinct component of {P = 0} with all trajectory checks passing.
    """
    h = cell_size or config.get().cell_size
    model.validate_remainder(rng or np.random.default_rng(config.get().seed))

    curve_f = extract_zero_set(model.evaluator, h)
    if not curve_f.components:
        return _inconclusive(model, h, "zero set of f is empty at this resolution")
    extra = dict(curve_f=curve_f, components_f=len(curve_f.components))
    if len(curve_f.closed_components) != len(curve_f.components):
        return _inconclusive(model, h, "zero set of f reaches the boundary of the ball", **extra)
    try:
        gamma = estimate_gamma(model, curve_f)
    except PreconditionError as exc:
        return _inconclusive(model, h, str(exc), **extra)
    if gamma >= 1.0:
        gamma = math.nextafter(1.0, 0.0)
    try:
        thr = thresholds(model, gamma)
    except PreconditionError as exc:
        return _inconclusive(model, h, str(exc), gamma=gamma, **extra)
    extra.update(gamma=gamma, constants=thr)
    if model.remainder_bound > thr.T:
        return _inconclusive(
            model,
            h,
            f"threshold exceeded: M_(d+1) = {model.remainder_bound:.3e} > T = {thr.T:.3e}; "
            "non-isotopy cannot be concluded either",
            **extra,
        )

    Y = curve_f.vertices
    owners = curve_f.labels
    raw, images = _trace(model, Y, thr)
    records = [TrajectoryRecord(vertex=i, component=int(owners[i]), **r) for i, r in enumerate(raw)]
    extra["diagnostics"] = records
    ok = np.array([r.status == "ok" for r in records])
    if not ok.all():
        statuses = sorted({r.status for r in records if r.status != "ok"})
        reason = f"{int((~ok).sum())} trajectories failed ({', '.join(statuses)})"
        if "exit" in statuses or "flow_residual" in statuses:
            return _inconclusive(model, h, reason, **extra)
        return IsotopyVerdict(status="Failed", reason=reason, remainder_bound=model.remainder_bound, cell_size=h, **extra)

    t = np.array([r.t_zero for r in records])
    extra["t_max_abs"] = float(np.max(np.abs(t)))
    extra["f_residual_max"] = float(max(r.f_residual for r in records))
    extra["continuity_ok"] = _continuity(model, curve_f, t)

    curve_p = extract_zero_set(PolynomialField(model.taylor), h)
    extra.update(curve_p=curve_p, components_p=len(curve_p.components))
    if not curve_p.components:
        return IsotopyVerdict(
            status="Failed", reason="zero set of P is empty", remainder_bound=model.remainder_bound, cell_size=h, **extra
        )
    distance, nearest = cKDTree(curve_p.vertices).query(images)
    targets = curve_p.labels[nearest]
    if np.max(distance) > 2.0 * h:
        return IsotopyVerdict(
            status="Failed",
            reason=f"flow images miss the zero set of P by up to {np.max(distance):.3e}",
            remainder_bound=model.remainder_bound,
            cell_size=h,
            **extra,
        )
    pairing = []
    for component in range(len(curve_f.components)):
        hit = np.unique(targets[owners == component])
        if hit.size != 1:
            return IsotopyVerdict(
                status="Failed",
                reason=f"component {component} of f maps onto {hit.size} components of P",
                remainder_bound=model.remainder_bound,
                cell_size=h,
                **extra,
            )
        pairing.append((component, int(hit[0])))
    if len({j for _, j in pairing}) != len(pairing):
        return IsotopyVerdict(
            status="Failed",
            reason="two components of f map onto the same component of P",
            pairing=pairing,
            remainder_bound=model.remainder_bound,
            cell_size=h,
            **extra,
        )
    return IsotopyVerdict(status="Verified", pairing=pairing, remainder_bound=model.remainder_bound, cell_size=h, **extra)


def _continuity(model: JetModel, curve: LevelCurve, t: np.ndarray) -> bool:
    """|t(y_i) - t(y_(i+1))| <= 5 * M_1(f)(y_i) * spacing along every polyline"""
    start = 0
    for component in curve.components:
        count = len(component.vertices)
        values = t[start : start + count]
        start += count
        if count < 2:
            continue
        m1 = np.sum(np.abs(model.evaluator.gradient(component.array)), axis=1)
        spacing = component.spacing()
        jumps = np.abs(np.roll(values, -1) - values)[: spacing.size]
        if np.any(jumps > 5.0 * m1[: spacing.size] * spacing + constants.BISECTION_TOLERANCE):
            return False
    return True
