"""
Compact domains inside the unit ball and families of disjoint domains.

Shapes have closed-form volumes (ball, axis box, ellipse). Planar polygon
regions are accepted too; their area comes from the shoelace formula over
an approximating contour and is flagged as uncertified.
"""
from __future__ import annotations

import itertools
import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from norming.libs import constants
from norming.libs.emit import Document
from norming.libs.errors import PreconditionError
from norming.libs.poly import sphere_points, unit_ball_volume


class BallDomain(BaseModel):
    shape: Literal["ball"] = "ball"
    center: List[float]
    radius: float = Field(gt=0)

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def certified(self) -> bool:
        return True

    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.radius**self.n

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def max_norm(self) -> float:
        """Largest distance from the origin of any point of the domain"""
        return float(np.linalg.norm(self.center)) + self.radius

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - np.asarray(self.center), axis=1) <= self.radius

    def boundary_samples(self, count: int) -> np.ndarray:
        return np.asarray(self.center) + self.radius * sphere_points(self.n, count)


class BoxDomain(BaseModel):
    shape: Literal["box"] = "box"
    corner_lo: List[float]
    corner_hi: List[float]

    @model_validator(mode="after")
    def _check_corners(self) -> BoxDomain:
        if len(self.corner_lo) != len(self.corner_hi):
            raise ValueError("box corners must have the same dimension")
        if any(lo >= hi for lo, hi in zip(self.corner_lo, self.corner_hi)):
            raise ValueError("box must have corner_lo < corner_hi in every coordinate")
        return self

    @property
    def n(self) -> int:
        return len(self.corner_lo)

    @property
    def certified(self) -> bool:
        return True

    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in zip(self.corner_lo, self.corner_hi))

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.corner_lo, dtype=float), np.asarray(self.corner_hi, dtype=float)

    def max_norm(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))

    def contains(self, points: np.ndarray) -> np.ndarray:
        lo, hi = self.bounding_box()
        return np.all((points >= lo) & (points <= hi), axis=1)

    def boundary_samples(self, count: int) -> np.ndarray:
        """Regular grids on every facet, corners included"""
        lo, hi = self.bounding_box()
        if self.n == 1:
            return np.array([lo, hi])
        per_axis = max(2, int(round((count / (2 * self.n)) ** (1.0 / (self.n - 1)))))
        faces = []
        for axis in range(self.n):
            others = [np.linspace(lo[i], hi[i], per_axis) for i in range(self.n) if i != axis]
            mesh = np.stack(np.meshgrid(*others, indexing="ij"), axis=-1).reshape(-1, self.n - 1)
            for value in (lo[axis], hi[axis]):
                faces.append(np.insert(mesh, axis, value, axis=1))
        return np.unique(np.vstack(faces), axis=0)


class EllipseDomain(BaseModel):
    """Axis-aligned ellipsoid"""

    shape: Literal["ellipse"] = "ellipse"
    center: List[float]
    semiaxes: List[float]

    @model_validator(mode="after")
    def _check_axes(self) -> EllipseDomain:
        if len(self.center) != len(self.semiaxes):
            raise ValueError("ellipse center and semiaxes must have the same dimension")
        if any(a <= 0 for a in self.semiaxes):
            raise ValueError("ellipse semiaxes must be positive")
        return self

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def certified(self) -> bool:
        return True

    def volume(self) -> float:
        return unit_ball_volume(self.n) * math.prod(self.semiaxes)

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        c, a = np.asarray(self.center), np.asarray(self.semiaxes)
        return c - a, c + a

    def max_norm(self) -> float:
        return float(np.linalg.norm(self.center)) + max(self.semiaxes)

    def contains(self, points: np.ndarray) -> np.ndarray:
        scaled = (points - np.asarray(self.center)) / np.asarray(self.semiaxes)
        return np.sum(scaled**2, axis=1) <= 1.0

    def boundary_samples(self, count: int) -> np.ndarray:
        return np.asarray(self.center) + np.asarray(self.semiaxes) * sphere_points(self.n, count)


class RegionDomain(BaseModel):
    """
    Planar region bounded by a closed polygon (vertices in order, not repeated).
    """

    shape: Literal["region"] = "region"
    vertices: List[List[float]]
    certified: bool = False

    @model_validator(mode="after")
    def _check_polygon(self) -> RegionDomain:
        if len(self.vertices) < 3:
            raise ValueError("a region needs at least 3 vertices")
        if any(len(v) != 2 for v in self.vertices):
            raise ValueError("regions are planar: every vertex needs 2 coordinates")
        return self

    @property
    def n(self) -> int:
        return 2

    @property
    def polygon(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def volume(self) -> float:
        x, y = self.polygon.T
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.polygon.min(axis=0), self.polygon.max(axis=0)

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.polygon, axis=1)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Even-odd rule"""
        px, py = points[:, 0][:, None], points[:, 1][:, None]
        x0, y0 = self.polygon.T
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        straddles = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            crossing_x = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        hits = straddles & (px < crossing_x)
        return np.count_nonzero(hits, axis=1) % 2 == 1

    def boundary_samples(self, count: int) -> np.ndarray:
        # vertices come from polished contours and already sit on the boundary;
        # chord points between them would not
        return self.polygon.copy()


DomainSpec = Annotated[
    Union[BallDomain, BoxDomain, EllipseDomain, RegionDomain], Field(discriminator="shape")
]


def _ball_box_separated(center: np.ndarray, radius: float, lo: np.ndarray, hi: np.ndarray, margin: float) -> bool:
    nearest = np.clip(center, lo, hi)
    return float(np.linalg.norm(center - nearest)) > radius + margin


def _boxes_separated(a: Tuple[np.ndarray, np.ndarray], b: Tuple[np.ndarray, np.ndarray], margin: float) -> bool:
    return bool(np.any(a[1] < b[0] - margin) or np.any(b[1] < a[0] - margin))


def _ellipse_separated(e: EllipseDomain, other, margin: float) -> bool:
    """Rescale so that `e` becomes the unit ball, then compare with a bound of `other`"""
    c, a = np.asarray(e.center), np.asarray(e.semiaxes)
    scaled_margin = margin / float(np.max(a))
    if isinstance(other, BallDomain):
        center = (np.asarray(other.center) - c) / a
        radius = other.radius / float(np.min(a))
        return float(np.linalg.norm(center)) > 1.0 + radius + scaled_margin
    if isinstance(other, EllipseDomain):
        center = (np.asarray(other.center) - c) / a
        radius = float(np.max(np.asarray(other.semiaxes) / a))
        return float(np.linalg.norm(center)) > 1.0 + radius + scaled_margin
    lo, hi = other.bounding_box()
    return _ball_box_separated(np.zeros(e.n), 1.0, (lo - c) / a, (hi - c) / a, scaled_margin)


def separated(first, second, margin: float = constants.SEPARATION_MARGIN) -> bool:
    """
    Conservative disjointness test: True only when the two closed domains are
    at distance more than `margin`. Tangent or overlapping pairs give False.
    """
    if isinstance(first, RegionDomain) or isinstance(second, RegionDomain):
        return _boxes_separated(first.bounding_box(), second.bounding_box(), margin)
    if isinstance(first, EllipseDomain):
        return _ellipse_separated(first, second, margin)
    if isinstance(second, EllipseDomain):
        return _ellipse_separated(second, first, margin)
    if isinstance(first, BallDomain) and isinstance(second, BallDomain):
        gap = float(np.linalg.norm(np.asarray(first.center) - np.asarray(second.center)))
        return gap > first.radius + second.radius + margin
    if isinstance(first, BallDomain):
        return _ball_box_separated(np.asarray(first.center), first.radius, *second.bounding_box(), margin)
    if isinstance(second, BallDomain):
        return _ball_box_separated(np.asarray(second.center), second.radius, *first.bounding_box(), margin)
    return _boxes_separated(first.bounding_box(), second.bounding_box(), margin)


def required_domains(n: int, d: int) -> int:
    """j_d = (d-1)^n + 1, the number of domains the degree-d bound consumes"""
    if d < 1:
        raise PreconditionError(f"degree must be at least 1, got {d}")
    return (d - 1) ** n + 1


class DomainFamily(Document):
    """
    Pairwise disjoint compact domains in the closed unit ball.
    """

    n: int = Field(gt=0)
    domains: List[DomainSpec] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_family(self) -> DomainFamily:
        for i, dom in enumerate(self.domains):
            if dom.n != self.n:
                raise ValueError(f"domain {i} has dimension {dom.n}, family has {self.n}")
            if dom.max_norm() > 1.0 + constants.POINT_IN_BALL_SLACK:
                raise ValueError(f"domain {i} is not contained in the closed unit ball")
            if dom.volume() <= 0:
                raise ValueError(f"domain {i} has zero volume")
        for i, j in itertools.combinations(range(len(self.domains)), 2):
            if not separated(self.domains[i], self.domains[j]):
                raise ValueError(f"domains {i} and {j} are not certifiably disjoint")
        return self

    @property
    def size(self) -> int:
        return len(self.domains)

    @property
    def certified(self) -> bool:
        """False when some volume comes from an approximating contour"""
        return all(dom.certified for dom in self.domains)

    def raw_volumes(self) -> List[float]:
        """Lebesgue measures in the order given"""
        return [dom.volume() for dom in self.domains]

    def order(self) -> List[int]:
        """Domain indices by decreasing volume; ties keep input order"""
        volumes = self.raw_volumes()
        return sorted(range(self.size), key=lambda i: (-volumes[i], i))

    def sorted_volumes(self, normalized: bool = True) -> List[float]:
        """mu_1 >= ... >= mu_N, divided by the unit ball volume when `normalized`"""
        scale = unit_ball_volume(self.n) if normalized else 1.0
        volumes = self.raw_volumes()
        return [volumes[i] / scale for i in self.order()]

    def max_degree(self) -> int:
        """Largest d with (d-1)^n + 1 <= N"""
        d = 1
        while required_domains(self.n, d + 1) <= self.size:
            d += 1
        return d

    def leading(self, count: int) -> List[int]:
        """Indices of the `count` largest domains"""
        return self.order()[:count]


def interior_samples(domain, step: float) -> np.ndarray:
    """Grid points of spacing `step` inside `domain`"""
    lo, hi = domain.bounding_box()
    axes = [np.arange(a, b + 0.5 * step, step) for a, b in zip(lo, hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.n)
    inside = mesh[domain.contains(mesh)]
    if inside.shape[0] == 0:
        # thin domains: fall back to the bounding box center
        inside = ((lo + hi) / 2.0).reshape(1, -1)
    return inside


def family_of_balls(centers: List[List[float]], radii: List[float], n: Optional[int] = None) -> DomainFamily:
    """Convenience constructor for ball families"""
    dim = n or len(centers[0])
    return DomainFamily(n=dim, domains=[BallDomain(center=c, radius=r) for c, r in zip(centers, radii)])
