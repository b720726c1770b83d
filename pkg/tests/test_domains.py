import math

import numpy as np
import pytest
from pydantic import ValidationError

from norming.libs.errors import PreconditionError
from norming.theory.domains import (
    BallDomain,
    BoxDomain,
    DomainFamily,
    EllipseDomain,
    RegionDomain,
    family_of_balls,
    interior_samples,
    required_domains,
    separated,
)

SQUARE = [[0.1, 0.1], [0.3, 0.1], [0.3, 0.3], [0.1, 0.3]]


def test_required_domains():
    """j_d = (d-1)^n + 1"""
    assert required_domains(2, 2) == 2
    assert required_domains(2, 3) == 5
    assert required_domains(3, 1) == 1
    with pytest.raises(PreconditionError):
        required_domains(2, 0)


def test_volumes():
    """Closed-form volumes of the built-in shapes"""
    assert BallDomain(center=[0.0, 0.0], radius=0.5).volume() == pytest.approx(math.pi / 4)
    assert BoxDomain(corner_lo=[0.0, 0.0], corner_hi=[0.5, 0.2]).volume() == pytest.approx(0.1)
    assert EllipseDomain(center=[0.0, 0.0], semiaxes=[0.5, 0.1]).volume() == pytest.approx(math.pi * 0.05)
    assert RegionDomain(vertices=SQUARE).volume() == pytest.approx(0.04)


def test_region_contains():
    """Even-odd rule on a square"""
    region = RegionDomain(vertices=SQUARE)
    inside = region.contains(np.array([[0.2, 0.2], [0.0, 0.2], [0.35, 0.2]]))
    assert inside.tolist() == [True, False, False]
    assert not region.certified


def test_separation():
    """Tangent or overlapping domains are not separated"""
    left = BallDomain(center=[-0.5, 0.0], radius=0.2)
    assert separated(left, BallDomain(center=[0.5, 0.0], radius=0.2))
    assert not separated(left, BallDomain(center=[-0.1, 0.0], radius=0.2))
    ellipse = EllipseDomain(center=[0.0, 0.0], semiaxes=[0.5, 0.1])
    assert separated(ellipse, BoxDomain(corner_lo=[-0.25, 0.15], corner_hi=[0.25, 0.2]))
    assert not separated(ellipse, BoxDomain(corner_lo=[-0.25, 0.05], corner_hi=[0.25, 0.2]))


def test_family_rejects_overlap():
    """Overlapping members fail validation"""
    with pytest.raises(ValidationError):
        family_of_balls([[0.0, 0.0], [0.1, 0.0]], [0.2, 0.2])


def test_family_rejects_outside_ball():
    """Members must lie in the closed unit ball"""
    with pytest.raises(ValidationError):
        family_of_balls([[0.9, 0.0]], [0.2])


def test_family_order():
    """Domains are ranked by decreasing volume, ties keep input order"""
    F = family_of_balls([[-0.6, 0.0], [0.0, 0.0], [0.6, 0.0]], [0.1, 0.3, 0.1])
    assert F.order() == [1, 0, 2]
    assert F.sorted_volumes() == pytest.approx([0.09, 0.01, 0.01])
    assert F.sorted_volumes(normalized=False)[0] == pytest.approx(math.pi * 0.09)
    assert F.max_degree() == 2
    assert F.leading(2) == [1, 0]
    assert F.certified


def test_family_json_round_trip():
    """Families parse back from their JSON form, shapes included"""
    F = DomainFamily(
        n=2,
        domains=[
            EllipseDomain(center=[0.0, 0.0], semiaxes=[0.5, 0.1]),
            BoxDomain(corner_lo=[-0.25, 0.15], corner_hi=[0.25, 0.2]),
        ],
    )
    text = F.to_json()
    assert '"schema": "remez-rigidity/1"' in text
    again = DomainFamily.model_validate_json(text)
    assert again.to_json() == text
    assert isinstance(again.domains[1], BoxDomain)


def test_interior_samples():
    """Interior grid points of a ball lie inside it"""
    ball = BallDomain(center=[0.2, 0.2], radius=0.1)
    points = interior_samples(ball, 0.01)
    assert len(points) > 200
    assert np.all(ball.contains(points))
