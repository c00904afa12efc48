import math

import numpy as np
import pytest

from cornerindex.polygeom import (
    GeometryError,
    PolygonalDomain,
    ValidationError,
    corner_turning_integrals,
    domain_edge_tags,
    euler_characteristic,
    gauss_bonnet_sums,
    interior_angles,
    named_domain,
    read_domain,
    write_domain,
)


@pytest.mark.parametrize("name, chi", [("A", 0), ("square", 1), ("P", 0), ("Q", 0), ("P'", -1), ("Q'", -1)])
def test_euler_characteristic(name, chi):
    assert euler_characteristic(named_domain(name)) == chi


def test_angles_of_A(A):
    angles = sorted(round(c.interior_angle / math.pi, 12) for c in interior_angles(A))
    assert angles == [0.5] * 4 + [1.5] * 4
    assert all(c.on_hole == (c.interior_angle > math.pi) for c in interior_angles(A))


def test_angles_of_square(square):
    assert np.allclose([c.interior_angle for c in interior_angles(square)], math.pi / 2)


def test_pentagon_hole_angles():
    hole = [c.interior_angle for c in interior_angles(named_domain("P")) if c.on_hole]
    assert len(hole) == 5
    assert np.allclose(hole, 7 * math.pi / 5)


@pytest.mark.parametrize("name", ["A", "square", "P'", "Q'"])
def test_gauss_bonnet(name):
    dom = named_domain(name)
    sums = gauss_bonnet_sums(dom)
    assert sums[0] == pytest.approx(2 * math.pi, abs=1e-12)
    assert np.allclose(sums[1:], -2 * math.pi, atol=1e-12)


def test_self_intersection_names_edges():
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    with pytest.raises(ValidationError, match="edges"):
        PolygonalDomain(bowtie)


def test_orientation_and_collinear_checks():
    cw = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float)
    with pytest.raises(ValidationError):
        PolygonalDomain(cw)
    collinear = np.array([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    with pytest.raises(ValidationError):
        PolygonalDomain(collinear)


def test_hole_outside_rejected():
    outer = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    hole = np.array([[2, 2], [2, 3], [3, 3], [3, 2]], dtype=float)
    with pytest.raises(ValidationError):
        PolygonalDomain(outer, (hole,))


def test_domain_edge_tags(A, square):
    assert domain_edge_tags(A) == {"vertical": 4, "horizontal": 4, "oblique": 0}
    assert domain_edge_tags(square) == {"vertical": 2, "horizontal": 2, "oblique": 0}
    tags = domain_edge_tags(named_domain("P'"))
    # pentagon and notch each have a horizontal bottom edge
    assert tags == {"vertical": 2, "horizontal": 2 + 1 + 1, "oblique": 4 + 2}


def test_domain_file_roundtrip(tmp_path, A):
    path = tmp_path / "A.txt"
    write_domain(A, path)
    back = read_domain(path)
    assert np.array_equal(back.outer, A.outer)
    assert all(np.array_equal(a, b) for a, b in zip(back.holes, A.holes))
    assert named_domain(str(path)).area == A.area


@pytest.mark.parametrize("theta, signed, absolute, holds", [
    (math.pi / 2, math.pi / 2, math.pi / 2, True),
    (math.pi, 0.0, 0.0, True),
    (3 * math.pi / 2, -math.pi / 2, math.pi / 2, False),
])
def test_turning_examples(theta, signed, absolute, holds):
    rep = corner_turning_integrals(theta, 0.1, quad_points=10_000)
    assert abs(rep.signed_turning - signed) <= 1e-8
    assert abs(rep.absolute_turning - absolute) <= 1e-8
    assert rep.inequality_holds is holds


def test_turning_geometry_errors():
    with pytest.raises(GeometryError):
        corner_turning_integrals(2 * math.pi, 0.1)
    with pytest.raises(GeometryError):
        corner_turning_integrals(math.pi / 2, 0.6)
