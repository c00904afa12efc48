"""Property tests over random rigid motions, scalings and mesh sizes."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cornerindex.cornermap import build_counterexample_pair, identity_map, lipschitz_after_scaling, validate_corner_map
from cornerindex.meshgen import triangulate
from cornerindex.polygeom import (
    euler_characteristic,
    gauss_bonnet_sums,
    interior_angles,
    named_domain,
    regular_polygon,
    PolygonalDomain,
)

angles = st.floats(-math.pi, math.pi, allow_nan=False)
shifts = st.tuples(st.floats(-5, 5), st.floats(-5, 5))
names = st.sampled_from(["A", "square", "P'", "Q'"])
SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@pytest.fixture(scope="module")
def cmap():
    return build_counterexample_pair()[2]


@SETTINGS
@given(names, angles, shifts)
def test_rigid_motion_invariance(name, rot, shift):
    dom = named_domain(name)
    moved = dom.transformed(rot, shift)
    assert euler_characteristic(moved) == euler_characteristic(dom)
    a = [c.interior_angle for c in interior_angles(dom)]
    b = [c.interior_angle for c in interior_angles(moved)]
    assert np.allclose(a, b, atol=1e-12, rtol=0)


@SETTINGS
@given(st.integers(3, 12), st.floats(0.2, 1.5), st.floats(0, 2 * math.pi), st.integers(0, 4))
def test_gauss_bonnet_polygons(n, r, phase, n_holes):
    holes = tuple(regular_polygon(3, 0.05, phase, ccw=False) + [-1.2 + 0.6 * k, -1.7] for k in range(n_holes))
    outer = np.vstack([regular_polygon(4, 2.0 * math.sqrt(2), math.pi / 4)])
    dom = PolygonalDomain(outer, holes + (regular_polygon(n, r, phase, ccw=False),))
    sums = gauss_bonnet_sums(dom)
    assert sums[0] == pytest.approx(2 * math.pi, abs=1e-12)
    assert np.allclose(sums[1:], -2 * math.pi, atol=1e-12)
    assert euler_characteristic(dom) == 1 - len(dom.holes)


@settings(max_examples=8, deadline=None)
@given(names, st.floats(0.12, 0.19), st.sampled_from([1.0, 2.0]))
def test_mesh_euler_characteristic(name, h, grading):
    dom = named_domain(name)
    m = triangulate(dom, h, grading)
    assert m.euler_characteristic == euler_characteristic(dom)
    assert np.all(m.signed_areas > 0)


@SETTINGS
@given(st.floats(0.01, 1e3))
def test_lipschitz_scales_as_inverse_r(cmap, r):
    a, r0 = lipschitz_after_scaling(cmap, r)
    b, _ = lipschitz_after_scaling(cmap, 2 * r)
    assert b == pytest.approx(a / 2, rel=1e-15)
    assert a == pytest.approx(r0 / r, rel=1e-15)


@SETTINGS
@given(angles, shifts)
def test_lipschitz_rigid_invariance(cmap, rot, shift):
    moved = cmap.transformed(rot, shift)
    assert lipschitz_after_scaling(moved, 1.0)[1] == pytest.approx(lipschitz_after_scaling(cmap, 1.0)[1], rel=1e-12)


@settings(max_examples=5, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(angles, shifts)
def test_moved_map_still_valid(cmap, rot, shift):
    rep = validate_corner_map(cmap.transformed(rot, shift), tol=1e-11)
    assert rep.boundary_to_boundary and rep.fold_pieces > 0 and rep.folds_on_labelled_edges
    assert rep.continuity_residual <= 1e-11


@settings(max_examples=10, deadline=None)
@given(st.floats(1.0, 100.0))
def test_identity_lipschitz(r):
    cmap = identity_map(named_domain("square"))
    assert lipschitz_after_scaling(cmap, 1.0)[1] == pytest.approx(1.0, abs=1e-14)
    assert lipschitz_after_scaling(cmap, r)[0] <= 1.0 + 1e-15
