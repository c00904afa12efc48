import math

import numpy as np
import pytest

from cornerindex.cornermap import (
    ConstructionError,
    CornerMap,
    build_counterexample_pair,
    identity_map,
    lipschitz_after_scaling,
    validate_corner_map,
)
from cornerindex.polygeom import PolygonalDomain, euler_characteristic, pentagon_loop, triangle_loop


@pytest.fixture(scope="module")
def pair():
    return build_counterexample_pair()


def test_default_pair(pair):
    P, Q, cmap = pair
    assert euler_characteristic(P) == euler_characteristic(Q) == -1
    rep = validate_corner_map(cmap)
    assert rep.valid
    assert rep.continuity_residual <= 1e-12
    assert rep.boundary_to_boundary and rep.image_in_target and rep.corners_to_strata
    assert rep.fold_pieces > 0 and rep.folds_on_labelled_edges


def _image_of(cmap, point):
    i = int(np.argmin(np.linalg.norm(cmap.vertices - point, axis=1)))
    assert np.linalg.norm(cmap.vertices[i] - point) < 1e-12
    return cmap.images[i]


def test_pentagon_vertex_images(pair):
    _, _, cmap = pair
    A, B, C, D, E = pentagon_loop()
    A2, B2, C2 = triangle_loop()
    for src, dst in ((A, A2), (B, B2), (C, C2), (D, A2), (E, A2)):
        assert np.allclose(_image_of(cmap, src), dst, atol=1e-12)


def test_edge_maps_are_affine(pair):
    _, _, cmap = pair
    A, B, C, D, E = pentagon_loop()
    A2, B2, C2 = triangle_loop()
    for (p, q), (p2, q2) in (((A, B), (A2, B2)), ((B, C), (B2, C2)), ((C, D), (C2, A2))):
        for t in (0.25, 0.5, 0.75):
            assert np.allclose(_image_of(cmap, p + t * (q - p)), p2 + t * (q2 - p2), atol=1e-12)


def test_fold_tips(pair):
    # DE and EA fold at their midpoints onto B' and C'
    _, _, cmap = pair
    A, B, C, D, E = pentagon_loop()
    _, B2, C2 = triangle_loop()
    assert np.allclose(_image_of(cmap, 0.5 * (D + E)), B2, atol=1e-12)
    assert np.allclose(_image_of(cmap, 0.5 * (E + A)), C2, atol=1e-12)


def test_identity_near_outer_boundary(pair):
    _, _, cmap = pair
    far = np.abs(cmap.vertices).max(axis=1) >= 2.0 - 1e-12
    assert far.any() and np.array_equal(cmap.vertices[far], cmap.images[far])


def test_lipschitz(pair):
    _, _, cmap = pair
    at1, r0 = lipschitz_after_scaling(cmap, 1.0)
    assert math.isfinite(r0) and r0 == at1
    assert lipschitz_after_scaling(cmap, r0)[0] == pytest.approx(1.0, abs=1e-12)
    assert lipschitz_after_scaling(cmap, 2 * r0)[0] == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        lipschitz_after_scaling(cmap, 0.0)


def test_identity_map(A):
    cmap = identity_map(A)
    rep = validate_corner_map(cmap)
    assert rep.valid and rep.fold_pieces == 0
    for r in (1.0, 2.0, 5.0):
        assert lipschitz_after_scaling(cmap, r)[0] == pytest.approx(1.0 / r, abs=1e-14)


def _fold_map():
    # [-1, 1] x [0, 1] -> [0, 1] x [0, 1] by (x, y) -> (|x|, y)
    src = PolygonalDomain(np.array([[-1, 0], [1, 0], [1, 1], [-1, 1]], dtype=float))
    tgt = PolygonalDomain(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    verts = np.array([[-1, 0], [0, 0], [1, 0], [-1, 1], [0, 1], [1, 1]], dtype=float)
    tris = np.array([[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4]])
    images = np.abs(verts)
    return CornerMap(src, tgt, verts, tris, images, labels={"fold_edges": [((-1, 0), (0, 0))],
                                                            "fold_sector": (math.pi / 2, math.pi)})


def test_fold_local_model():
    cmap = _fold_map()
    signs = cmap.orientation
    assert set(signs[:2]) == {-1} and set(signs[2:]) == {1}
    rep = validate_corner_map(cmap)
    assert rep.continuity_residual == 0.0 and rep.boundary_to_boundary
    assert rep.fold_pieces == 2 and rep.valid


def test_undeclared_folds_rejected():
    cmap = _fold_map()
    bare = CornerMap(cmap.source, cmap.target, cmap.vertices, cmap.triangles, cmap.images)
    assert not validate_corner_map(bare).folds_on_labelled_edges


def test_discontinuous_map_rejected(A):
    cmap = identity_map(A)
    bad = cmap.images.copy()
    inner = np.flatnonzero(np.abs(cmap.vertices).max(axis=1) < 1.9)
    bad[inner[0]] += 0.01
    broken = CornerMap(A, A, cmap.vertices, cmap.triangles, bad)
    # pieces share vertex images, so moving a vertex keeps continuity; tearing
    # the mesh at a vertex breaks coverage and the boundary checks instead
    tris = cmap.triangles.copy()
    victim = int(np.flatnonzero(np.any(tris == inner[0], axis=1))[0])
    verts = np.vstack([cmap.vertices, cmap.vertices[inner[0]]])
    imgs = np.vstack([cmap.images, cmap.images[inner[0]] + 0.01])
    tris[victim][tris[victim] == inner[0]] = len(verts) - 1
    split = CornerMap(A, A, verts, tris, imgs)
    assert validate_corner_map(broken).continuity_residual <= 1e-12
    assert not validate_corner_map(split).valid


def test_export(tmp_path, pair):
    _, _, cmap = pair
    cmap.export(tmp_path / "pieces.txt")
    lines = (tmp_path / "pieces.txt").read_text().splitlines()
    assert len(lines) == 1 + len(cmap.triangles)
    row = np.array(lines[1].split(), dtype=float)
    assert row.size == 12 and np.allclose(row[6:].reshape(2, 3), cmap.pieces[0], atol=0)


def test_infeasible_geometry():
    with pytest.raises(ConstructionError):
        build_counterexample_pair(pentagon_circumradius=1.3)
    with pytest.raises(ConstructionError):
        build_counterexample_pair(triangle_side=2.5)
