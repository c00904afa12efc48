import numpy as np
import pytest

from cornerindex.meshgen import (
    OverlapError,
    RefinementError,
    boundary_tag_counts,
    read_off,
    tag_boundary,
    triangulate,
    vertex_disk,
    write_off,
    write_sidecar,
)
from cornerindex.polygeom import euler_characteristic, named_domain


def test_structured_unit_square(mesh_square):
    m = mesh_square
    assert (m.n_vertices, m.n_edges, m.n_triangles) == (9, 16, 8)
    assert m.euler_characteristic == 1
    assert boundary_tag_counts(m) == {"vertical": 4, "horizontal": 4, "oblique": 0}


@pytest.mark.parametrize("name, hs", [("A", (0.4, 0.2)), ("P'", (0.19, 0.15)), ("Q'", (0.19,))])
def test_euler_characteristic_of_meshes(name, hs):
    dom = named_domain(name)
    for h in hs:
        for grading in (1.0, 2.0):
            m = triangulate(dom, h, grading)
            assert m.euler_characteristic == euler_characteristic(dom)
            assert np.all(m.signed_areas > 0)
            assert m.area == pytest.approx(dom.area, rel=1e-12)


def test_corners_are_vertices(mesh_A, A):
    assert np.count_nonzero(mesh_A.corner_flags >= 0) == len(A.corners())


def test_boundary_tags_of_A(mesh_A, A):
    counts = boundary_tag_counts(mesh_A)
    assert counts["oblique"] == 0 and counts["vertical"] > 0 and counts["horizontal"] > 0
    V = mesh_A.vertices
    for e, tag in zip(mesh_A.boundary_edges, mesh_A.boundary_tags):
        p, q = V[mesh_A.edges[e]]
        if tag == "vertical":
            assert p[0] == q[0] and abs(p[0]) in (1.0, 2.0)
            assert abs(p[1]) <= (2.0 if abs(p[0]) == 2.0 else 1.0)
        else:
            assert p[1] == q[1] and abs(p[1]) in (1.0, 2.0)
            assert abs(p[0]) <= (2.0 if abs(p[1]) == 2.0 else 1.0)


def test_oblique_tags_on_P():
    dom = named_domain("P'")
    m = triangulate(dom, 0.19, 1.0)
    assert boundary_tag_counts(m)["oblique"] > 0
    assert tag_boundary(m, dom).boundary_tags == m.boundary_tags


@pytest.mark.parametrize("h", [0.4, 0.2, 0.1])
def test_refinement_quadruples_triangles(A, h):
    coarse = triangulate(A, h)
    fine = triangulate(A, h / 2)
    assert fine.n_triangles >= 4 * coarse.n_triangles
    assert fine.euler_characteristic == coarse.euler_characteristic
    assert boundary_tag_counts(fine)["oblique"] == boundary_tag_counts(coarse)["oblique"] == 0


def test_structured_refinement_quadruples(square):
    a = triangulate(square, 0.5, structured=True)
    b = triangulate(square, 0.25, structured=True)
    assert b.n_triangles == 4 * a.n_triangles


def test_grading_refines_near_corners(A):
    m = triangulate(A, 0.2, 2.0)
    V = m.vertices
    E = m.edges
    lengths = np.linalg.norm(V[E[:, 1]] - V[E[:, 0]], axis=1)
    mid = 0.5 * (V[E[:, 0]] + V[E[:, 1]])
    near = np.linalg.norm(mid - [1.0, 1.0], axis=1) < 0.05
    assert lengths[near].max() < 0.5 * lengths.max()


def test_deterministic(A):
    a = triangulate(A, 0.2)
    b = triangulate(A, 0.2)
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)


def test_refinement_errors(A):
    with pytest.raises(RefinementError):
        triangulate(A, 2.5)
    with pytest.raises(RefinementError):
        triangulate(A, -0.1)


def test_vertex_disk_zero_radius(mesh_A):
    d = vertex_disk(mesh_A, (1.0, 1.0), 0.0)
    assert d.vertices.size == d.edges.size == d.triangles.size == 0


def test_vertex_disk_incident_simplices(mesh_square):
    m = mesh_square
    c = int(np.flatnonzero(np.all(m.vertices == 0.0, axis=1))[0])
    d = vertex_disk(m, (0.0, 0.0), 0.25)
    assert d.vertices.tolist() == [c]
    assert set(d.edges) == set(np.flatnonzero(np.any(m.edges == c, axis=1)))
    assert set(d.triangles) == set(np.flatnonzero(np.any(m.triangles == c, axis=1)))


def test_vertex_disk_monotone_in_rho(mesh_A):
    prev = None
    for rho in (0.0, 0.05, 0.1, 0.2, 0.4):
        d = vertex_disk(mesh_A, (1.0, 1.0), rho)
        cur = [set(d.vertices), set(d.edges), set(d.triangles)]
        if prev:
            assert all(p <= c for p, c in zip(prev, cur))
        prev = cur


def test_vertex_disk_grows_with_refinement(A):
    counts = [vertex_disk(triangulate(A, h), (1.0, 1.0), 0.2).vertices.size for h in (0.2, 0.1)]
    assert counts[0] < counts[1]


def test_vertex_disk_overlap(mesh_A):
    with pytest.raises(OverlapError):
        vertex_disk(mesh_A, (1.0, 1.0), 0.75)


def test_off_roundtrip(tmp_path, mesh_A):
    write_off(mesh_A, tmp_path / "a.off")
    back = read_off(tmp_path / "a.off")
    assert np.array_equal(back.vertices, mesh_A.vertices)
    assert np.array_equal(back.triangles, mesh_A.triangles)
    write_sidecar(mesh_A, tmp_path / "a.tags", [vertex_disk(mesh_A, (1.0, 1.0), 0.2)])
    text = (tmp_path / "a.tags").read_text()
    assert text.count("\nedge ") == len(mesh_A.boundary_edges)
    assert "disk_triangles" in text
