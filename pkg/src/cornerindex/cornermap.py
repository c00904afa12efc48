"""Piecewise-affine corner maps between polygonal domains.

The counterexample map P' -> Q' is assembled from rings of points around the
pentagon hole:

* ring 0 is the pentagon itself, each edge cut into ``SUBDIVISIONS`` pieces;
  its images lie on the boundary of the triangle hole (three edges mapped
  affinely, the last two folded onto A'B' and A'C' by the |t| model);
* ring 1 is a slightly enlarged pentagon whose images are the ring-0 images
  pushed radially onto a circle around the triangle, so the strip between
  rings 0 and 1 lands in a collar of the triangle;
* the remaining rings blend image and source angles on circles of growing
  radius, then run radially onto the outermost ring, where the map becomes the
  identity; the identity is used on the rest of the square.

The map is determined by vertex images on a source triangulation; each
triangle is one affine piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from shapely.geometry import Polygon

from .meshgen import SimplicialMesh, _orient_ccw, _subdivide_edge, refine_pslg, triangulate
from .polygeom import (
    NOTCH_SIZE,
    PENTAGON_CIRCUMRADIUS,
    TRIANGLE_SIDE,
    PolygonalDomain,
    domain_P,
    domain_Q,
    format_float,
    notch_loop,
    pentagon_loop,
    point_segment_distance,
    square,
    triangle_loop,
)

SUBDIVISIONS = 4  # points per pentagon edge on every ring (even: the midpoint is a fold tip)
COLLAR_SOURCE_SCALE = 1.15
COLLAR_IMAGE_SCALE = 1.4  # collar circle radius / triangle circumradius
OUTER_RING_SCALE = 1.7
BLEND_RINGS = 8
OUTER_MESH_SIZE = 0.4


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CornerMap:
    """Continuous piecewise-affine map, one affine piece per source triangle.

    ``images[i]`` is the image of ``vertices[i]``; ``scale`` is the factor r
    of the composite x -> f(x / r) defined on r * source.
    """

    source: PolygonalDomain
    target: PolygonalDomain
    vertices: np.ndarray
    triangles: np.ndarray
    images: np.ndarray
    scale: float = 1.0
    labels: dict = field(default_factory=dict)

    @cached_property
    def pieces(self) -> np.ndarray:
        """(F, 2, 3) affine matrices [L | t] with L v + t = image."""
        src = self.vertices[self.triangles]
        img = self.images[self.triangles]
        E = np.stack([src[:, 1] - src[:, 0], src[:, 2] - src[:, 0]], axis=2)  # columns
        F = np.stack([img[:, 1] - img[:, 0], img[:, 2] - img[:, 0]], axis=2)
        L = F @ np.linalg.inv(E)
        t = img[:, 0] - np.einsum("fij,fj->fi", L, src[:, 0])
        return np.concatenate([L, t[:, :, None]], axis=2)

    @property
    def differentials(self) -> np.ndarray:
        return self.pieces[:, :, :2] / self.scale

    @property
    def orientation(self) -> np.ndarray:
        """Sign of det of each piece differential; -1 marks a fold piece."""
        return np.sign(np.linalg.det(self.pieces[:, :, :2])).astype(int)

    def __call__(self, points: np.ndarray, piece: np.ndarray) -> np.ndarray:
        A = self.pieces[piece]
        p = np.asarray(points, dtype=float) / self.scale
        return np.einsum("fij,fj->fi", A[:, :, :2], p) + A[:, :, 2]

    def scaled(self, r: float) -> "CornerMap":
        return CornerMap(self.source, self.target, self.vertices, self.triangles, self.images, r, self.labels)

    def transformed(self, rotation: float = 0.0, shift=(0.0, 0.0)) -> "CornerMap":
        """Precompose with the inverse of a rigid motion of the source."""
        c, s = math.cos(rotation), math.sin(rotation)
        Rm = np.array([[c, -s], [s, c]])
        t = np.asarray(shift, dtype=float)
        labels = dict(self.labels)
        if "fold_edges" in labels:
            labels["fold_edges"] = [(Rm @ a + t, Rm @ b + t) for a, b in labels["fold_edges"]]
            lo, hi = labels["fold_sector"]
            labels["fold_sector"] = (lo + rotation, hi + rotation)
            labels["fold_center"] = Rm @ np.asarray(labels.get("fold_center", (0.0, 0.0))) + t
        return CornerMap(self.source.transformed(rotation, shift), self.target,
                         self.vertices @ Rm.T + t, self.triangles, self.images,
                         self.scale, labels)

    def export(self, path) -> None:
        """One line per piece: three source vertices then the 2x3 affine matrix."""
        lines = ["# x1 y1 x2 y2 x3 y3 a11 a12 t1 a21 a22 t2"]
        for tri, A in zip(self.triangles, self.pieces):
            vals = list(self.vertices[tri].ravel()) + list(A.ravel())
            lines.append(" ".join(format_float(v) for v in vals))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def lipschitz_after_scaling(cmap: CornerMap, r: float) -> tuple[float, float]:
    """(largest singular value of the differential of x -> f(x / r), smallest r making it <= 1)."""
    if not r > 0:
        raise ValueError("r must be positive")
    sv = np.linalg.svd(cmap.pieces[:, :, :2], compute_uv=False)[:, 0]
    r0 = float(sv.max())
    return r0 / r, r0


def identity_map(domain: PolygonalDomain, h: float = 0.5) -> CornerMap:
    mesh = triangulate(domain, h, grading=1.0)
    return CornerMap(domain, domain, mesh.vertices, mesh.triangles, mesh.vertices.copy())


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class CornerMapReport:
    coverage_error: float
    continuity_residual: float
    boundary_to_boundary: bool
    image_in_target: bool
    corners_to_strata: bool
    fold_pieces: int
    folds_on_labelled_edges: bool
    min_abs_det: float

    @property
    def valid(self) -> bool:
        return (self.coverage_error <= 1e-9 and self.continuity_residual <= 1e-12
                and self.boundary_to_boundary and self.image_in_target and self.corners_to_strata
                and self.folds_on_labelled_edges and self.min_abs_det > 0)

    def rows(self) -> list[tuple[str, str]]:
        return [(k, str(v)) for k, v in self.__dict__.items()] + [("valid", str(self.valid))]


def _domain_edges(domain: PolygonalDomain):
    return [(a, b) for _, _, a, b in domain.edges()]


def _on_edge_index(points: np.ndarray, edges, tol: float) -> np.ndarray:
    """Index of a domain edge containing each point, or -1."""
    out = np.full(len(points), -1)
    for k, (a, b) in enumerate(edges):
        hit = (point_segment_distance(points, a, b) <= tol) & (out < 0)
        out[hit] = k
    return out


def validate_corner_map(cmap: CornerMap, tol: float = 1e-12) -> CornerMapReport:
    mesh = SimplicialMesh(cmap.vertices, cmap.triangles)
    coverage = abs(mesh.area - cmap.source.area) / cmap.source.area
    if mesh.euler_characteristic != 1 - len(cmap.source.holes):
        coverage = max(coverage, 1.0)

    # continuity: both pieces on an interior edge agree at its endpoints
    A = cmap.pieces
    te = mesh.triangle_edges
    owners: dict[int, list[int]] = {}
    for f in range(len(te)):
        for e in te[f]:
            owners.setdefault(int(e), []).append(f)
    cont = 0.0
    for e, fs in owners.items():
        if len(fs) == 2:
            ends = cmap.vertices[mesh.edges[e]]
            v1 = ends @ A[fs[0], :, :2].T + A[fs[0], :, 2]
            v2 = ends @ A[fs[1], :, :2].T + A[fs[1], :, 2]
            cont = max(cont, float(np.abs(v1 - v2).max()))

    # boundary edges land inside a single target boundary edge
    tedges = _domain_edges(cmap.target)
    bnd = mesh.boundary_edges
    ends = cmap.images[mesh.edges[bnd]]
    ok = True
    for k in range(len(bnd)):
        on0 = {j for j, (a, b) in enumerate(tedges) if point_segment_distance(ends[k, :1], a, b)[0] <= tol}
        on1 = {j for j, (a, b) in enumerate(tedges) if point_segment_distance(ends[k, 1:], a, b)[0] <= tol}
        if not on0 & on1:
            ok = False
            break

    # image triangles inside the target
    region = Polygon(cmap.target.outer, [h for h in cmap.target.holes]).buffer(1e-9)
    inside = all(region.covers(Polygon(t)) if abs(_area(t)) > 0 else True for t in cmap.images[cmap.triangles])

    # source corners go to target vertices or edges
    corners = cmap.source.corners()
    idx = cKDTree(cmap.vertices).query(corners)[1]
    corner_ok = bool(np.all(_on_edge_index(cmap.images[idx], tedges, tol) >= 0))

    folds = np.flatnonzero(cmap.orientation < 0)
    fold_ok = _folds_where_declared(cmap, folds)
    dets = np.abs(np.linalg.det(A[:, :, :2]))
    return CornerMapReport(float(coverage), cont, ok, bool(inside), corner_ok, int(folds.size),
                           fold_ok, float(dets.min()))


def _folds_where_declared(cmap: CornerMap, folds: np.ndarray) -> bool:
    """Fold pieces touch every declared fold edge and stay in the declared sectors."""
    edges = cmap.labels.get("fold_edges", [])
    if not edges:
        return folds.size == 0
    tri = cmap.vertices[cmap.triangles[folds]]
    for a, b in edges:
        d = point_segment_distance(tri.reshape(-1, 2), np.asarray(a), np.asarray(b)).reshape(-1, 3)
        if not np.any((d <= 1e-12).sum(axis=1) >= 2):
            return False
    lo, hi = cmap.labels["fold_sector"]
    c = tri.mean(axis=1) - np.asarray(cmap.labels.get("fold_center", (0.0, 0.0)))
    ang = np.mod(np.arctan2(c[:, 1], c[:, 0]) - lo, 2 * math.pi)
    return bool(np.all(ang <= np.mod(hi - lo, 2 * math.pi)))


def _area(t: np.ndarray) -> float:
    u, w = t[1] - t[0], t[2] - t[0]
    return 0.5 * float(u[0] * w[1] - u[1] * w[0])


# ---------------------------------------------------------------------------
# construction


def _ring_points(loop: np.ndarray, n: int) -> np.ndarray:
    k = len(loop)
    t = np.arange(n) / n
    return np.vstack([loop[i] + t[:, None] * (loop[(i + 1) % k] - loop[i]) for i in range(k)])


def _hole_images(tri: np.ndarray, n: int) -> np.ndarray:
    """Images of the ring-0 points: AB, BC, CD affinely onto A'B', B'C', C'A';
    DE and EA folded onto A'B' and A'C' with their midpoints at B' and C'."""
    a, b, c = tri
    t = np.arange(n) / n
    seg = lambda p, q: p + t[:, None] * (q - p)
    half = np.abs(1.0 - 2.0 * t)  # |t| fold on [0, 1]: 1 -> 0 -> 1
    fold = lambda tip: a + (1.0 - half)[:, None] * (tip - a)
    return np.vstack([seg(a, b), seg(b, c), seg(c, a), fold(b), fold(c)])


def _split_quad(images: np.ndarray, quad) -> list[tuple[int, int, int]]:
    """Split a source trapezoid along a diagonal chosen from the images.

    The twist between image and source angles shears the blended rings, so a
    fixed diagonal can fold a piece that should not fold.  Prefer the diagonal
    whose two image triangles share an orientation (largest smaller area);
    a quad crossed by a fold crease has no such diagonal and keeps the one
    with the larger smaller area.
    """
    p0, p1, q1, q0 = quad
    options = []
    for split in ([(p0, p1, q1), (p0, q1, q0)], [(p0, p1, q0), (p1, q1, q0)]):
        a = [_area(images[list(t)]) for t in split]
        options.append((a[0] * a[1] > 0, min(abs(a[0]), abs(a[1])), split))
    return max(options, key=lambda o: (o[0], o[1]))[2]


def build_counterexample_pair(
    pentagon_circumradius: float = PENTAGON_CIRCUMRADIUS,
    triangle_side: float = TRIANGLE_SIDE,
    notch_size: float = NOTCH_SIZE,
) -> tuple[PolygonalDomain, PolygonalDomain, CornerMap]:
    """P' (square minus pentagon and notch), Q' (square minus triangle and notch)
    and a corner map P' -> Q'."""
    P = domain_P(pentagon_circumradius, notch_size)
    Q = domain_Q(triangle_side, notch_size)
    R = pentagon_circumradius
    notch = notch_loop(notch_size)
    outer_ring = OUTER_RING_SCALE * pentagon_loop(R)
    tri = triangle_loop(triangle_side)
    tri_circ = triangle_side / math.sqrt(3.0)
    collar = COLLAR_IMAGE_SCALE * tri_circ
    if collar >= 0.8 * OUTER_RING_SCALE * R * math.cos(math.pi / 5):
        raise ConstructionError("triangle hole does not fit the collar of the pentagon")
    if np.abs(outer_ring).max() >= 2.0 - 0.05 or Polygon(outer_ring).distance(Polygon(notch)) < 0.05:
        raise ConstructionError("pentagon too large: the blended collar meets the square or the notch")

    n = SUBDIVISIONS
    base = _ring_points(pentagon_loop(R), n)
    m = len(base)
    img0 = _hole_images(tri, n)
    scales = [1.0, COLLAR_SOURCE_SCALE] + list(np.linspace(COLLAR_SOURCE_SCALE, OUTER_RING_SCALE, BLEND_RINGS + 1)[1:])
    rings_src = [s * base for s in scales]
    img1 = collar * img0 / np.hypot(*img0.T)[:, None]

    # polar blend between two circles: from the collar circle at the image
    # angles (w = 0) to a circle inside the outer ring at the source angles
    # (w = 1); the last strip then runs radially onto the outer ring, where the
    # map is the identity.  Keeping every blended ring a circle stops the
    # angular twist from folding pieces away from the fold edges.
    src_ang = np.unwrap(np.arctan2(base[:, 1], base[:, 0]))
    img_ang = np.unwrap(np.arctan2(img1[:, 1], img1[:, 0]))
    img_ang += 2 * math.pi * np.round((src_ang[0] - img_ang[0]) / (2 * math.pi))
    rho_out = 0.95 * OUTER_RING_SCALE * R * math.cos(math.pi / 5)
    rings_img = [img0, img1]
    for i in range(1, BLEND_RINGS + 1):
        if i == BLEND_RINGS:
            rings_img.append(rings_src[-1].copy())
            continue
        w = i / (BLEND_RINGS - 1)
        ang = (1 - w) * img_ang + w * src_ang
        rad = (1 - w) * collar + w * rho_out
        rings_img.append(np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]))

    verts = np.vstack(rings_src)
    images = np.vstack(rings_img)
    tris = []
    for r in range(len(scales) - 1):
        for j in range(m):
            j1 = (j + 1) % m
            p0, p1 = r * m + j, r * m + j1
            q0, q1 = (r + 1) * m + j, (r + 1) * m + j1
            tris += _split_quad(images, (p0, p1, q1, q0))
    tris = np.array(tris, dtype=np.int64)

    # identity on the rest of the square
    sq = square(2.0)
    outer_loop = np.vstack([_subdivide_edge(sq[i], sq[(i + 1) % 4], lambda p: np.full(len(p), OUTER_MESH_SIZE))
                            for i in range(4)])
    ring_last = rings_src[-1]
    region = PolygonalDomain(sq, (outer_ring[::-1].copy(), notch[::-1].copy()), "collar")
    pts, otri = refine_pslg([outer_loop, notch, ring_last], region.contains,
                            lambda p: np.full(len(p), OUTER_MESH_SIZE), fixed=[False, True, True])
    # glue: outer-region points coinciding with existing ring points are shared
    tree = cKDTree(verts)
    d, near = tree.query(pts)
    remap = np.where(d < 1e-12, near, -1)
    fresh = np.flatnonzero(remap < 0)
    remap[fresh] = len(verts) + np.arange(len(fresh))
    verts = np.vstack([verts, pts[fresh]])
    images = np.vstack([images, pts[fresh]])
    tris = np.vstack([tris, remap[otri]])
    verts_c, tris_c = verts, tris
    tris_c = _orient_ccw(verts_c, tris_c)

    pent = pentagon_loop(R)
    d_ang, a_ang = (math.atan2(pent[i, 1], pent[i, 0]) for i in (3, 0))
    labels = {
        "pentagon": "ABCDE",
        "triangle": "A'B'C'",
        "fold_edges": [(pent[3], pent[4]), (pent[4], pent[0])],
        "fold_sector": (d_ang, a_ang),
        "defaults": dict(pentagon_circumradius=R, triangle_side=triangle_side, notch_size=notch_size),
    }
    cmap = CornerMap(P, Q, verts_c, tris_c, images, 1.0, labels)
    rep = validate_corner_map(cmap)
    if not rep.valid:
        raise ConstructionError(f"corner map failed validation: {rep}")
    return P, Q, cmap
