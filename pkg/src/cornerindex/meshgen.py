"""Conforming triangulations of polygonal domains.

Two modes:

* structured: axis-aligned domains whose corners sit on a grid of spacing h;
  every grid cell inside the domain is split along its lower-left/upper-right
  diagonal.
* unstructured: Delaunay refinement.  Boundary loops are subdivided according
  to the sizing field, then circumcenters of oversized or skinny triangles are
  inserted.  A candidate that encroaches a boundary segment (lies inside its
  diametral circle) splits that segment instead, so every boundary segment
  stays a Gabriel edge and survives in the plain Delaunay triangulation.

The sizing field is h * d**(1 - 1/grading) clipped to [h**2, h], with d the
distance to the nearest domain corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .polygeom import (
    CornerVertex,
    PolygonalDomain,
    edge_direction_tag,
    euler_characteristic,
    format_float,
    point_segment_distance,
)


class RefinementError(RuntimeError):
    pass


class OverlapError(ValueError):
    pass


@dataclass(frozen=True)
class SimplicialMesh:
    vertices: np.ndarray  # (V, 2)
    triangles: np.ndarray  # (F, 3), counterclockwise
    corner_flags: np.ndarray = None  # (V,), index into domain.corners() or -1
    boundary_tags: tuple[str, ...] | None = None  # one per boundary edge
    name: str = "mesh"

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if self.corner_flags is None:
            object.__setattr__(self, "corner_flags", np.full(len(v), -1, dtype=np.int64))
        if np.any(self.signed_areas <= 0):
            raise RefinementError("mesh contains a triangle with non-positive signed area")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        u, w = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0])

    @cached_property
    def _edge_data(self):
        t = self.triangles
        local = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        sorted_pairs = np.sort(local, axis=1)
        edges, inverse = np.unique(sorted_pairs, axis=0, return_inverse=True)
        inverse = inverse.reshape(3, -1).T  # (F, 3): edges (01, 12, 20)
        signs = np.where(local[:, 0] < local[:, 1], 1, -1).reshape(3, -1).T
        return edges, inverse, signs

    @property
    def edges(self) -> np.ndarray:
        """Deduplicated edges oriented lower -> higher vertex index."""
        return self._edge_data[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """(F, 3) edge ids of triangle sides (v0v1, v1v2, v2v0)."""
        return self._edge_data[1]

    @property
    def triangle_edge_signs(self) -> np.ndarray:
        return self._edge_data[2]

    @cached_property
    def edge_triangle_count(self) -> np.ndarray:
        return np.bincount(self.triangle_edges.ravel(), minlength=self.n_edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_triangle_count == 1)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.edges[self.boundary_edges])

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @cached_property
    def h(self) -> float:
        e = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return float(np.max(np.hypot(e[:, 0], e[:, 1])))

    @property
    def area(self) -> float:
        return float(np.sum(self.signed_areas))

    def with_tags(self, tags, corner_flags=None):
        return SimplicialMesh(
            self.vertices,
            self.triangles,
            self.corner_flags if corner_flags is None else corner_flags,
            tuple(tags),
            self.name,
        )

    def relabeled(self, perm: np.ndarray):
        """Same mesh with vertex i renamed perm[i]."""
        perm = np.asarray(perm)
        verts = np.empty_like(self.vertices)
        verts[perm] = self.vertices
        flags = np.empty_like(self.corner_flags)
        flags[perm] = self.corner_flags
        return SimplicialMesh(verts, perm[self.triangles], flags, None, self.name)

    def transformed(self, rotation: float = 0.0, shift=(0.0, 0.0)):
        c, s = math.cos(rotation), math.sin(rotation)
        R = np.array([[c, -s], [s, c]])
        return SimplicialMesh(self.vertices @ R.T + np.asarray(shift), self.triangles,
                              self.corner_flags, None, self.name)


@dataclass(frozen=True)
class VertexDisk:
    center: tuple[float, float]
    radius: float
    vertices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    edges: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    triangles: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


# ---------------------------------------------------------------------------
# sizing


def sizing_field(corners: np.ndarray, h: float, grading: float):
    tree = cKDTree(corners)
    power = 1.0 - 1.0 / grading

    def size(points: np.ndarray) -> np.ndarray:
        d, _ = tree.query(np.atleast_2d(points))
        return np.clip(h * d**power, h * h, h)

    return size


def _subdivide_edge(a: np.ndarray, b: np.ndarray, size, samples: int = 400) -> np.ndarray:
    """Points on [a, b) spaced according to the sizing field."""
    t = np.linspace(0.0, 1.0, samples + 1)
    pts = a + t[:, None] * (b - a)
    length = float(np.linalg.norm(b - a))
    dens = length / size(pts)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) / samples)])
    n = max(1, int(math.ceil(cum[-1] - 1e-9)))
    targets = np.linspace(0.0, cum[-1], n + 1)[:-1]
    tt = np.interp(targets, cum, t)
    return a + tt[:, None] * (b - a)


# ---------------------------------------------------------------------------
# Delaunay refinement


def _circumcenters(p: np.ndarray):
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    ba, ca = b - a, c - a
    d = 2.0 * (ba[:, 0] * ca[:, 1] - ba[:, 1] * ca[:, 0])
    bl, cl = np.sum(ba * ba, axis=1), np.sum(ca * ca, axis=1)
    ux = (ca[:, 1] * bl - ba[:, 1] * cl) / d
    uy = (ba[:, 0] * cl - ca[:, 0] * bl) / d
    return a + np.column_stack([ux, uy]), np.hypot(ux, uy)


def refine_pslg(
    loops: list[np.ndarray],
    inside,
    size,
    fixed: list[bool] | None = None,
    max_ratio: float = 1.45,
    max_iter: int = 400,
):
    """Delaunay-refine the region bounded by closed point loops.

    ``loops`` are already-subdivided closed polylines; segments of loops with
    ``fixed[i]`` set are never split.  ``inside`` classifies points,
    ``size`` evaluates the target edge length.  Returns (points, triangles).
    """
    fixed = fixed or [False] * len(loops)
    pts: list[np.ndarray] = []
    segs: list[tuple[int, int, bool]] = []
    offset = 0
    for loop, fx in zip(loops, fixed):
        n = len(loop)
        pts.extend(loop)
        segs.extend((offset + i, offset + (i + 1) % n, fx) for i in range(n))
        offset += n
    P = np.array(pts, dtype=float)

    for _ in range(max_iter):
        tri = Delaunay(P)
        simp = tri.simplices
        cent = P[simp].mean(axis=1)
        tp = P[simp]
        u, w = tp[:, 1] - tp[:, 0], tp[:, 2] - tp[:, 0]
        area2 = np.abs(u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0])
        diam2 = np.max(np.sum((tp - np.roll(tp, -1, axis=1)) ** 2, axis=2), axis=1)
        # flat hull facets of collinear boundary points have their centroid on the boundary
        simp = simp[inside(cent) & (area2 > 1e-10 * diam2)]
        pairs = np.sort(np.concatenate([simp[:, [0, 1]], simp[:, [1, 2]], simp[:, [2, 0]]]), axis=1)
        edge_set = set(map(tuple, pairs.tolist()))

        seg_arr = np.array([(a, b) for a, b, _ in segs])
        seg_fixed = np.array([f for _, _, f in segs])
        missing = [i for i, (a, b, _) in enumerate(segs) if (min(a, b), max(a, b)) not in edge_set]
        split: set[int] = set()
        if missing:
            for i in missing:
                if seg_fixed[i]:
                    raise RefinementError("a fixed boundary segment is not resolved by the mesh")
                split.add(i)
        else:
            tp = P[simp]
            cc, R = _circumcenters(tp)
            el = np.linalg.norm(tp - np.roll(tp, -1, axis=1), axis=2)
            shortest, longest = el.min(axis=1), el.max(axis=1)
            target = size(tp.mean(axis=1))
            too_big = longest > 1.3 * target
            # skinny triangles already at the size floor are left alone
            skinny = (R / shortest > max_ratio) & (shortest > 0.5 * target)
            bad = np.flatnonzero(too_big | skinny)
            if bad.size == 0:
                return P, simp
            order = bad[np.lexsort((bad, -(longest[bad] / target[bad])))]
            mids = 0.5 * (P[seg_arr[:, 0]] + P[seg_arr[:, 1]])
            halfl = 0.5 * np.linalg.norm(P[seg_arr[:, 1]] - P[seg_arr[:, 0]], axis=1)
            near = cKDTree(mids).query_ball_point(cc[order], float(halfl.max()))
            cand = cc[order]
            cand_size = size(cand)
            inside_c = inside(cand)
            cell = float(cand_size.max())
            grid: dict[tuple[int, int], list[np.ndarray]] = {}
            accepted: list[np.ndarray] = []
            for k in range(len(order)):
                enc = [j for j in near[k] if np.linalg.norm(cand[k] - mids[j]) < halfl[j]]
                if enc:
                    split.update(j for j in enc if not seg_fixed[j])
                    continue
                if not inside_c[k]:
                    continue
                key = (int(cand[k, 0] // cell), int(cand[k, 1] // cell))
                crowded = False
                for dx in (-1, 0, 1):
                    for dy in (-1, 0, 1):
                        for q in grid.get((key[0] + dx, key[1] + dy), ()):
                            if np.hypot(*(q - cand[k])) < 0.5 * cand_size[k]:
                                crowded = True
                                break
                if crowded:
                    continue
                grid.setdefault(key, []).append(cand[k])
                accepted.append(cand[k])
            if not accepted and not split:
                return P, simp
            if accepted:
                P = np.vstack([P, np.array(accepted)])
        if split:
            new_segs = []
            newpts = []
            base = len(P)
            for i, (a, b, f) in enumerate(segs):
                if i in split:
                    m = base + len(newpts)
                    newpts.append(0.5 * (P[a] + P[b]))
                    new_segs.extend([(a, m, f), (m, b, f)])
                else:
                    new_segs.append((a, b, f))
            segs = new_segs
            P = np.vstack([P, np.array(newpts)])
    raise RefinementError("Delaunay refinement did not converge within the iteration cap")


def _compact(points: np.ndarray, triangles: np.ndarray):
    used = np.unique(triangles)
    remap = np.full(len(points), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return points[used], remap[triangles]


def _orient_ccw(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = points[triangles]
    u, w = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    flip = (u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]) < 0
    tri = triangles.copy()
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return tri


def _corner_flags(vertices: np.ndarray, domain: PolygonalDomain) -> np.ndarray:
    flags = np.full(len(vertices), -1, dtype=np.int64)
    corners = domain.corners()
    d, idx = cKDTree(vertices).query(corners)
    scale = max(1.0, domain.diameter)
    if np.any(d > 1e-9 * scale):
        raise RefinementError("a domain corner is not a mesh vertex")
    flags[idx] = np.arange(len(corners))
    return flags


def _structured(domain: PolygonalDomain, h: float):
    corners = domain.corners()
    origin = corners.min(axis=0)
    steps = (corners - origin) / h
    if np.any(np.abs(steps - np.round(steps)) > 1e-9) or any(
        edge_direction_tag(a, b) == "oblique" for _, _, a, b in domain.edges()
    ):
        raise RefinementError("structured mode needs an axis-aligned domain with corners on the h-grid")
    nx, ny = np.round(steps.max(axis=0)).astype(int)
    xs = origin[0] + h * np.arange(nx + 1)
    ys = origin[1] + h * np.arange(ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    points = np.column_stack([gx.ravel(), gy.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i, j = i.ravel(), j.ravel()
    centers = np.column_stack([origin[0] + h * (i + 0.5), origin[1] + h * (j + 0.5)])
    keep = domain.contains(centers)
    i, j = i[keep], j[keep]
    ll = j * (nx + 1) + i
    lr, ul = ll + 1, ll + nx + 1
    ur = ul + 1
    tris = np.concatenate([np.column_stack([ll, lr, ur]), np.column_stack([ll, ur, ul])])
    return points, tris


def triangulate(
    domain: PolygonalDomain, h: float, grading: float = 2.0, structured: bool = False
) -> SimplicialMesh:
    """Conforming, boundary-tagged triangulation of ``domain``."""
    if h <= 0:
        raise RefinementError("h must be positive")
    if grading < 1:
        raise RefinementError("grading exponent must be >= 1")
    shortest = min(float(np.linalg.norm(b - a)) for _, _, a, b in domain.edges())
    if h > shortest:
        raise RefinementError(f"h = {h} does not resolve the shortest domain edge ({shortest:.3g})")
    if structured:
        points, tris = _structured(domain, h)
    else:
        size = sizing_field(domain.corners(), h, grading)
        loops = []
        for loop in domain.loops:
            n = len(loop)
            loops.append(np.vstack([_subdivide_edge(loop[i], loop[(i + 1) % n], size) for i in range(n)]))
        points, tris = refine_pslg(loops, domain.contains, size)
    points, tris = _compact(points, tris)
    tris = _orient_ccw(points, tris)
    mesh = SimplicialMesh(points, tris, _corner_flags(points, domain), None, f"{domain.name}_h{h:g}")
    if mesh.euler_characteristic != euler_characteristic(domain):
        raise RefinementError("triangulation does not reproduce the Euler characteristic of the domain")
    if abs(mesh.area - domain.area) > 1e-9 * max(1.0, abs(domain.area)):
        raise RefinementError("triangulation does not cover the domain")
    return tag_boundary(mesh, domain)


def tag_boundary(mesh: SimplicialMesh, domain: PolygonalDomain) -> SimplicialMesh:
    """Tag each boundary edge vertical / horizontal / oblique by its domain edge."""
    dom_edges = domain.edges()
    A = np.array([a for _, _, a, _ in dom_edges])
    B = np.array([b for _, _, _, b in dom_edges])
    dom_tags = [edge_direction_tag(a, b) for a, b in zip(A, B)]
    axis_aligned = all(t != "oblique" for t in dom_tags)
    tol = 1e-9 * max(1.0, domain.diameter)
    tags = []
    for e in mesh.boundary_edges:
        p, q = mesh.vertices[mesh.edges[e]]
        dp = point_segment_distance(p[None, :], A, B)
        dq = point_segment_distance(q[None, :], A, B)
        hit = np.flatnonzero((dp <= tol) & (dq <= tol))
        if hit.size == 0:
            raise RefinementError(f"boundary edge {int(e)} does not lie on a domain edge")
        tag = dom_tags[int(hit[0])]
        if axis_aligned and tag == "oblique":  # pragma: no cover - guarded by construction
            import warnings

            warnings.warn(f"boundary edge {int(e)} is oblique on an axis-aligned domain")
        tags.append(tag)
    return mesh.with_tags(tags, _corner_flags(mesh.vertices, domain))


def boundary_tag_counts(mesh: SimplicialMesh) -> dict[str, int]:
    counts = {"vertical": 0, "horizontal": 0, "oblique": 0}
    for t in mesh.boundary_tags or ():
        counts[t] += 1
    return counts


def corner_positions(mesh: SimplicialMesh) -> np.ndarray:
    return mesh.vertices[mesh.corner_flags >= 0]


def vertex_disk(mesh: SimplicialMesh, corner, rho: float) -> VertexDisk:
    """All vertices, edges and triangles meeting the open disk B_rho(corner)."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    c = np.asarray(corner.position if isinstance(corner, CornerVertex) else corner, dtype=float)
    others = corner_positions(mesh)
    if len(others) > 1:
        d = np.linalg.norm(others - c, axis=1)
        d = d[d > 1e-12]
        if d.size and rho > 0.5 * d.min():
            raise OverlapError(f"rho = {rho} exceeds half the distance to the nearest other corner")
    if rho == 0:
        return VertexDisk((float(c[0]), float(c[1])), 0.0)
    V = mesh.vertices
    verts = np.flatnonzero(np.linalg.norm(V - c, axis=1) < rho)
    E = mesh.edges
    edist = point_segment_distance(c[None, :], V[E[:, 0]], V[E[:, 1]])
    edges = np.flatnonzero(edist < rho)
    T = mesh.triangles
    p = V[T]
    tdist = np.min(
        np.stack([point_segment_distance(c[None, :], p[:, k], p[:, (k + 1) % 3]) for k in range(3)]),
        axis=0,
    )
    # corner strictly inside a triangle: impossible for a boundary corner, kept for generality
    o = [
        (p[:, (k + 1) % 3, 0] - p[:, k, 0]) * (c[1] - p[:, k, 1])
        - (p[:, (k + 1) % 3, 1] - p[:, k, 1]) * (c[0] - p[:, k, 0])
        for k in range(3)
    ]
    inside = (o[0] > 0) & (o[1] > 0) & (o[2] > 0)
    tris = np.flatnonzero((tdist < rho) | inside)
    return VertexDisk((float(c[0]), float(c[1])), float(rho), verts, edges, tris)


def corner_disks(mesh: SimplicialMesh, rho: float) -> list[VertexDisk]:
    return [vertex_disk(mesh, c, rho) for c in corner_positions(mesh)]


# ---------------------------------------------------------------------------
# files


def write_off(mesh: SimplicialMesh, path) -> None:
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} {mesh.n_edges}"]
    lines += [f"{format_float(x)} {format_float(y)} 0" for x, y in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path) -> SimplicialMesh:
    rows = [ln.split("#", 1)[0].split() for ln in Path(path).read_text().splitlines()]
    rows = [r for r in rows if r]
    if rows[0] != ["OFF"]:
        raise ValueError("not an OFF file")
    nv, nf = int(rows[1][0]), int(rows[1][1])
    verts = np.array([[float(r[0]), float(r[1])] for r in rows[2 : 2 + nv]])
    tris = np.array([[int(r[1]), int(r[2]), int(r[3])] for r in rows[2 + nv : 2 + nv + nf]])
    return SimplicialMesh(verts, tris, name=Path(path).stem)


def write_sidecar(mesh: SimplicialMesh, path, disks: list[VertexDisk] = ()) -> None:
    """Boundary tags, corner flags and disk memberships as plain text."""
    lines = ["# boundary edges: v0 v1 tag"]
    tags = mesh.boundary_tags or ("untagged",) * len(mesh.boundary_edges)
    for e, t in zip(mesh.boundary_edges, tags):
        a, b = mesh.edges[e]
        lines.append(f"edge {a} {b} {t}")
    lines.append("# corners: vertex corner_index")
    for v in np.flatnonzero(mesh.corner_flags >= 0):
        lines.append(f"corner {v} {mesh.corner_flags[v]}")
    for k, disk in enumerate(disks):
        lines.append(f"disk {k} {format_float(disk.center[0])} {format_float(disk.center[1])} "
                     f"{format_float(disk.radius)}")
        lines.append("disk_vertices " + " ".join(map(str, disk.vertices)))
        lines.append("disk_edges " + " ".join(f"{a}-{b}" for a, b in mesh.edges[disk.edges]))
        lines.append("disk_triangles " + " ".join(map(str, disk.triangles)))
    Path(path).write_text("\n".join(lines) + "\n")
