"""Planar polygonal domains with corners.

A domain is an outer counterclockwise loop plus clockwise hole loops, so the
material always lies to the left of the boundary.  Interior angles are
measured inside the material: convex corners of the outer square read pi/2,
corners of a square hole read 3*pi/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


class ValidationError(ValueError):
    """Raised for malformed loops (self-intersection, degenerate edges, ...)."""


class GeometryError(ValueError):
    """Raised when a geometric construction does not fit its inputs."""


# ---------------------------------------------------------------------------
# predicates


def signed_area(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p, tol: float) -> bool:
    return (
        min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol
        and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol
    )


def segments_intersect(a, b, c, d, tol: float = 1e-12) -> bool:
    """Closed-segment intersection test for ab and cd."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > tol and o2 < -tol) or (o1 < -tol and o2 > tol)) and (
        (o3 > tol and o4 < -tol) or (o3 < -tol and o4 > tol)
    ):
        return True
    if abs(o1) <= tol and _on_segment(a, b, c, tol):
        return True
    if abs(o2) <= tol and _on_segment(a, b, d, tol):
        return True
    if abs(o3) <= tol and _on_segment(c, d, a, tol):
        return True
    if abs(o4) <= tol and _on_segment(c, d, b, tol):
        return True
    return False


def points_in_loop(points: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Even-odd crossing test, vectorized over points.  Boundary points are
    classified arbitrarily; callers keep away from the boundary."""
    pts = np.atleast_2d(points)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    ax, ay = loop[:, 0][None, :], loop[:, 1][None, :]
    bx, by = np.roll(loop[:, 0], -1)[None, :], np.roll(loop[:, 1], -1)[None, :]
    straddle = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = ax + (y - ay) * (bx - ax) / (by - ay)
    hits = straddle & (x < xcross)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from point(s) p to segment(s) ab (broadcasting)."""
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.clip(np.sum((p - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(p - proj, axis=-1)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class CornerVertex:
    position: tuple[float, float]
    interior_angle: float
    on_hole: bool
    loop_index: int = 0  # 0 = outer, k >= 1 = hole k-1
    vertex_index: int = 0

    @property
    def half_angle(self) -> float:
        return 0.5 * self.interior_angle


@dataclass(frozen=True)
class PolygonalDomain:
    outer: np.ndarray
    holes: tuple[np.ndarray, ...] = field(default_factory=tuple)
    name: str = "domain"

    def __post_init__(self):
        outer = np.asarray(self.outer, dtype=float).reshape(-1, 2)
        holes = tuple(np.asarray(h, dtype=float).reshape(-1, 2) for h in self.holes)
        outer.setflags(write=False)
        for h in holes:
            h.setflags(write=False)
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "holes", holes)
        validate_domain(self)

    @property
    def loops(self) -> list[np.ndarray]:
        return [self.outer, *self.holes]

    @property
    def area(self) -> float:
        return sum(signed_area(loop) for loop in self.loops)

    @property
    def diameter(self) -> float:
        pts = self.outer
        return float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)))

    def edges(self) -> list[tuple[int, int, np.ndarray, np.ndarray]]:
        """All boundary edges as (loop index, vertex index, start, end)."""
        out = []
        for li, loop in enumerate(self.loops):
            n = len(loop)
            for i in range(n):
                out.append((li, i, loop[i], loop[(i + 1) % n]))
        return out

    def corners(self) -> np.ndarray:
        return np.vstack(self.loops)

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = points_in_loop(points, self.outer)
        for h in self.holes:
            inside &= ~points_in_loop(points, h)
        return inside

    def transformed(self, rotation: float = 0.0, shift=(0.0, 0.0), name: str | None = None):
        """Rigid motion of the domain (rotation about the origin, then shift)."""
        c, s = math.cos(rotation), math.sin(rotation)
        R = np.array([[c, -s], [s, c]])
        t = np.asarray(shift, dtype=float)
        return PolygonalDomain(
            self.outer @ R.T + t,
            tuple(h @ R.T + t for h in self.holes),
            name or f"{self.name}_moved",
        )


def _check_loop(loop: np.ndarray, li: int, tol: float) -> None:
    n = len(loop)
    if n < 3:
        raise ValidationError(f"loop {li} has fewer than 3 vertices")
    lengths = np.linalg.norm(np.roll(loop, -1, axis=0) - loop, axis=1)
    bad = np.flatnonzero(lengths <= tol)
    if bad.size:
        raise ValidationError(f"loop {li}: degenerate (zero-length) edge at vertex {int(bad[0])}")
    for i in range(n):
        a, b, c = loop[i - 1], loop[i], loop[(i + 1) % n]
        cross = _orient(a, b, c)
        scale = np.linalg.norm(b - a) * np.linalg.norm(c - b)
        if abs(cross) <= 1e-12 * scale and np.dot(b - a, c - b) > 0:
            raise ValidationError(f"loop {li}: collinear consecutive edges at vertex {i}")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segments_intersect(loop[i], loop[(i + 1) % n], loop[j], loop[(j + 1) % n], tol):
                raise ValidationError(
                    f"loop {li}: self-intersection between edges ({i},{(i + 1) % n}) "
                    f"and ({j},{(j + 1) % n})"
                )


def validate_domain(domain: PolygonalDomain, tol: float = 1e-12) -> None:
    loops = domain.loops
    for li, loop in enumerate(loops):
        _check_loop(loop, li, tol)
    if signed_area(domain.outer) <= 0:
        raise ValidationError("outer loop must be counterclockwise (positive signed area)")
    for k, h in enumerate(domain.holes):
        if signed_area(h) >= 0:
            raise ValidationError(f"hole {k} must be clockwise (negative signed area)")
        if not np.all(points_in_loop(h, domain.outer)):
            raise ValidationError(f"hole {k} is not strictly inside the outer loop")
    for li in range(len(loops)):
        for lj in range(li + 1, len(loops)):
            A, B = loops[li], loops[lj]
            for i in range(len(A)):
                for j in range(len(B)):
                    if segments_intersect(A[i], A[(i + 1) % len(A)], B[j], B[(j + 1) % len(B)], tol):
                        raise ValidationError(
                            f"loops {li} and {lj} intersect: edge ({i},{(i + 1) % len(A)}) "
                            f"meets edge ({j},{(j + 1) % len(B)})"
                        )
            if li >= 1 and (
                np.any(points_in_loop(B[:1], A)) or np.any(points_in_loop(A[:1], B))
            ):
                raise ValidationError(f"holes {li - 1} and {lj - 1} are nested")


# ---------------------------------------------------------------------------
# operations


def euler_characteristic(domain: PolygonalDomain) -> int:
    return 1 - len(domain.holes)


def turning_angle(a, b, c) -> float:
    """Signed exterior angle at b for the path a -> b -> c (left turn > 0)."""
    u, v = np.asarray(b) - np.asarray(a), np.asarray(c) - np.asarray(b)
    return math.atan2(u[0] * v[1] - u[1] * v[0], float(np.dot(u, v)))


def interior_angles(domain: PolygonalDomain) -> list[CornerVertex]:
    """Every corner with its interior angle measured inside the material."""
    out = []
    for li, loop in enumerate(domain.loops):
        n = len(loop)
        for i in range(n):
            a, b, c = loop[i - 1], loop[i], loop[(i + 1) % n]
            if np.linalg.norm(b - a) == 0 or np.linalg.norm(c - b) == 0:
                raise ValidationError(f"loop {li}: degenerate (zero-length) edge at vertex {i}")
            angle = math.pi - turning_angle(a, b, c)
            out.append(CornerVertex((float(b[0]), float(b[1])), angle, li > 0, li, i))
    return out


def gauss_bonnet_sums(domain: PolygonalDomain) -> list[float]:
    """Sum of (pi - interior angle) per loop: 2*pi outer, -2*pi per hole."""
    sums = [0.0] * len(domain.loops)
    for cv in interior_angles(domain):
        sums[cv.loop_index] += math.pi - cv.interior_angle
    return sums


def edge_direction_tag(a, b, tol: float = 1e-12) -> str:
    dx, dy = abs(b[0] - a[0]), abs(b[1] - a[1])
    length = math.hypot(dx, dy)
    if dx <= tol * max(length, 1.0):
        return "vertical"
    if dy <= tol * max(length, 1.0):
        return "horizontal"
    return "oblique"


def domain_edge_tags(domain: PolygonalDomain) -> dict[str, int]:
    counts = {"vertical": 0, "horizontal": 0, "oblique": 0}
    for _, _, a, b in domain.edges():
        counts[edge_direction_tag(a, b)] += 1
    return counts


# ---------------------------------------------------------------------------
# corner rounding


@dataclass(frozen=True)
class TurningReport:
    theta: float
    rounding_radius: float
    signed_turning: float
    absolute_turning: float
    quad_points: int

    @property
    def closed_form(self) -> float:
        return math.pi - self.theta

    @property
    def inequality_holds(self) -> bool:
        """-int|k| >= -(pi - theta), the estimate examined for reflex corners."""
        return -self.absolute_turning >= -(math.pi - self.theta) - 1e-8


def composite_gauss_legendre(a: float, b: float, n_points: int, panel: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule with >= n_points nodes."""
    n_panels = max(1, -(-n_points // panel))
    x, w = np.polynomial.legendre.leggauss(panel)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def corner_turning_integrals(
    theta: float, rounding_radius: float, quad_points: int = 10_000, edge_length: float = 1.0
) -> TurningReport:
    """Integrate the curvature of a circular fillet at a corner of interior angle theta.

    The corner sits at the origin with incident edges of length ``edge_length``.
    The fillet is tangent to both edges; for theta > pi it bends away from the
    material and its curvature is negative.
    """
    if not 0.0 < theta < TWO_PI:
        raise GeometryError("interior angle must lie in (0, 2*pi)")
    if rounding_radius <= 0:
        raise GeometryError("rounding radius must be positive")
    if rounding_radius > 0.5 * edge_length:
        raise GeometryError("rounding radius exceeds half the shortest incident edge")
    tangent_length = rounding_radius * abs(math.cos(theta / 2) / math.sin(theta / 2))
    if tangent_length > 0.5 * edge_length:
        raise GeometryError("fillet tangent points do not fit on the incident edges")

    # boundary runs in along direction e_in, turns by (pi - theta), leaves along e_out
    turn = math.pi - theta
    e_in = np.array([1.0, 0.0])
    start = -tangent_length * e_in
    if abs(turn) < 1e-15:
        return TurningReport(theta, rounding_radius, 0.0, 0.0, quad_points)
    sgn = 1.0 if turn > 0 else -1.0
    normal = sgn * np.array([-e_in[1], e_in[0]])
    center = start + rounding_radius * normal
    phi0 = math.atan2(start[1] - center[1], start[0] - center[0])

    def gamma_derivs(t):
        phi = phi0 + sgn * t * abs(turn)
        w = sgn * abs(turn)
        d1 = rounding_radius * w * np.stack([-np.sin(phi), np.cos(phi)])
        d2 = rounding_radius * w * w * np.stack([-np.cos(phi), -np.sin(phi)])
        return d1, d2

    t, wts = composite_gauss_legendre(0.0, 1.0, quad_points)
    d1, d2 = gamma_derivs(t)
    speed = np.hypot(d1[0], d1[1])
    kappa = (d1[0] * d2[1] - d1[1] * d2[0]) / speed**3
    signed = float(np.sum(wts * kappa * speed))
    absolute = float(np.sum(wts * np.abs(kappa) * speed))
    return TurningReport(theta, rounding_radius, signed, absolute, int(t.size))


# ---------------------------------------------------------------------------
# named domains

# documented placement defaults; the construction leaves them free
PENTAGON_CIRCUMRADIUS = 1.0
TRIANGLE_SIDE = 1.0
NOTCH_SIZE = 0.2
NOTCH_CENTER = (0.0, -1.75)


def square(half_width: float = 1.0, center=(0.0, 0.0), ccw: bool = True) -> np.ndarray:
    cx, cy = center
    s = half_width
    loop = np.array([[cx - s, cy - s], [cx + s, cy - s], [cx + s, cy + s], [cx - s, cy + s]])
    return loop if ccw else loop[::-1].copy()


def regular_polygon(n: int, circumradius: float, phase: float, ccw: bool = True) -> np.ndarray:
    ang = phase + TWO_PI * np.arange(n) / n
    loop = circumradius * np.column_stack([np.cos(ang), np.sin(ang)])
    return loop if ccw else loop[::-1].copy()


def annulus_A() -> PolygonalDomain:
    """[-2,2]^2 minus the open square (-1,1)^2."""
    return PolygonalDomain(square(2.0), (square(1.0, ccw=False),), "A")


def unit_square() -> PolygonalDomain:
    return PolygonalDomain(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), (), "square")


def pentagon_loop(circumradius: float = PENTAGON_CIRCUMRADIUS) -> np.ndarray:
    """Vertices A, B, C, D, E of the regular pentagon, counterclockwise, A on top."""
    return regular_polygon(5, circumradius, math.pi / 2)


def triangle_loop(side: float = TRIANGLE_SIDE) -> np.ndarray:
    """Vertices A', B', C' of the equilateral triangle, counterclockwise, A' on top."""
    return regular_polygon(3, side / math.sqrt(3.0), math.pi / 2)


def notch_loop(size: float = NOTCH_SIZE, center=NOTCH_CENTER) -> np.ndarray:
    """Small equilateral triangle of diameter ``size`` near the bottom outer edge (CCW)."""
    return regular_polygon(3, size / math.sqrt(3.0), math.pi / 2) + np.asarray(center)


def domain_P(circumradius: float = PENTAGON_CIRCUMRADIUS, notch: float | None = None) -> PolygonalDomain:
    holes = [pentagon_loop(circumradius)[::-1].copy()]
    name = "P"
    if notch:
        holes.append(notch_loop(notch)[::-1].copy())
        name = "P'"
    return PolygonalDomain(square(2.0), tuple(holes), name)


def domain_Q(side: float = TRIANGLE_SIDE, notch: float | None = None) -> PolygonalDomain:
    holes = [triangle_loop(side)[::-1].copy()]
    name = "Q"
    if notch:
        holes.append(notch_loop(notch)[::-1].copy())
        name = "Q'"
    return PolygonalDomain(square(2.0), tuple(holes), name)


def named_domain(name: str) -> PolygonalDomain:
    key = name.strip().lower().replace("′", "'")
    table = {
        "a": annulus_A,
        "square": unit_square,
        "p": domain_P,
        "q": domain_Q,
        "p'": lambda: domain_P(notch=NOTCH_SIZE),
        "pprime": lambda: domain_P(notch=NOTCH_SIZE),
        "q'": lambda: domain_Q(notch=NOTCH_SIZE),
        "qprime": lambda: domain_Q(notch=NOTCH_SIZE),
    }
    if key in table:
        return table[key]()
    path = Path(name)
    if path.exists():
        return read_domain(path)
    raise ValidationError(f"unknown domain {name!r}")


# ---------------------------------------------------------------------------
# plain-text loop format


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_domain(domain: PolygonalDomain, path) -> None:
    lines = [f"# {domain.name}"]
    for li, loop in enumerate(domain.loops):
        lines.append("outer" if li == 0 else "hole")
        lines.extend(f"{format_float(x)} {format_float(y)}" for x, y in loop)
        lines.append("")
    Path(path).write_text("\n".join(lines))


def read_domain(path, name: str | None = None) -> PolygonalDomain:
    outer = None
    holes: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] | None = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "outer":
            if outer is not None:
                raise ValidationError(f"line {lineno}: second outer loop")
            outer = current = []
        elif line == "hole":
            current = []
            holes.append(current)
        else:
            if current is None:
                raise ValidationError(f"line {lineno}: coordinates before a loop header")
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"line {lineno}: expected 'x y'")
            current.append((float(parts[0]), float(parts[1])))
    if outer is None:
        raise ValidationError("no outer loop")
    return PolygonalDomain(np.array(outer), tuple(np.array(h) for h in holes), name or Path(path).stem)
