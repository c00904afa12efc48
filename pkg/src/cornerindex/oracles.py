"""Closed forms and quadrature for the cutoff family f = 1 - (eps/r)**alpha and
for the integration-by-parts identity on 1-forms over A.

Capacity integrals live on the cone sector {r < 1, |phi| < beta} and are
computed in log-radius s = ln r, where the integrands are pure exponentials.
The ranges are split at r = eps (where f has a kink) and at r = sqrt(eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule.

    ``points`` nodes per axis on every cell; for the 1-form identity the
    domain A is cut into square cells of side ``cell``.  A rule with n points
    per axis integrates polynomials of degree 2n - 1 exactly in each variable.
    """

    points: int = 8
    cell: float = 0.1
    kind: str = "cartesian"

    @property
    def exactness(self) -> int:
        return 2 * self.points - 1


def gauss_legendre(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int) -> float:
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return float(half * np.dot(w, fn(0.5 * (a + b) + half * x)))


def converged_gauss_legendre(fn, a: float, b: float, n: int = 32, rtol: float = 1e-13,
                             max_doublings: int = 6, panels: int = 1) -> float:
    """Composite Gauss-Legendre with point doubling until successive values agree."""
    if a == b:
        return 0.0
    edges = np.linspace(a, b, panels + 1)

    def composite(m):
        return sum(gauss_legendre(fn, lo, hi, m) for lo, hi in zip(edges[:-1], edges[1:]))

    prev = composite(n)
    for _ in range(max_doublings):
        n *= 2
        cur = composite(n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise OracleError(f"quadrature on [{a:g}, {b:g}] did not converge with {n} points")


# ---------------------------------------------------------------------------
# capacity of a point


@dataclass(frozen=True)
class CapacityParams:
    alpha: float
    eps: float
    beta: float
    log_eps: float | None = None  # supplied when eps underflows

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.beta <= math.pi:
            raise ValueError("beta must lie in (0, pi]")
        if self.log_eps is None:
            if not 0 < self.eps < 1:
                raise ValueError("eps must lie in (0, 1)")
            object.__setattr__(self, "log_eps", math.log(self.eps))
        elif not self.log_eps < 0:
            raise ValueError("log_eps must be negative")


def cutoff(p: CapacityParams, r: np.ndarray) -> np.ndarray:
    """f_eps^alpha(r): 0 for r < eps, 1 - (eps/r)**alpha on eps < r < 1."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        val = 1.0 - np.exp(p.alpha * (p.log_eps - np.log(r)))
    return np.where(r > p.eps, val, 0.0)


def _panels(rate: float, length: float) -> int:
    """Panel count keeping exp(rate * s) within a factor e^8 on each panel."""
    return max(1, min(4096, int(math.ceil(abs(rate) * length / 8.0))))


def energy_closed_form(p: CapacityParams) -> float:
    return p.beta * p.alpha * (1.0 - math.exp(2.0 * p.alpha * p.log_eps))


def capacity_energy(p: CapacityParams) -> tuple[float, float]:
    """Dirichlet energy of the cutoff over the cone sector: (closed form, quadrature)."""
    a, le = p.alpha, p.log_eps

    # |grad f|^2 r dr dphi = alpha^2 (eps/r)^(2 alpha) ds dphi with s = ln r
    def integrand(s):
        return 2.0 * p.beta * a * a * np.exp(2.0 * a * (le - s))

    quad = converged_gauss_legendre(integrand, le, 0.0, panels=_panels(2.0 * a, -le))
    return energy_closed_form(p), quad


def l2_defect_exact(p: CapacityParams) -> float:
    a, le = p.alpha, p.log_eps
    inner = p.beta * math.exp(2.0 * le)
    if abs(1.0 - a) < 1e-14:
        outer = 2.0 * p.beta * math.exp(2.0 * a * le) * (-le)
    else:
        outer = p.beta * math.exp(2.0 * a * le) * (1.0 - math.exp((2.0 - 2.0 * a) * le)) / (1.0 - a)
    return inner + outer


def l2_defect_bound(p: CapacityParams) -> float:
    return p.beta * math.exp(p.log_eps) + p.beta * math.exp(p.alpha * p.log_eps)


def l2_defect(p: CapacityParams) -> tuple[float, float]:
    """|1 - f|^2 integrated over the sector: (quadrature, two-region bound)."""
    a, le = p.alpha, p.log_eps
    eps = math.exp(le)
    # r < eps: |1 - f| = 1
    inner = converged_gauss_legendre(lambda r: 2.0 * p.beta * r, 0.0, eps, n=4) if eps > 0 else 0.0

    # eps < r < 1 in s = ln r: (eps/r)^(2 alpha) r^2 ds dphi
    def integrand(s):
        return 2.0 * p.beta * np.exp(2.0 * a * (le - s) + 2.0 * s)

    mid = 0.5 * le
    k = _panels(2.0 - 2.0 * a, -mid)
    outer = (converged_gauss_legendre(integrand, le, mid, panels=k)
             + converged_gauss_legendre(integrand, mid, 0.0, panels=k))
    return inner + outer, l2_defect_bound(p)


@dataclass(frozen=True)
class ScheduleValue:
    alpha: float
    eps: float
    log_eps: float
    energy: float
    defect: float

    @property
    def h1_defect_sq(self) -> float:
        return self.energy + self.defect

    @property
    def eps_pow_alpha(self) -> float:
        return math.exp(self.alpha * self.log_eps)


def capacity_schedule(alpha: float, beta: float = math.pi / 4) -> ScheduleValue:
    """eps(alpha) = alpha**(1/alpha) and the resulting squared H1 defect."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    log_eps = math.log(alpha) / alpha
    p = CapacityParams(alpha, math.exp(log_eps), beta, log_eps=log_eps)
    _, energy = capacity_energy(p)
    defect, _ = l2_defect(p)
    return ScheduleValue(alpha, p.eps, log_eps, energy, defect)


def sector_polygon(eps: float, beta: float, h: float) -> np.ndarray:
    """Counterclockwise polygon approximating {eps < r < 1, |phi| < beta}."""
    n_out = max(2, int(2 * beta / (1.2 * h)))
    n_in = max(2, int(2 * beta * eps / (1.2 * h)))
    phi_out = np.linspace(-beta, beta, n_out + 1)
    phi_in = np.linspace(beta, -beta, n_in + 1)
    outer = np.column_stack([np.cos(phi_out), np.sin(phi_out)])
    inner = eps * np.column_stack([np.cos(phi_in), np.sin(phi_in)])
    return np.vstack([outer, inner])


def discrete_capacity_energy(p: CapacityParams, h: float) -> float:
    """P1 energy of the sampled cutoff on a mesh of the polygonal sector."""
    from .deccomplex import interpolate_0form, mass_1, incidence_d0
    from .meshgen import triangulate
    from .polygeom import PolygonalDomain

    domain = PolygonalDomain(sector_polygon(p.eps, p.beta, h), (), "sector")
    mesh = triangulate(domain, h, grading=1.0)
    u = interpolate_0form(mesh, lambda x, y: cutoff(p, np.hypot(x, y) * (1 + 1e-14)))
    du = incidence_d0(mesh).astype(float) @ u
    return float(du @ (mass_1(mesh) @ du))


# ---------------------------------------------------------------------------
# integration by parts for 1-forms on A

A_CELLS_UNIT = [
    (i, j) for i in range(-2, 2) for j in range(-2, 2) if not (-1 <= i < 1 and -1 <= j < 1)
]


@dataclass(frozen=True)
class Factor:
    """Univariate polynomial factor restricted to [lo, hi] (zero outside).

    A bump factor is s^2 (1 - s)^2 (c0 + c1 s), s = (t - lo)/(hi - lo): quintic
    and C^1 across the support ends.  A free factor is sum c_k t^k.
    """

    lo: float
    hi: float
    coeffs: tuple[float, ...]
    bump: bool

    def eval(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        inside = (t >= self.lo) & (t <= self.hi)
        if self.bump:
            L = self.hi - self.lo
            s = (t - self.lo) / L
            c0, c1 = self.coeffs
            core = s * s * (1 - s) ** 2
            dcore = 2 * s * (1 - s) ** 2 - 2 * s * s * (1 - s)
            lin = c0 + c1 * s
            val = core * lin
            der = (dcore * lin + core * c1) / L
        else:
            poly = np.polynomial.Polynomial(self.coeffs)
            val = poly(t)
            der = poly.deriv()(t)
        return np.where(inside, val, 0.0), np.where(inside, der, 0.0)


@dataclass(frozen=True)
class TestForm:
    """f dx + g dy with first partials, as sums of products of factors.

    ``f_terms``/``g_terms`` are lists of (x factor, y factor) pairs;
    closed-form forms pass callables instead.
    """

    __test__ = False  # not a pytest class

    name: str
    f_terms: tuple = ()
    g_terms: tuple = ()
    bc_compliant: bool = True
    closed: dict | None = field(default=None)

    def evaluate(self, x: np.ndarray, y: np.ndarray):
        """Return f, f_x, f_y, g, g_x, g_y at the points."""
        if self.closed is not None:
            c = self.closed
            return tuple(np.broadcast_to(c[k](x, y), np.shape(x)).astype(float)
                         for k in ("f", "fx", "fy", "g", "gx", "gy"))
        out = []
        for terms in (self.f_terms, self.g_terms):
            v = np.zeros_like(x, dtype=float)
            vx = np.zeros_like(v)
            vy = np.zeros_like(v)
            for fx_, fy_ in terms:
                a, da = fx_.eval(x)
                b, db = fy_.eval(y)
                v += a * b
                vx += da * b
                vy += a * db
            out += [v, vx, vy]
        return tuple(out)

    def f(self, x, y):
        return self.evaluate(np.asarray(x, float), np.asarray(y, float))[0]

    def g(self, x, y):
        return self.evaluate(np.asarray(x, float), np.asarray(y, float))[3]


def closed_form_test_form(name, f, fx, fy, g, gx, gy, bc_compliant=False) -> TestForm:
    return TestForm(name, bc_compliant=bc_compliant,
                    closed={"f": f, "fx": fx, "fy": fy, "g": g, "gx": gx, "gy": gy})


def quadrature_points_A(rule: QuadratureRule):
    """Nodes and weights of the tensor rule on A = [-2,2]^2 minus (-1,1)^2."""
    n_sub = int(round(1.0 / rule.cell))
    if abs(n_sub * rule.cell - 1.0) > 1e-12:
        raise ValueError("cell must divide 1")
    x, w = np.polynomial.legendre.leggauss(rule.points)
    xs, ws = [], []
    for i, j in A_CELLS_UNIT:
        for a in range(n_sub):
            for b in range(n_sub):
                x0, y0 = i + a * rule.cell, j + b * rule.cell
                xs.append(np.stack(np.meshgrid(x0 + 0.5 * rule.cell * (x + 1),
                                               y0 + 0.5 * rule.cell * (x + 1), indexing="ij"), -1).reshape(-1, 2))
                ws.append(np.outer(w, w).ravel() * (0.5 * rule.cell) ** 2)
    return np.vstack(xs), np.concatenate(ws)


def _bochner_sums(form: TestForm, rule: QuadratureRule):
    pts, wts = quadrature_points_A(rule)
    f, fx, fy, g, gx, gy = form.evaluate(pts[:, 0], pts[:, 1])
    lhs = float(np.dot(wts, (-fy + gx) ** 2 + (fx + gy) ** 2))
    rhs = float(np.dot(wts, fx**2 + fy**2 + gx**2 + gy**2))
    return lhs, rhs


def bochner_identity(form: TestForm, rule: QuadratureRule | None = None) -> tuple[float, float, float]:
    """(|(d + d*) w|^2, |grad f|^2 + |grad g|^2, difference) over A."""
    rule = rule or QuadratureRule()
    lhs, rhs = _bochner_sums(form, rule)
    lhs2, rhs2 = _bochner_sums(form, QuadratureRule(rule.points + 4, rule.cell, rule.kind))
    if abs(lhs2 - lhs) > 1e-10 * (1 + abs(lhs2)) or abs(rhs2 - rhs) > 1e-10 * (1 + abs(rhs2)):
        raise OracleError(f"quadrature for {form.name} not converged")
    return lhs, rhs, lhs - rhs


def trace_residual(form: TestForm, n: int = 101) -> float:
    """Largest |f| on vertical and |g| on horizontal boundary edges of A."""
    t2 = np.linspace(-2, 2, n)
    t1 = np.linspace(-1, 1, n)
    worst = 0.0
    for c in (-2.0, 2.0):
        worst = max(worst, np.abs(form.f(np.full(n, c), t2)).max(), np.abs(form.g(t2, np.full(n, c))).max())
    for c in (-1.0, 1.0):
        worst = max(worst, np.abs(form.f(np.full(n, c), t1)).max(), np.abs(form.g(t1, np.full(n, c))).max())
    return float(worst)


def _grid_interval(rng, lo: float, hi: float, min_len: float = 0.3) -> tuple[float, float]:
    """Random subinterval of [lo, hi] with endpoints on the 0.1 grid."""
    ticks = np.round(np.arange(lo, hi + 1e-9, 0.1), 10)
    while True:
        a, b = sorted(rng.choice(ticks, size=2, replace=False))
        if b - a >= min_len - 1e-9:
            return float(a), float(b)


def _bump(rng, lo, hi):
    a, b = _grid_interval(rng, lo, hi)
    return Factor(a, b, (float(rng.uniform(0.5, 2.0)), float(rng.uniform(-1.0, 1.0))), True)


def _free(rng, lo, hi):
    return Factor(lo, hi, tuple(float(c) for c in rng.uniform(-1.0, 1.0, 6)), False)


def random_bump_form(rng: np.random.Generator, name: str = "bump") -> TestForm:
    """A boundary-compliant form built from quintic bumps in the arms of A.

    Horizontal arms (|y| in [1, 2]) carry f = bump(x) * free(y) with the bump
    inside |x| < 0.8 and g = free(x) * bump(y) with the bump inside the open
    arm; vertical arms carry f = bump(x) * bump(y) and g = free(x) * bump(y).
    Every term vanishes near all eight corners; f may be nonzero on
    horizontal edges and g on vertical edges, as the conditions allow.
    """
    f_terms, g_terms = [], []
    for sign in (1.0, -1.0):
        ylo, yhi = (1.0, 2.0) if sign > 0 else (-2.0, -1.0)
        f_terms.append((_bump(rng, -0.8, 0.8), _free(rng, ylo, yhi)))
        g_terms.append((_free(rng, -2.0, 2.0), _bump(rng, ylo + 0.1, yhi - 0.1)))
        xlo, xhi = (1.0, 2.0) if sign > 0 else (-2.0, -1.0)
        f_terms.append((_bump(rng, xlo + 0.1, xhi - 0.1), _bump(rng, -0.8, 0.8)))
        g_terms.append((_free(rng, xlo, xhi), _bump(rng, -0.8, 0.8)))
    return TestForm(name, tuple(f_terms), tuple(g_terms), True)


def random_bump_forms(count: int = 10, seed: int = 0) -> list[TestForm]:
    rng = np.random.default_rng(seed)
    return [random_bump_form(rng, f"bump_{k}") for k in range(count)]


def violation_forms() -> list[TestForm]:
    """Forms breaking the boundary conditions; the identity picks up
    2 * integral of (f_x g_y - f_y g_x)."""
    one = lambda x, y: np.ones_like(x)
    zero = lambda x, y: np.zeros_like(x)
    return [
        closed_form_test_form("f=y,g=x", lambda x, y: y, zero, one, lambda x, y: x, one, zero),
        closed_form_test_form("f=x,g=y", lambda x, y: x, one, zero, lambda x, y: y, zero, one),
        closed_form_test_form("f=xy^2,g=y", lambda x, y: x * y * y, lambda x, y: y * y,
                              lambda x, y: 2 * x * y, lambda x, y: y, zero, one),
    ]
