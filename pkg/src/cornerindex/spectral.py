"""Low spectrum of the constrained Hodge Laplacians, kernel counting, and the
refinement studies built on top of them."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .deccomplex import BoundaryConditionSpec, LaplacianPair, assemble, hodge_laplacian
from .meshgen import SimplicialMesh, triangulate
from .polygeom import PolygonalDomain, edge_direction_tag

KERNEL_RTOL = 1e-9
MIN_GAP_RATIO = 1e3
DEFAULT_SHIFT = -0.05
MAX_ITER = 10_000

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class AmbiguousKernelError(RuntimeError):
    """Kernel count not certified by the gap rule; refine or raise m."""


@dataclass(frozen=True)
class Eigenpairs:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray


def low_spectrum(
    stiffness,
    mass=None,
    m: int = 6,
    tol: float = 1e-10,
    sigma: float = DEFAULT_SHIFT,
    seed: int = 0,
    shifted_solver: LinearOperator | None = None,
) -> Eigenpairs:
    """The m smallest eigenpairs of K v = lambda M v by shift-invert Lanczos.

    Residuals are measured as |K v - lambda M v|_{M^-1} for M-normalized v and
    must stay below ``tol`` times the spectral radius of M^-1 K.

    ``stiffness`` is a sparse matrix or a LaplacianPair (which supplies its own
    saddle-point shifted solver).  Eigenvalues are Rayleigh quotients of the
    returned M-normalized vectors.
    """
    if isinstance(stiffness, LaplacianPair):
        pair = stiffness
        mass = pair.mass
        K = pair.stiffness
        matvec = pair.matvec
        shifted_solver = shifted_solver or pair.shifted_solver(sigma)
    else:
        K = sp.csr_matrix(stiffness)
        matvec = K.__matmul__
        if shifted_solver is None:
            lu = splu((K - sigma * mass).tocsc())
            shifted_solver = LinearOperator(K.shape, matvec=lu.solve, dtype=float)
    n = mass.shape[0]
    if m < 1:
        raise ValueError("m must be >= 1")
    if n <= m + 1:
        # too small for Lanczos: dense fallback
        Kd = np.column_stack([matvec(e) for e in np.eye(n)])
        from scipy.linalg import eigh

        vals, vecs = eigh(0.5 * (Kd + Kd.T), mass.toarray())
        vals, vecs = vals[:m], vecs[:, :m]
    else:
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            vals, vecs = eigsh(K, k=m, M=mass, sigma=sigma, OPinv=shifted_solver,
                               which="LM", v0=v0, maxiter=MAX_ITER, tol=0)
        except ArpackNoConvergence as exc:
            raise SolverError("shift-invert Lanczos did not converge") from exc
    order = np.argsort(vals)
    vecs = vecs[:, order]
    Mlu = splu(sp.csc_matrix(mass))
    values, residuals = [], []
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        Mv = mass @ v
        vnorm2 = float(v @ Mv)
        v = v / math.sqrt(vnorm2)
        vecs[:, j] = v
        Mv = Mv / math.sqrt(vnorm2)
        Kv = matvec(v)
        lam = float(v @ Kv)
        r = Kv - lam * Mv
        values.append(lam)
        residuals.append(math.sqrt(max(float(r @ Mlu.solve(r)), 0.0)))
    values = np.array(values)
    residuals = np.array(residuals)
    scale = max(1.0, float(np.max(np.abs(values))), spectral_radius(matvec, mass, Mlu, seed))
    if np.any(residuals > tol * scale):
        raise SolverError("eigenpair residual above tolerance", float(residuals.max()))
    return Eigenpairs(values, vecs, residuals)


def spectral_radius(matvec, mass, mass_lu=None, seed: int = 0, iters: int = 30) -> float:
    """Power-iteration estimate of the largest eigenvalue of M^-1 K."""
    mass_lu = mass_lu or splu(sp.csc_matrix(mass))
    v = np.random.default_rng(seed + 1).standard_normal(mass.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = mass_lu.solve(matvec(v))
        norm = math.sqrt(max(float(w @ (mass @ w)), 0.0))
        if norm == 0.0:
            return 0.0
        lam = norm / math.sqrt(float(v @ (mass @ v)))
        v = w / norm
    return lam


@dataclass(frozen=True)
class KernelCount:
    count: int | None
    gap_ratio: float
    threshold: float

    @property
    def ambiguous(self) -> bool:
        return self.count is None


def classify_kernel(eigenvalues, rtol: float = KERNEL_RTOL, min_gap: float = MIN_GAP_RATIO) -> KernelCount:
    """Count eigenvalues below rtol * (spectral scale), certified by a gap.

    The spectral scale is the median of the upper half of the reported
    eigenvalues; the count is accepted only when the first retained
    eigenvalue exceeds the last discarded one (floored at the threshold) by
    ``min_gap``.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    top = lam[len(lam) // 2 :]
    scale = float(np.median(np.abs(top)))
    tau = rtol * scale
    count = int(np.count_nonzero(lam < tau))
    if count >= len(lam) or scale == 0.0:
        return KernelCount(None, 0.0, tau)
    floor = max(lam[count - 1], tau) if count else tau
    gap = float(lam[count] / floor)
    if gap < min_gap:
        return KernelCount(None, gap, tau)
    return KernelCount(count, gap, tau)


def kernel_dimension(eigenvalues, rtol: float = KERNEL_RTOL, min_gap: float = MIN_GAP_RATIO) -> int:
    kc = classify_kernel(eigenvalues, rtol, min_gap)
    if kc.ambiguous:
        raise AmbiguousKernelError(
            f"kernel count is AMBIGUOUS (gap ratio {kc.gap_ratio:.3g} < {min_gap:g})"
        )
    return kc.count


@dataclass(frozen=True)
class SpectralReport:
    degree: int
    bc: str
    h: float
    rho: float
    eigenvalues: np.ndarray
    kernel_count: int | None
    gap_ratio: float
    threshold: float
    max_residual: float
    n_dofs: int
    wall_time: float

    @property
    def ambiguous(self) -> bool:
        return self.kernel_count is None

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])


def spectral_report(mesh: SimplicialMesh, bc: BoundaryConditionSpec, degree: int, m: int = 6,
                    tol: float = 1e-10, seed: int = 0) -> SpectralReport:
    t0 = time.perf_counter()
    system = assemble(mesh, bc)
    pair = hodge_laplacian(system, degree)
    eig = low_spectrum(pair, m=m, tol=tol, seed=seed)
    kc = classify_kernel(eig.values)
    return SpectralReport(
        degree, bc.describe(), mesh.h, bc.rho, eig.values, kc.count, kc.gap_ratio, kc.threshold,
        float(eig.residuals.max()), pair.n, time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# refinement studies


@dataclass
class StudyPoint:
    h: float
    rho: float
    reports: list[SpectralReport]
    value: float | None  # index or lambda_min
    verdict: str


@dataclass
class RefinementStudy:
    kind: str
    domain: str
    bc_family: str
    points: list[StudyPoint] = field(default_factory=list)
    verdict: str = INCONCLUSIVE
    notes: dict = field(default_factory=dict)

    def rows(self, m: int | None = None) -> list[dict]:
        out = []
        for pt in self.points:
            for rep in pt.reports:
                row = {"degree": rep.degree, "h": pt.h, "rho": pt.rho, "bc": rep.bc}
                lam = list(rep.eigenvalues)
                width = m or len(lam)
                for i in range(width):
                    row[f"lambda_{i + 1}"] = lam[i] if i < len(lam) else ""
                row["kernel_count"] = "AMBIGUOUS" if rep.kernel_count is None else rep.kernel_count
                row["gap_ratio"] = rep.gap_ratio
                row["verdict"] = pt.verdict
                out.append(row)
        return out


def _mesh(domain, h, grading, structured):
    return triangulate(domain, h, grading, structured=structured)


def index_study(
    domain: PolygonalDomain,
    hs,
    rhos,
    odd_treatment: str = "minimal",
    expected: int = 1,
    grading: float = 2.0,
    structured: bool = False,
    m: int = 6,
    seed: int = 0,
) -> RefinementStudy:
    """ind = dim ker(even, maximal) - dim ker(odd, treatment) over an (h, rho) grid.

    ``odd_treatment='maximal'`` is the control in which both parities use the
    maximal treatment; rho is then irrelevant and one point per h is produced.
    """
    hs = sorted(hs, reverse=True)
    study = RefinementStudy("index", domain.name, f"even maximal / odd {odd_treatment}")
    for h in hs:
        mesh = _mesh(domain, h, grading, structured)
        even = [spectral_report(mesh, BoundaryConditionSpec.maximal(), k, m, seed=seed) for k in (0, 2)]
        rho_list = list(rhos) if odd_treatment == "minimal" else [0.0]
        for rho in rho_list:
            bc = BoundaryConditionSpec.minimal(rho) if odd_treatment == "minimal" else BoundaryConditionSpec.maximal()
            odd = spectral_report(mesh, bc, 1, m, seed=seed)
            reps = [*even, odd]
            if any(r.ambiguous for r in reps):
                study.points.append(StudyPoint(h, rho, reps, None, INCONCLUSIVE))
                continue
            ind = even[0].kernel_count + even[1].kernel_count - odd.kernel_count
            study.points.append(StudyPoint(h, rho, reps, ind, PASS if ind == expected else FAIL))
    study.verdict = _combine(p.verdict for p in study.points)
    study.notes["expected_index"] = expected
    return study


def poincare_floor(domain: PolygonalDomain) -> float | None:
    """(pi / L)^2 with L the longest axis-parallel chord, for axis-aligned domains.

    Under the minimal treatment f vanishes at both ends of every horizontal
    chord and g at both ends of every vertical chord, so the squared-gradient
    form of |(d + delta) w|^2 dominates (pi/L)^2 |w|^2.
    """
    if any(edge_direction_tag(a, b) == "oblique" for _, _, a, b in domain.edges()):
        return None
    lo, hi = domain.outer.min(axis=0), domain.outer.max(axis=0)
    L = float(max(hi - lo))
    return (math.pi / L) ** 2


def gap_study(
    domain: PolygonalDomain,
    rhos,
    hs,
    treatment: str = "minimal",
    degree: int = 1,
    floor: float | None = None,
    grading: float = 2.0,
    structured: bool = False,
    m: int = 4,
    stabilization: float = 0.10,
    zero_tol: float = 1e-10,
    seed: int = 0,
) -> RefinementStudy:
    """lambda_min of the degree-1 Laplacian over rho series x h-refinement.

    Minimal treatment: PASS when, for each rho, lambda_min changes by less than
    ``stabilization`` between the two finest meshes and every stabilized value
    is >= ``floor``.  Maximal treatment: PASS when lambda_min <= zero_tol at
    every level.
    """
    hs = sorted(hs, reverse=True)
    if treatment == "minimal" and floor is None:
        floor = poincare_floor(domain)
        if floor is None:
            raise ValueError("no default floor for a non-axis-aligned domain; pass floor=")
    study = RefinementStudy("gap", domain.name, f"degree {degree} {treatment}")
    meshes = {h: _mesh(domain, h, grading, structured) for h in hs}
    rho_list = list(rhos) if treatment == "minimal" else [0.0]
    stabilized = {}
    for rho in rho_list:
        bc = BoundaryConditionSpec.minimal(rho) if treatment == "minimal" else BoundaryConditionSpec.maximal()
        series = []
        for h in hs:
            rep = spectral_report(meshes[h], bc, degree, m, seed=seed)
            lam = rep.lambda_min
            if treatment == "maximal":
                verdict = PASS if lam <= zero_tol else FAIL
            else:
                verdict = PASS if lam >= floor else FAIL
            series.append(StudyPoint(h, rho, [rep], lam, verdict))
        if treatment == "minimal" and len(series) >= 2:
            a, b = series[-2].value, series[-1].value
            change = abs(a - b) / abs(b)
            stabilized[rho] = {"lambda_min": b, "relative_change": change}
            if change >= stabilization:
                series[-1].verdict = FAIL
        study.points.extend(series)
    study.verdict = _combine(p.verdict for p in study.points)
    study.notes.update({"floor": floor, "stabilized": stabilized})
    return study


def _combine(verdicts) -> str:
    verdicts = list(verdicts)
    if not verdicts:
        return INCONCLUSIVE
    if FAIL in verdicts:
        return FAIL
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return PASS
