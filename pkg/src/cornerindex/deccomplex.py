"""Whitney cochain complex on a triangle mesh, with absolute boundary conditions.

Degrees of freedom are vertex values (degree 0), signed edge integrals
(degree 1, edges oriented low -> high vertex index) and triangle integrals
(degree 2).  The mass matrices are the exact L2 Gram matrices of the lowest
order Whitney forms.

Absolute boundary conditions are the natural conditions of this complex: the
normal component of a 1-form and the trace of a 2-form coefficient vanish
weakly, through the codifferential, so no degree of freedom is removed for
them.  The minimal vertex treatment additionally deletes every degree of
freedom meeting a disk of radius rho around a domain corner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, splu

from .meshgen import SimplicialMesh, corner_disks
from .polygeom import format_float


class AssemblyError(RuntimeError):
    pass


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryConditionSpec:
    kind: str = "absolute"
    vertex_treatment: str = "maximal"  # or "minimal"
    rho: float = 0.0
    affected_degrees: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        if self.kind != "absolute":
            raise ValueError("only absolute boundary conditions are modelled")
        if self.vertex_treatment not in ("minimal", "maximal"):
            raise ValueError("vertex_treatment must be 'minimal' or 'maximal'")
        if self.vertex_treatment == "minimal" and self.rho <= 0:
            raise ValueError("minimal treatment needs rho > 0")

    @classmethod
    def maximal(cls):
        return cls("absolute", "maximal", 0.0)

    @classmethod
    def minimal(cls, rho: float, degrees=(0, 1, 2)):
        return cls("absolute", "minimal", float(rho), tuple(degrees))

    def describe(self) -> str:
        if self.vertex_treatment == "maximal":
            return "absolute/maximal"
        return f"absolute/minimal(rho={self.rho:g})"


@dataclass(frozen=True)
class Cochain:
    degree: int
    values: np.ndarray

    def check(self, mesh: SimplicialMesh) -> None:
        n = (mesh.n_vertices, mesh.n_edges, mesh.n_triangles)[self.degree]
        if len(self.values) != n:
            raise ValueError(f"degree-{self.degree} cochain needs {n} values, got {len(self.values)}")


# ---------------------------------------------------------------------------
# element matrices


def incidence_d0(mesh: SimplicialMesh) -> sp.csr_matrix:
    E = mesh.edges
    n = len(E)
    rows = np.repeat(np.arange(n), 2)
    cols = E.ravel()
    vals = np.tile([-1, 1], n)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, mesh.n_vertices), dtype=np.int64)


def incidence_d1(mesh: SimplicialMesh) -> sp.csr_matrix:
    F = mesh.n_triangles
    rows = np.repeat(np.arange(F), 3)
    return sp.csr_matrix(
        (mesh.triangle_edge_signs.ravel(), (rows, mesh.triangle_edges.ravel())),
        shape=(F, mesh.n_edges),
        dtype=np.int64,
    )


def barycentric_gradients(mesh: SimplicialMesh) -> np.ndarray:
    """(F, 3, 2) gradients of the barycentric coordinates."""
    p = mesh.vertices[mesh.triangles]
    area2 = 2.0 * mesh.signed_areas
    g = np.empty((mesh.n_triangles, 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        e = p[:, k] - p[:, j]
        g[:, i, 0] = -e[:, 1] / area2
        g[:, i, 1] = e[:, 0] / area2
    return g


def mass_0(mesh: SimplicialMesh) -> sp.csr_matrix:
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    vals = mesh.signed_areas[:, None, None] * local[None]
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    return sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2)


_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def mass_1(mesh: SimplicialMesh) -> sp.csr_matrix:
    g = barycentric_gradients(mesh)
    G = np.einsum("fad,fbd->fab", g, g)
    L = mesh.signed_areas[:, None, None] * ((np.ones((3, 3)) + np.eye(3)) / 12.0)[None]
    M = np.empty((mesh.n_triangles, 3, 3))
    for e, (i, j) in enumerate(_LOCAL_EDGES):
        for f, (k, l) in enumerate(_LOCAL_EDGES):
            M[:, e, f] = (
                L[:, i, k] * G[:, j, l]
                - L[:, i, l] * G[:, j, k]
                - L[:, j, k] * G[:, i, l]
                + L[:, j, l] * G[:, i, k]
            )
    s = mesh.triangle_edge_signs.astype(float)
    M *= s[:, :, None] * s[:, None, :]
    te = mesh.triangle_edges
    rows = np.repeat(te, 3, axis=1).ravel()
    cols = np.tile(te, (1, 3)).ravel()
    return sp.csr_matrix((M.ravel(), (rows, cols)), shape=(mesh.n_edges,) * 2)


def mass_2(mesh: SimplicialMesh) -> sp.csr_matrix:
    return sp.diags(1.0 / mesh.signed_areas).tocsr()


# ---------------------------------------------------------------------------
# assembled system


@dataclass(frozen=True, eq=False)
class HodgeSystem:
    mesh: SimplicialMesh
    d0: sp.csr_matrix
    d1: sp.csr_matrix
    M0: sp.csr_matrix
    M1: sp.csr_matrix
    M2: sp.csr_matrix
    bc: BoundaryConditionSpec
    constrained: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)

    @property
    def masses(self):
        return (self.M0, self.M1, self.M2)

    @property
    def sizes(self):
        return (self.mesh.n_vertices, self.mesh.n_edges, self.mesh.n_triangles)

    def free(self, degree: int) -> np.ndarray:
        mask = np.ones(self.sizes[degree], dtype=bool)
        mask[self.constrained[degree]] = False
        return np.flatnonzero(mask)

    @cached_property
    def _mass_factors(self):
        return tuple(splu(M.tocsc()) for M in self.masses)

    def mass_solve(self, degree: int, rhs: np.ndarray) -> np.ndarray:
        return self._mass_factors[degree].solve(np.asarray(rhs, dtype=float))

    def d(self, degree: int) -> sp.csr_matrix:
        return (self.d0, self.d1)[degree]

    def codifferential(self, degree: int, b: np.ndarray) -> np.ndarray:
        """delta_k = M_{k-1}^{-1} d_{k-1}^T M_k, mapping degree k to degree k-1."""
        if degree not in (1, 2):
            raise ValueError("codifferential is defined on degrees 1 and 2")
        D = self.d(degree - 1)
        return self.mass_solve(degree - 1, D.T @ (self.masses[degree] @ b))

    def inner(self, degree: int, a: np.ndarray, b: np.ndarray) -> float:
        return float(a @ (self.masses[degree] @ b))


def assemble(mesh: SimplicialMesh, bc: BoundaryConditionSpec | None = None) -> HodgeSystem:
    if mesh.boundary_tags is None or len(mesh.boundary_tags) != len(mesh.boundary_edges):
        raise AssemblyError("mesh boundary is untagged; run tag_boundary first")
    bc = bc or BoundaryConditionSpec.maximal()
    constrained = [np.zeros(0, dtype=np.int64)] * 3
    if bc.vertex_treatment == "minimal":
        disks = corner_disks(mesh, bc.rho)
        members = [
            np.unique(np.concatenate([d.vertices for d in disks])).astype(np.int64),
            np.unique(np.concatenate([d.edges for d in disks])).astype(np.int64),
            np.unique(np.concatenate([d.triangles for d in disks])).astype(np.int64),
        ]
        constrained = [members[k] if k in bc.affected_degrees else constrained[k] for k in range(3)]
    return HodgeSystem(
        mesh,
        incidence_d0(mesh),
        incidence_d1(mesh),
        mass_0(mesh),
        mass_1(mesh),
        mass_2(mesh),
        bc,
        tuple(constrained),
    )


# ---------------------------------------------------------------------------
# Hodge Laplacian


@dataclass(eq=False)
class LaplacianPair:
    """Delta_k = delta d + d delta on the free degrees of freedom of degree k.

    The stiffness is A + C^T M_{k-1}^{-1} C with A = d_k^T M_{k+1} d_k and
    C = d_{k-1}^T M_k; the inverse mass makes it dense, so it is only ever
    applied.  Shifted solves go through the sparse saddle-point system
    [[-M_{k-1}, C], [C^T, A - sigma M_k]].
    """

    system: HodgeSystem
    degree: int
    free: np.ndarray
    A: sp.csr_matrix
    C: sp.csr_matrix | None
    mass: sp.csr_matrix

    @property
    def n(self) -> int:
        return len(self.free)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.A @ x
        if self.C is not None:
            y = y + self.C.T @ self.system.mass_solve(self.degree - 1, self.C @ x)
        return y

    @property
    def stiffness(self) -> LinearOperator:
        return LinearOperator((self.n, self.n), matvec=self.matvec, dtype=float)

    def stiffness_matrix(self) -> np.ndarray:
        """Dense stiffness; small meshes only."""
        K = self.A.toarray()
        if self.C is not None:
            Cd = self.C.toarray()
            M = self.system.masses[self.degree - 1].toarray()
            K = K + Cd.T @ np.linalg.solve(M, Cd)
        return K

    def shifted_solver(self, sigma: float) -> LinearOperator:
        """(K - sigma M)^{-1} as a LinearOperator."""
        Kshift = (self.A - sigma * self.mass).tocsc()
        if self.C is None:
            lu = splu(Kshift)
            return LinearOperator((self.n, self.n), matvec=lu.solve, dtype=float)
        Mprev = self.system.masses[self.degree - 1]
        m = Mprev.shape[0]
        S = sp.bmat([[-Mprev, self.C], [self.C.T, Kshift]]).tocsc()
        lu = splu(S)

        def solve(b):
            rhs = np.concatenate([np.zeros(m), np.ravel(b)])
            return lu.solve(rhs)[m:]

        return LinearOperator((self.n, self.n), matvec=solve, dtype=float)


def hodge_laplacian(system: HodgeSystem, degree: int) -> LaplacianPair:
    if degree not in (0, 1, 2):
        raise ValueError("degree must be 0, 1 or 2")
    free = system.free(degree)
    Mk = system.masses[degree]
    if degree < 2:
        D = system.d(degree).astype(float)
        A = (D.T @ system.masses[degree + 1] @ D).tocsr()
    else:
        A = sp.csr_matrix((system.sizes[2], system.sizes[2]))
    C = None
    if degree > 0:
        C = (system.d(degree - 1).astype(float).T @ Mk).tocsr()[:, free]
    return LaplacianPair(system, degree, free, A[free][:, free].tocsr(), C, Mk[free][:, free].tocsr())


def apply_dirac(system: HodgeSystem, forms):
    """(d + delta) on a graded triple (u0, u1, u2) -> (delta u1, d u0 + delta u2, d u1)."""
    u0, u1, u2 = (np.asarray(u, dtype=float) for u in forms)
    for k, u in enumerate((u0, u1, u2)):
        if len(u) != system.sizes[k]:
            raise ValueError(f"degree-{k} component has wrong length")
        c = system.constrained[k]
        if c.size and np.any(u[c] != 0):
            raise ConstraintError(f"degree-{k} input is nonzero on constrained degrees of freedom")
    out0 = system.codifferential(1, u1)
    out1 = system.d0 @ u0 + system.codifferential(2, u2)
    out2 = system.d1 @ u1
    return out0, out1, out2


def dirac_energy(system: HodgeSystem, u1: np.ndarray) -> float:
    """|(d + delta) u1|^2 in the mass inner products."""
    du = system.d1 @ u1
    delta = system.codifferential(1, u1)
    return system.inner(2, du, du) + system.inner(0, delta, delta)


# ---------------------------------------------------------------------------
# interpolation of smooth forms

_GL = np.polynomial.legendre.leggauss(6)


def interpolate_0form(mesh: SimplicialMesh, fn) -> np.ndarray:
    return np.asarray(fn(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)


def interpolate_1form(mesh: SimplicialMesh, f, g) -> np.ndarray:
    """Edge integrals of f dx + g dy along edges oriented low -> high."""
    x, w = _GL
    t = 0.5 * (x + 1.0)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    tang = b - a
    pts = a[:, None, :] + t[None, :, None] * tang[:, None, :]
    fv = f(pts[..., 0], pts[..., 1])
    gv = g(pts[..., 0], pts[..., 1])
    integrand = fv * tang[:, 0:1] + gv * tang[:, 1:2]
    return 0.5 * integrand @ w


def interpolate_2form(mesh: SimplicialMesh, fn) -> np.ndarray:
    """Triangle integrals of fn dx^dy (degree-4 exact symmetric rule)."""
    bary = np.array([
        [1 / 3, 1 / 3, 1 / 3],
        [0.059715871789770, 0.470142064105115, 0.470142064105115],
        [0.470142064105115, 0.059715871789770, 0.470142064105115],
        [0.470142064105115, 0.470142064105115, 0.059715871789770],
        [0.797426985353087, 0.101286507323456, 0.101286507323456],
        [0.101286507323456, 0.797426985353087, 0.101286507323456],
        [0.101286507323456, 0.101286507323456, 0.797426985353087],
    ])
    wts = np.array([0.225, 0.132394152788506, 0.132394152788506, 0.132394152788506,
                    0.125939180544827, 0.125939180544827, 0.125939180544827])
    p = mesh.vertices[mesh.triangles]
    pts = np.einsum("qk,fkd->fqd", bary, p)
    vals = fn(pts[..., 0], pts[..., 1])
    return mesh.signed_areas * (vals @ wts)


# ---------------------------------------------------------------------------
# export


def write_coo(matrix, path) -> None:
    """Coordinate (row, col, value) plain text, one nonzero per line."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}"]
    lines += [f"{r} {c} {format_float(v)}" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order])]
    Path(path).write_text("\n".join(lines) + "\n")
