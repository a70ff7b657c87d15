"""Interior Dirichlet, Neumann and Robin solvers plus spectral diagnostics.

The spectral routines all reduce to a symmetric-definite pencil handed to
``block_inverse_iteration``:

* Neumann (Poincare constant):  K x = mu M x, constants deflated
* Robin (Fredholm parameter):   (K + B) x = lam M x
* Steklov, trace variant:       (K + M) x = mu B1 x,  trace norm = mu_1^-1/2
* Steklov, classical:           K x = sigma B1 x, via (K + B1) x = (sigma + 1) B1 x
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fem
from .errors import CompatibilityError, MeshError, PreconditionError
from .fem import as_csr
from .iterative import block_inverse_iteration, cg
from .mesh import Mesh

SPECTRAL_TOL = 1e-8
COMPAT_TOL = 1e-10


@dataclass
class LinearSolveResult:
    solution: np.ndarray
    iterations: int
    relative_residual: float
    constraint_report: Optional[dict] = None


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    which: str
    mesh_h: float = float("nan")
    vectors: Optional[np.ndarray] = field(default=None, repr=False)

    def rows(self):
        for k, (lam, res) in enumerate(zip(self.eigenvalues, self.residuals), start=1):
            yield k, float(lam), float(res)


def solve_dirichlet(K, b, boundary_dofs, tol: float = 1e-10, x0=None, sink=None) -> LinearSolveResult:
    """u = 0 on the listed dofs; the remaining SPD block is solved by CG."""
    K = as_csr(K)
    n = K.shape[0]
    bd = np.unique(np.asarray(boundary_dofs, dtype=np.int64))
    if bd.size == 0:
        raise PreconditionError("Dirichlet solve needs at least one boundary dof")
    free = np.setdiff1d(np.arange(n), bd)
    b = np.asarray(b)
    u = np.zeros(n, dtype=np.result_type(b, float))
    if free.size:
        Kff = K[free][:, free]
        start = None if x0 is None else np.asarray(x0)[free]
        res = cg(Kff, b[free], tol=tol, x0=start, sink=sink)
        u[free] = res.x
        return LinearSolveResult(u, res.iterations, res.relative_residual)
    return LinearSolveResult(u, 0, 0.0)


def solve_neumann(K, M, b, tol: float = 1e-10, tol_compat: float = COMPAT_TOL,
                  sink=None) -> LinearSolveResult:
    """Zero-mean solution of K u = b; rejects loads with (F, 1) != 0."""
    K, M = as_csr(K), as_csr(M)
    b = np.asarray(b, dtype=float)
    n = K.shape[0]
    ones = np.ones(n)
    defect = float(ones @ b)
    bnorm = float(np.linalg.norm(b))
    if abs(defect) > tol_compat * max(bnorm, np.finfo(float).tiny):
        raise CompatibilityError(f"Neumann compatibility (F,1)=0 fails: defect {defect:.6g}", defect)
    m1 = M @ ones
    mass = float(ones @ m1)
    # quadrature noise below tol_compat is removed so the system is consistent
    b_c = b - defect * m1 / mass

    def project_residual(r):
        return r - np.outer(m1, ones @ r) / mass if r.ndim == 2 else r - m1 * (ones @ r) / mass

    res = cg(K, b_c, tol=tol, project=project_residual, sink=sink)
    u = res.x - (m1 @ res.x) / mass
    report = {"defect": defect, "mean_shift": float((m1 @ res.x) / mass),
              "note": "u + c solves the same problem for every constant c"}
    return LinearSolveResult(u, res.iterations, res.relative_residual, report)


def solve_robin(K, B, b, tol: float = 1e-10, sink=None) -> LinearSolveResult:
    """(K + B) u = b; positive definite as soon as h is not identically zero."""
    K, B = as_csr(K), as_csr(B)
    if not B.sum() > 0:
        raise PreconditionError("Robin reduces to Neumann; use solve_neumann")
    res = cg(K + B, b, tol=tol, sink=sink)
    return LinearSolveResult(res.x, res.iterations, res.relative_residual)


def robin_fredholm_spectrum(K, B, M, count: int = 5, tol: float = SPECTRAL_TOL,
                            mesh_h: float = float("nan")) -> SpectrumReport:
    K, B, M = as_csr(K), as_csr(B), as_csr(M)
    if not B.sum() > 0:
        raise PreconditionError("Robin spectrum needs h >= 0 with h not identically 0")
    eig = block_inverse_iteration(K + B, M, count, tol=tol)
    return SpectrumReport(eig.values, eig.residuals, "robin_fredholm", mesh_h, eig.vectors)


def neumann_spectrum(K, M, count: int = 1, tol: float = SPECTRAL_TOL,
                     mesh_h: float = float("nan")) -> SpectrumReport:
    """Nonzero eigenvalues of K x = mu M x (the constant mode is deflated)."""
    K, M = as_csr(K), as_csr(M)
    n = K.shape[0]
    eig = block_inverse_iteration(K + M, M, count, tol=tol, deflate=np.ones((n, 1)))
    return SpectrumReport(eig.values - 1.0, eig.residuals, "neumann", mesh_h, eig.vectors)


def poincare_constant(K, M, tol: float = SPECTRAL_TOL) -> float:
    """Best c in inf_m ||u - m|| <= c ||grad u||, i.e. 1 / sqrt(mu_2)."""
    mu2 = neumann_spectrum(K, M, 1, tol).eigenvalues[0]
    return 1.0 / math.sqrt(mu2)


def steklov_spectrum(K, M, B1, count: int = 5, tol: float = SPECTRAL_TOL, variant: str = "trace",
                     mesh_h: float = float("nan")) -> SpectrumReport:
    """Eigenvalues of the trace pencil; see the module docstring for variants.

    B1 vanishes on interior dofs, so the iteration A^-1 B1 X only ever sees
    harmonic (A-discrete-harmonic) extensions of boundary data.
    """
    K, M, B1 = as_csr(K), as_csr(M), as_csr(B1)
    if variant == "trace":
        eig = block_inverse_iteration(K + M, B1, count, tol=tol)
        return SpectrumReport(eig.values, eig.residuals, "trace", mesh_h, eig.vectors)
    if variant == "classical":
        eig = block_inverse_iteration(K + B1, B1, count, tol=tol)
        return SpectrumReport(eig.values - 1.0, eig.residuals, "steklov", mesh_h, eig.vectors)
    raise ValueError(f"unknown Steklov variant {variant!r}")


def trace_constant(mesh: Mesh, tol: float = SPECTRAL_TOL) -> float:
    """||u||_{L2(boundary)} <= c ||u||_{H1}: returns c = mu_1^-1/2."""
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    B1 = fem.assemble_boundary_mass(mesh, 1.0)
    mu1 = steklov_spectrum(K, M, B1, 1, tol).eigenvalues[0]
    return 1.0 / math.sqrt(mu1)


def _locate_inside(mesh: Mesh, points: np.ndarray, slack: float = 1e-9) -> np.ndarray:
    """True for points inside (or on) some triangle of ``mesh``."""
    p = mesh.vertices[mesh.triangles]
    out = np.zeros(len(points), dtype=bool)
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    for i, q in enumerate(points):
        l1 = ((b[:, 0] - q[0]) * (c[:, 1] - q[1]) - (b[:, 1] - q[1]) * (c[:, 0] - q[0])) / det
        l2 = ((c[:, 0] - q[0]) * (a[:, 1] - q[1]) - (c[:, 1] - q[1]) * (a[:, 0] - q[0])) / det
        l3 = 1.0 - l1 - l2
        out[i] = bool(np.any((l1 >= -slack) & (l2 >= -slack) & (l3 >= -slack)))
    return out


@dataclass
class UnionReport:
    trace_constants: dict
    bound: float
    passed: bool
    eigenvalues: np.ndarray
    floor: float


def union_embedding_check(mesh_a: Mesh, mesh_b: Mesh, mesh_union: Mesh, count: int = 3,
                          tol: float = SPECTRAL_TOL) -> UnionReport:
    """Compare the trace constant of U u V with the sum of the pieces' constants.

    Restricting w in H1(U u V) to each piece gives
    ||w||_{L2(d(U u V))} <= c_U ||w||_{H1(U)} + c_V ||w||_{H1(V)}
    <= (c_U + c_V) ||w||_{H1(U u V)}; hence mu_k(U u V) >= (c_U + c_V)^-2.
    """
    area_a, area_b, area_u = mesh_a.area(), mesh_b.area(), mesh_union.area()
    rel = 1e-9 * max(area_u, 1.0)
    if area_u < max(area_a, area_b) - rel or area_u > area_a + area_b + rel:
        raise MeshError("geometry mismatch: union area inconsistent with the pieces")
    pts = np.vstack([mesh_a.vertices, mesh_b.vertices])
    if not np.all(_locate_inside(mesh_union, pts)):
        raise MeshError("geometry mismatch: piece vertices outside the union mesh")

    def spectrum(m):
        K = fem.assemble_stiffness(m)
        M = fem.assemble_mass(m)
        B1 = fem.assemble_boundary_mass(m, 1.0)
        return steklov_spectrum(K, M, B1, count, tol).eigenvalues

    mu_a, mu_b, mu_u = spectrum(mesh_a), spectrum(mesh_b), spectrum(mesh_union)
    c = {"U": 1 / math.sqrt(mu_a[0]), "V": 1 / math.sqrt(mu_b[0]), "union": 1 / math.sqrt(mu_u[0])}
    bound = c["U"] + c["V"]
    floor = bound ** -2
    passed = bool(c["union"] <= bound * (1 + 1e-9) and np.all(mu_u >= floor * (1 - 1e-9)))
    return UnionReport(c, bound, passed, mu_u, floor)
