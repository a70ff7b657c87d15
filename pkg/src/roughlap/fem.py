"""P1 assembly of stiffness, mass, boundary mass and load.

Axisymmetric meshes carry (r, z) coordinates; every integral then picks up the
weight 2 pi r, integrated exactly for the polynomial integrands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .mesh import Mesh

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SymSparse:
    """Symmetric sparse matrix stored as its upper triangle (row <= col)."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    scalar: str = "real"
    _full: sp.csr_matrix = field(default=None, repr=False, compare=False)

    @classmethod
    def from_triplets(cls, dim, rows, cols, vals) -> "SymSparse":
        rows, cols = np.asarray(rows), np.asarray(cols)
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        keep = rows <= cols  # local blocks are symmetric: the lower half is redundant
        upper = sp.coo_matrix((np.asarray(vals)[keep], (lo[keep], hi[keep])), shape=(dim, dim)).tocsr()
        upper.sum_duplicates()
        upper.sort_indices()
        return cls.from_upper(upper)

    @classmethod
    def from_upper(cls, upper) -> "SymSparse":
        upper = sp.triu(upper).tocoo()
        order = np.lexsort((upper.col, upper.row))
        r, c, v = upper.row[order], upper.col[order], upper.data[order]
        scalar = "complex" if np.iscomplexobj(v) else "real"
        return cls(upper.shape[0], r.astype(np.int64), c.astype(np.int64), v, scalar)

    @classmethod
    def from_matrix(cls, matrix) -> "SymSparse":
        return cls.from_upper(sp.csr_matrix(matrix))

    def tocsr(self) -> sp.csr_matrix:
        if self._full is None:
            up = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim))
            off = self.rows != self.cols
            low = sp.coo_matrix((self.vals[off], (self.cols[off], self.rows[off])), shape=(self.dim, self.dim))
            full = (up + low).tocsr()
            full.sort_indices()
            object.__setattr__(self, "_full", full)
        return self._full

    def __matmul__(self, x):
        return self.tocsr() @ x

    def __add__(self, other: "SymSparse") -> "SymSparse":
        return SymSparse.from_upper(sp.triu(self.tocsr() + other.tocsr()))

    def __sub__(self, other: "SymSparse") -> "SymSparse":
        return SymSparse.from_upper(sp.triu(self.tocsr() - other.tocsr()))

    def __mul__(self, c) -> "SymSparse":
        v = self.vals * c
        return SymSparse(self.dim, self.rows, self.cols, v, "complex" if np.iscomplexobj(v) else "real")

    __rmul__ = __mul__

    def diagonal(self) -> np.ndarray:
        return self.tocsr().diagonal()

    def toarray(self) -> np.ndarray:
        return self.tocsr().toarray()

    def total(self) -> complex:
        """Sum of all entries of the full matrix, i.e. 1^T A 1."""
        return self.tocsr().sum()

    def write_text(self, path) -> None:
        with open(path, "w") as fh:
            for i, j, v in zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()):
                fh.write(f"{i} {j} {v!r}\n")


def as_csr(A) -> sp.csr_matrix:
    if isinstance(A, SymSparse):
        return A.tocsr()
    return sp.csr_matrix(A)


@dataclass(frozen=True)
class RobinCoefficient:
    """Nonnegative h, piecewise constant per boundary marker or per edge."""

    per_marker: Optional[dict] = None
    per_edge: Optional[np.ndarray] = None
    default: float = 0.0

    @classmethod
    def constant(cls, value: float) -> "RobinCoefficient":
        return cls(per_marker={}, default=float(value))

    def edge_values(self, mesh: Mesh) -> np.ndarray:
        if self.per_edge is not None:
            h = np.asarray(self.per_edge, dtype=float)
            if h.shape != (len(mesh.boundary_edges),):
                raise AssemblyError("per-edge Robin table does not match the boundary edges")
        else:
            table = self.per_marker or {}
            h = np.array([float(table.get(int(m), self.default)) for m in mesh.boundary_markers])
        if np.any(h < 0):
            raise AssemblyError("Robin coefficient must be nonnegative")
        return h


@dataclass(frozen=True)
class Field:
    mesh: Mesh
    coefficients: np.ndarray
    scalar: str = "real"

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.shape != (self.mesh.nv,):
            raise AssemblyError("field length must equal the vertex count")
        object.__setattr__(self, "scalar", "complex" if np.iscomplexobj(c) else "real")


def _geometry(mesh: Mesh):
    p = mesh.vertices[mesh.triangles]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(area <= 0):
        raise AssemblyError(f"zero area at triangle {int(np.argmin(area))}")
    return p, area


def p1_gradients(mesh: Mesh):
    """Constant gradients of the three barycentric functions on each triangle."""
    p, area = _geometry(mesh)
    grads = np.empty((mesh.nt, 3, 2))
    for i in range(3):
        a, b = p[:, (i + 1) % 3], p[:, (i + 2) % 3]
        grads[:, i, 0] = (a[:, 1] - b[:, 1]) / (2 * area)
        grads[:, i, 1] = (b[:, 0] - a[:, 0]) / (2 * area)
    return grads, area


def _scatter(mesh: Mesh, local: np.ndarray) -> SymSparse:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    return SymSparse.from_triplets(mesh.nv, rows, cols, local.reshape(len(t), 9).ravel())


def assemble_stiffness(mesh: Mesh) -> SymSparse:
    grads, area = p1_gradients(mesh)
    weight = area
    if mesh.axisymmetric:
        weight = area * TWO_PI * mesh.vertices[mesh.triangles, 0].mean(axis=1)
    local = np.einsum("t,tid,tjd->tij", weight, grads, grads)
    return _scatter(mesh, local)


def assemble_mass(mesh: Mesh) -> SymSparse:
    _, area = _geometry(mesh)
    if not mesh.axisymmetric:
        base = np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]]) / 12.0
        local = area[:, None, None] * base[None]
    else:
        # exact: integral of r l_i l_j with r = sum_k r_k l_k
        r = mesh.vertices[mesh.triangles, 0]
        local = np.empty((mesh.nt, 3, 3))
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for k in range(3):
                    mult = len({i, j, k})
                    coef = {1: 1 / 10, 2: 1 / 30, 3: 1 / 60}[mult]
                    acc = acc + coef * r[:, k]
                local[:, i, j] = TWO_PI * area * acc
    return _scatter(mesh, local)


def assemble_boundary_mass(mesh: Mesh, h: Union[RobinCoefficient, float] = 1.0) -> SymSparse:
    if not isinstance(h, RobinCoefficient):
        h = RobinCoefficient.constant(float(h))
    hv = h.edge_values(mesh)
    be = mesh.boundary_edges
    a, b = be[:, 0], be[:, 1]
    length = np.linalg.norm(mesh.vertices[b] - mesh.vertices[a], axis=1)
    if not mesh.axisymmetric:
        d = hv * length / 3.0
        o = hv * length / 6.0
        daa, dbb = d, d
    else:
        ra, rb = mesh.vertices[a, 0], mesh.vertices[b, 0]
        daa = TWO_PI * hv * length * (ra / 4 + rb / 12)
        dbb = TWO_PI * hv * length * (ra / 12 + rb / 4)
        o = TWO_PI * hv * length * (ra + rb) / 12
    rows = np.concatenate([a, b, np.minimum(a, b)])
    cols = np.concatenate([a, b, np.maximum(a, b)])
    return SymSparse.from_triplets(mesh.nv, rows, cols, np.concatenate([daa, dbb, o]))


def assemble_load(mesh: Mesh, F: Union[Callable, np.ndarray, float]) -> np.ndarray:
    """b_i = integral of F phi_i by the edge-midpoint rule (exact for quadratics)."""
    _, area = _geometry(mesh)
    t = mesh.triangles
    v = mesh.vertices
    mids = np.stack([0.5 * (v[t[:, 0]] + v[t[:, 1]]),
                     0.5 * (v[t[:, 1]] + v[t[:, 2]]),
                     0.5 * (v[t[:, 2]] + v[t[:, 0]])], axis=1)
    if callable(F):
        fq = np.asarray(F(mids[..., 0], mids[..., 1]))
        fq = np.broadcast_to(fq, mids.shape[:2])
    elif np.isscalar(F):
        fq = np.full(mids.shape[:2], F)
    else:
        fv = np.asarray(F)
        fq = np.stack([0.5 * (fv[t[:, 0]] + fv[t[:, 1]]),
                       0.5 * (fv[t[:, 1]] + fv[t[:, 2]]),
                       0.5 * (fv[t[:, 2]] + fv[t[:, 0]])], axis=1)
    if mesh.axisymmetric:
        fq = fq * TWO_PI * mids[..., 0]
    # barycentric values at midpoints (01, 12, 20): vertex 0 -> (1/2, 0, 1/2)
    lam = np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
    local = (area / 3.0)[:, None] * (fq @ lam.T)
    b = np.zeros(mesh.nv, dtype=np.result_type(fq, float))
    np.add.at(b, t.ravel(), local.ravel())
    return b


def interpolate(mesh: Mesh, f: Callable) -> np.ndarray:
    return np.asarray(f(mesh.vertices[:, 0], mesh.vertices[:, 1]))


class Norms(NamedTuple):
    l2: float
    h1: float
    energy: float
    trace_l2: float
    robin: Optional[float] = None


def _qform(A, u) -> float:
    A = as_csr(A)
    return float(np.real(np.vdot(u, A @ u)))


def norms(u, K, M, B1, B=None) -> Norms:
    """Discrete L2, H1, energy and boundary-trace norms of ``u``.

    ``robin`` is N(u) = sqrt(u^T K u + u^T B u) when the Robin matrix ``B``
    is supplied.
    """
    u = np.asarray(u.coefficients if isinstance(u, Field) else u)
    for A in (K, M, B1):
        if as_csr(A).shape[0] != len(u):
            raise AssemblyError("dimension mismatch")
    l2 = math.sqrt(max(_qform(M, u), 0.0))
    en = math.sqrt(max(_qform(K, u), 0.0))
    tr = math.sqrt(max(_qform(B1, u), 0.0))
    rob = None if B is None else math.sqrt(max(_qform(K, u) + _qform(B, u), 0.0))
    return Norms(l2, math.sqrt(l2 ** 2 + en ** 2), en, tr, rob)


# degree-5, 7-point rule on the reference triangle (barycentric, weights sum to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_Q7_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
_Q7_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def quadrature_points(mesh: Mesh):
    """Physical points (nt, 7, 2) and weights (nt, 7) of the 7-point rule."""
    _, area = _geometry(mesh)
    p = mesh.vertices[mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", _Q7_BARY, p)
    w = area[:, None] * _Q7_W[None, :]
    if mesh.axisymmetric:
        w = w * TWO_PI * pts[..., 0]
    return pts, w


def evaluate_at_quadrature(mesh: Mesh, u) -> np.ndarray:
    u = np.asarray(u)
    return np.einsum("qk,tk->tq", _Q7_BARY, u[mesh.triangles])


def error_norms(mesh: Mesh, u, exact: Callable, exact_grad: Optional[Callable] = None):
    """(L2 error, H1-seminorm error) against an exact solution, by 7-point quadrature."""
    pts, w = quadrature_points(mesh)
    uh = evaluate_at_quadrature(mesh, u)
    ue = exact(pts[..., 0], pts[..., 1])
    l2 = math.sqrt(float(np.sum(w * np.abs(uh - ue) ** 2)))
    if exact_grad is None:
        return l2, None
    grads, _ = p1_gradients(mesh)
    gh = np.einsum("tk,tkd->td", np.asarray(u)[mesh.triangles], grads)
    gx, gy = exact_grad(pts[..., 0], pts[..., 1])
    h1 = math.sqrt(float(np.sum(w * (np.abs(gh[:, None, 0] - gx) ** 2 + np.abs(gh[:, None, 1] - gy) ** 2))))
    return l2, h1


def lp_norm(mesh: Mesh, u, p: float) -> float:
    """(integral |u|^p)^(1/p) with the 7-point rule (axisymmetric weight if flagged)."""
    _, w = quadrature_points(mesh)
    uh = evaluate_at_quadrature(mesh, u)
    return float(np.sum(w * np.abs(uh) ** p)) ** (1.0 / p)
