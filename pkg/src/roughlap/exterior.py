"""Limiting absorption on truncated exterior domains of rotation.

Three-dimensional axisymmetric problems are solved in the meridian half-plane
(r, z), r >= 0, with weight 2 pi r.  The exterior of the obstacle is cut at
radius ``R_inf`` where u = 0 is imposed (marker 9); the obstacle boundary is
marker 0.  For each absorption parameter eps of a schedule the complex
symmetric system (K + B - (k^2 + i eps) M) u = b is solved.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import fem
from . import geometry as geo
from .errors import GeometryError, MeshError, PreconditionError
from .iterative import cg, cocg
from .mesh import AXIS_TOL, Mesh, chart_grid_mesh, _with_boundary

TWO_PI = 2.0 * math.pi
GAMMA = (-1.0 + 1.0j) / math.sqrt(2.0)
OBSTACLE, ARTIFICIAL = 0, 9


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuationSchedule:
    epsilons: tuple = (1e-1, 1e-2, 1e-3, 0.0)
    k: float = 0.0
    bc: str = "dirichlet"
    h: float = 0.0  # Robin coefficient on the obstacle when bc == "robin"

    def __post_init__(self):
        eps = list(self.epsilons)
        if not eps:
            raise PreconditionError("empty epsilon schedule")
        if any(e < 0 or e > 1 for e in eps):
            raise PreconditionError("epsilons must lie in [0, 1]")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise PreconditionError("epsilons must be strictly decreasing")
        if 0.0 in eps[:-1]:
            raise PreconditionError("eps = 0 may only end the schedule")
        if self.bc not in ("dirichlet", "neumann", "robin"):
            raise PreconditionError(f"unknown boundary condition {self.bc!r}")
        if self.k < 0:
            raise PreconditionError("wavenumber must be nonnegative")
        if self.bc == "robin" and self.h < 0:
            raise PreconditionError("Robin coefficient must be nonnegative")


@dataclass(frozen=True)
class WeightedNormSpec:
    a: float = 1.5

    def __post_init__(self):
        if not 1.0 < self.a < 2.0:
            raise PreconditionError("weight exponent must be in (1,2)")


@dataclass
class ContinuationResult:
    epsilons: list
    fields: list
    weighted_norms: list
    pairwise_diffs: list
    truncation_radius: float
    iterations: list = field(default_factory=list)


@dataclass(frozen=True)
class GreenKernel:
    epsilon: float = 0.0
    gamma: complex = GAMMA


@dataclass(frozen=True)
class Bump:
    """Smooth axisymmetric source C (1 - |x - c|^2 / rho^2)^2 centred on the axis.

    ``C`` is chosen so the integral over R^3 equals ``mass``.
    """

    z: float = 2.0
    radius: float = 0.5
    mass: float = 1.0

    @property
    def amplitude(self) -> float:
        return self.mass * 105.0 / (32.0 * math.pi * self.radius ** 3)

    @property
    def support_radius(self) -> float:
        return abs(self.z) + self.radius

    def __call__(self, r, z):
        q = (np.asarray(r) ** 2 + (np.asarray(z) - self.z) ** 2) / self.radius ** 2
        return np.where(q < 1.0, self.amplitude * (1.0 - q) ** 2, 0.0)


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------


def build_half_disk(radius: float = 1.0, n: int = 64) -> geo.Domain:
    """Meridian cross-section of the ball of given radius (r >= 0)."""
    th = np.linspace(0.0, math.pi, n + 1)
    loop = radius * np.column_stack([np.sin(th), np.cos(th)])[::-1]
    return geo.Domain(loop, label="ball", family="half-disk", params={"radius": radius})


def rotated_rect_union(k_max: int, offset: float = 2.0) -> geo.Domain:
    """Rectangle-union domain placed in the meridian plane at r = x2 + offset, z = x1 - 1/2.

    Rotation about the z axis then produces a solid of revolution whose
    cross-section is the rectangle union, kept away from the axis.
    """
    d = geo.build_rect_union(k_max)

    def place(loop):
        return np.column_stack([loop[:, 1] + offset, loop[:, 0] - 0.5])

    # (x1, x2) -> (x2, x1) is a reflection: reverse loops to restore orientation
    return geo.Domain(place(d.outer_loop)[::-1], tuple(place(h)[::-1] for h in d.hole_loops),
                      label=f"rotated {d.label}", family="rotated-rect-union",
                      params={"k_max": k_max, "offset": offset})


def radial_nodes(a: float, R_inf: float, target_h: float, near_radius: float = 2.0,
                 growth: float = 1.2, max_dr: Optional[float] = None) -> np.ndarray:
    """Uniform spacing up to ``near_radius``, then geometric growth out to ``R_inf``.

    Nodes below ``near_radius`` do not depend on ``R_inf``.
    """
    near_radius = max(near_radius, a)
    n_near = max(1, math.ceil((near_radius - a) / target_h - 1e-9))
    nodes = list(np.linspace(a, near_radius, n_near + 1))
    dr = (near_radius - a) / n_near
    while nodes[-1] < R_inf:
        dr = dr * growth
        if max_dr is not None:
            dr = min(dr, max_dr)
        nxt = nodes[-1] + dr
        if nxt >= R_inf - 0.5 * dr:
            if R_inf - nodes[-1] < 0.5 * dr and nodes[-1] > near_radius:
                nodes[-1] = R_inf
            else:
                nodes.append(R_inf)
            break
        nodes.append(nxt)
    return np.array(nodes)


def _shell_markers(a, R_inf):
    def markers(v, be):
        rho = np.linalg.norm(0.5 * (v[be[:, 0]] + v[be[:, 1]]), axis=1)
        return np.where(rho > 0.5 * (a + R_inf), ARTIFICIAL, OBSTACLE)

    return markers


def shell_mesh(a: float, R_inf: float, target_h: float, near_radius: float = 2.0,
               growth: float = 1.2, max_dr: Optional[float] = None,
               n_theta: Optional[int] = None) -> Mesh:
    """Meridian half-annulus a < |x| < R_inf, structured in (rho, theta)."""
    rho = radial_nodes(a, R_inf, target_h, near_radius, growth, max_dr)
    n_theta = n_theta or max(8, math.ceil(math.pi * a / target_h - 1e-9))
    theta = np.linspace(0.0, math.pi, n_theta + 1)
    return chart_grid_mesh(geo.meridian_polar_chart(), rho, theta, _shell_markers(a, R_inf),
                           axisymmetric=True, expected_loops=2,
                           meta={"R_inf": R_inf, "a": a, "n_theta": n_theta})


def build_exterior_mesh(obstacle: geo.Domain, R_inf: float, target_h: float,
                        near_radius: float = 2.0, growth: float = 1.2,
                        max_dr: Optional[float] = None, n_theta: Optional[int] = None) -> Mesh:
    """Axisymmetric mesh of the meridian region between ``obstacle`` and |x| = R_inf."""
    pts = np.vstack(obstacle.loops())
    if np.any(pts[:, 0] < -AXIS_TOL):
        raise GeometryError("obstacle cross-section must satisfy r >= 0")
    if np.max(np.hypot(pts[:, 0], pts[:, 1])) ** 2 >= R_inf ** 2 / 4:
        raise MeshError("truncation radius too small")
    if obstacle.family == "half-disk":
        return shell_mesh(obstacle.params["radius"], R_inf, target_h, near_radius, growth, max_dr,
                          n_theta)
    return _unstructured_exterior(obstacle, R_inf, target_h, near_radius, growth)


def _unstructured_exterior(obstacle, R_inf, target_h, near_radius, growth) -> Mesh:
    import triangle as tr

    pts = np.vstack(obstacle.loops())
    r_near = max(near_radius, 1.25 * float(np.max(np.hypot(pts[:, 0], pts[:, 1]))))
    radii = [r_near]
    while radii[-1] * 2 < R_inf:
        radii.append(radii[-1] * 2)
    radii.append(R_inf)
    verts, segs, smark = [], [], []
    index: dict = {}

    def add(p):
        key = (float(p[0]), float(p[1]))
        if key not in index:
            index[key] = len(verts)
            verts.append(key)
        return index[key]

    # axis points and arcs; the arc at R_inf is the artificial boundary
    axis_lo = [add((0.0, -r)) for r in radii]
    axis_hi = [add((0.0, r)) for r in radii]
    sizes = []
    for j, r in enumerate(radii):
        h_j = target_h * growth ** (3 * j) if j else target_h
        sizes.append(h_j)
        n = max(8, math.ceil(math.pi * r / min(h_j, r)))
        th = np.linspace(math.pi, 0.0, n + 1)[1:-1]
        ids = [axis_lo[j]] + [add((r * math.sin(t), r * math.cos(t))) for t in th] + [axis_hi[j]]
        mark = 10 if j == len(radii) - 1 else 20
        segs += [(ids[i], ids[i + 1]) for i in range(len(ids) - 1)]
        smark += [mark] * (len(ids) - 1)
    axis_order = axis_lo[::-1] + axis_hi
    segs += [(axis_order[i], axis_order[i + 1]) for i in range(len(axis_order) - 1)]
    smark += [30] * (len(axis_order) - 1)
    for loop in obstacle.loops():
        ids = [add(p) for p in loop]
        segs += [(ids[i], ids[(i + 1) % len(ids)]) for i in range(len(ids))]
        smark += [1] * len(ids)
    regions = []
    inner_seed = np.array([0.5 * r_near, 0.0])
    if geo.points_in_domain(inner_seed[None], obstacle)[0]:
        inner_seed = np.array([0.02 * r_near, 0.0])
    regions.append([inner_seed[0], inner_seed[1], 0, math.sqrt(3) / 4 * target_h ** 2])
    for j in range(1, len(radii)):
        rr = 0.5 * (radii[j - 1] + radii[j])
        regions.append([rr * 0.7071, rr * 0.7071, j, math.sqrt(3) / 4 * sizes[j] ** 2])
    data = {"vertices": np.array(verts), "segments": np.array(segs),
            "segment_markers": np.array(smark)[:, None], "regions": np.array(regions)}
    rough = tr.triangulate(data, "p")
    cen = rough["vertices"][rough["triangles"]].mean(axis=1)
    # enclosed cavities are not part of the unbounded exterior
    holes = cen[geo.points_in_polygon(cen, obstacle.outer_loop)]
    if len(holes):
        data["holes"] = holes
    out = tr.triangulate(data, "pq30aA")
    v = out["vertices"]
    v[np.abs(v[:, 0]) < AXIS_TOL, 0] = 0.0
    seg_marker = {(min(a, b), max(a, b)): m for (a, b), m in
                  zip(out["segments"].tolist(), out["segment_markers"].ravel().tolist())}

    def markers(_, be):
        m = np.array([seg_marker.get((min(a, b), max(a, b)), 1) for a, b in be.tolist()])
        return np.where(m == 10, ARTIFICIAL, OBSTACLE)

    return _with_boundary(v, out["triangles"], markers, axisymmetric=True,
                          expected_loops=2,
                          meta={"R_inf": R_inf, "label": obstacle.label})


# ---------------------------------------------------------------------------
# point evaluation
# ---------------------------------------------------------------------------


class PointLocator:
    """Barycentric lookup of points in a triangle mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        p = mesh.vertices[mesh.triangles]
        self._p = p
        self._tree = cKDTree(p.mean(axis=1))
        self._det = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                     - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))

    def _bary(self, tri, q):
        p = self._p[tri]
        a, b, c = p[..., 0, :], p[..., 1, :], p[..., 2, :]
        det = self._det[tri]
        l0 = ((b[..., 0] - q[..., 0]) * (c[..., 1] - q[..., 1]) - (b[..., 1] - q[..., 1]) * (c[..., 0] - q[..., 0])) / det
        l1 = ((c[..., 0] - q[..., 0]) * (a[..., 1] - q[..., 1]) - (c[..., 1] - q[..., 1]) * (a[..., 0] - q[..., 0])) / det
        return np.stack([l0, l1, 1.0 - l0 - l1], axis=-1)

    def locate(self, points, k: int = 24):
        """Triangle index and barycentric coordinates for each point (-1 if outside)."""
        q = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(k, self.mesh.nt)
        _, cand = self._tree.query(q, k=k)
        cand = cand.reshape(len(q), k)
        lam = self._bary(cand, q[:, None, :])
        score = lam.min(axis=-1)
        best = np.argmax(score, axis=1)
        tri = cand[np.arange(len(q)), best]
        bary = lam[np.arange(len(q)), best]
        missing = score[np.arange(len(q)), best] < -1e-9
        for i in np.nonzero(missing)[0]:
            # brute force for badly shaped neighbourhoods
            lam_all = self._bary(np.arange(self.mesh.nt), q[i][None, :])
            j = int(np.argmax(lam_all.min(axis=-1)))
            tri[i], bary[i] = j, lam_all[j]
            missing[i] = lam_all[j].min() < -1e-9
        tri = np.where(missing, -1, tri)
        return tri, bary

    def evaluate(self, u, points) -> np.ndarray:
        tri, bary = self.locate(points)
        if np.any(tri < 0):
            raise GeometryError("evaluation point outside the mesh")
        u = np.asarray(u)
        vals = np.sum(u[self.mesh.triangles[tri]] * bary, axis=1)
        return vals


def recovered_gradient(mesh: Mesh, u) -> np.ndarray:
    """Nodal gradients from area-weighted averaging of the P1 element gradients."""
    grads, area = fem.p1_gradients(mesh)
    u = np.asarray(u)
    g = np.einsum("tk,tkd->td", u[mesh.triangles], grads)
    acc = np.zeros((mesh.nv, 2), dtype=g.dtype)
    wsum = np.zeros(mesh.nv)
    for k in range(3):
        np.add.at(acc, mesh.triangles[:, k], area[:, None] * g)
        np.add.at(wsum, mesh.triangles[:, k], area)
    return acc / wsum[:, None]


def _meridian_arc(radius: float, n: int = 721) -> np.ndarray:
    th = np.linspace(0.0, math.pi, n)
    return np.column_stack([radius * np.sin(th), radius * np.cos(th)])


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _boundary_dofs(mesh: Mesh, markers) -> np.ndarray:
    sel = np.isin(mesh.boundary_markers, list(markers))
    return np.unique(mesh.boundary_edges[sel])


class ShiftedSystem:
    """Assembled pieces of (K_bc - (k^2 + i eps) M) u = b for one mesh and source.

    ``eps`` may be negative here; the schedule type enforces eps >= 0.
    """

    def __init__(self, mesh: Mesh, bc: str, h: float, F):
        K = fem.assemble_stiffness(mesh).tocsr()
        if bc == "robin":
            K = K + fem.assemble_boundary_mass(
                mesh, fem.RobinCoefficient(per_marker={OBSTACLE: h})).tocsr()
        M = fem.assemble_mass(mesh).tocsr()
        b = fem.assemble_load(mesh, F)
        fixed = [ARTIFICIAL] if bc != "dirichlet" else [ARTIFICIAL, OBSTACLE]
        self.nv = mesh.nv
        self.free = np.setdiff1d(np.arange(mesh.nv), _boundary_dofs(mesh, fixed))
        f = self.free
        self.K, self.M, self.b = K[f][:, f], M[f][:, f], b[f]

    def solve(self, k: float, eps: float, tol: float = 1e-10):
        u = np.zeros(self.nv, dtype=complex)
        if not np.any(self.b):
            return u, 0
        shift = k ** 2 + 1j * eps
        if shift == 0:
            res = cg(self.K, self.b.astype(float), tol=tol)
        else:
            res = cocg((self.K - shift * self.M).tocsr(), self.b.astype(complex), tol=tol)
        u[self.free] = res.x
        return u, res.iterations


def solve_shifted(mesh: Mesh, schedule: ContinuationSchedule, F, tol: float = 1e-10,
                  norm_spec: WeightedNormSpec = WeightedNormSpec(), workers: int = 1,
                  source_radius: Optional[float] = None) -> ContinuationResult:
    """Solve (A - k^2 - i eps) u_eps = F for every eps of the schedule.

    ``F`` is a ``Bump`` (or any callable with a ``support_radius`` attribute,
    or give ``source_radius``).  The support must lie inside R_inf / 2.
    """
    if not mesh.axisymmetric:
        raise MeshError("exterior solves need an axisymmetric meridian mesh")
    R_inf = float(mesh.meta.get("R_inf", np.max(np.linalg.norm(mesh.vertices, axis=1))))
    support = source_radius if source_radius is not None else getattr(F, "support_radius", None)
    if support is None:
        raise PreconditionError("source support radius unknown")
    if support >= R_inf / 2:
        raise PreconditionError("source too close to truncation")

    system = ShiftedSystem(mesh, schedule.bc, schedule.h, F)

    def one(eps):
        return system.solve(schedule.k, eps, tol)

    eps_list = list(schedule.epsilons)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, eps_list))
    else:
        out = [one(e) for e in eps_list]
    fields = [u for u, _ in out]
    norms = [weighted_norm(u, mesh, norm_spec) for u in fields]
    diffs = [weighted_norm(fields[j + 1] - fields[j], mesh, norm_spec) for j in range(len(fields) - 1)]
    return ContinuationResult(eps_list, fields, norms, diffs, R_inf, [it for _, it in out])


_Q7_BARY = fem._Q7_BARY
_Q7_W = fem._Q7_W


def weighted_norm(u, mesh: Mesh, spec: WeightedNormSpec = WeightedNormSpec()) -> float:
    """sqrt( integral |u|^2 (1 + |x|)^-a dx ) over the solid of revolution.

    Meshes generated in polar parameter space are integrated on the exact
    curved cells through the chart Jacobian; other meshes on their triangles.
    """
    if not isinstance(spec, WeightedNormSpec):
        spec = WeightedNormSpec(float(spec))
    u = np.asarray(u)
    if mesh.param is not None and mesh.chart is not None:
        q = mesh.param[mesh.triangles]
        d1, d2 = q[:, 1] - q[:, 0], q[:, 2] - q[:, 0]
        parea = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        qp = np.einsum("qk,tkd->tqd", _Q7_BARY, q)
        x = mesh.chart.forward(qp)
        jac = np.abs(np.linalg.det(mesh.chart.jacobian(qp)))
        w = parea[:, None] * _Q7_W[None, :] * jac
    else:
        x, w = fem.quadrature_points(mesh.with_axisymmetric(False))
    r = np.maximum(x[..., 0], 0.0)
    w = w * TWO_PI * r * (1.0 + np.hypot(x[..., 0], x[..., 1])) ** (-spec.a)
    uq = np.einsum("qk,tk->tq", _Q7_BARY, u[mesh.triangles])
    return math.sqrt(float(np.sum(w * np.abs(uq) ** 2)))


def sphere_max(u, mesh: Mesh, radii: Sequence[float], n: int = 721,
               locator: Optional[PointLocator] = None) -> np.ndarray:
    loc = locator or PointLocator(mesh)
    return np.array([np.max(np.abs(loc.evaluate(u, _meridian_arc(r, n)))) for r in radii])


def decay_fit(u, mesh: Mesh, radii: Sequence[float]) -> tuple:
    """Least-squares slope/intercept of log max|u| on spheres against log radius."""
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 3:
        raise PreconditionError("decay fit needs at least 3 radii")
    if np.any(np.diff(radii) <= 0):
        raise PreconditionError("radii must be increasing")
    R_inf = mesh.meta.get("R_inf")
    if R_inf is not None and radii[-1] >= R_inf / 2:
        raise PreconditionError("decay radii must stay below R_inf/2")
    vals = sphere_max(u, mesh, radii)
    slope, intercept = np.polyfit(np.log(radii), np.log(vals), 1)
    return float(slope), float(math.exp(intercept))


def _sphere_quadrature(radius: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    th = 0.5 * math.pi * (x + 1.0)
    w = 0.5 * math.pi * w
    pts = np.column_stack([radius * np.sin(th), radius * np.cos(th)])
    return th, pts, w


def radiation_residual(u, mesh: Mesh, k: float, radii: Sequence[float], n: int = 256) -> np.ndarray:
    """Integral over |x| = R of |du/dr - i k u|^2, for each R in ``radii``."""
    if not k > 0:
        raise PreconditionError("radiation residual requires k>0")
    loc = PointLocator(mesh)
    grad = recovered_gradient(mesh, u)
    out = []
    for R in radii:
        th, pts, w = _sphere_quadrature(R, n)
        val = loc.evaluate(u, pts)
        g = np.stack([loc.evaluate(grad[:, 0], pts), loc.evaluate(grad[:, 1], pts)], axis=1)
        dr = g[:, 0] * np.sin(th) + g[:, 1] * np.cos(th)
        dens = np.abs(dr - 1j * k * val) ** 2
        out.append(float(np.sum(w * dens * TWO_PI * R * np.sin(th) * R)))
    return np.array(out)


def green_oracle(x, y, kernel: GreenKernel = GreenKernel()) -> complex:
    """e^{gamma sqrt(eps) |x - y|} / (4 pi |x - y|) for 3-D points (vectorized)."""
    d = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
    if np.any(d == 0):
        raise PreconditionError("Green kernel is singular at x = y")
    val = np.exp(kernel.gamma * math.sqrt(kernel.epsilon) * d) / (4 * math.pi * d)
    return val if kernel.epsilon > 0 else val.real


def kelvin_green(x, y, a: float = 1.0):
    """Dirichlet Green function of the exterior of the ball |x| < a (eps = 0)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    ny = np.linalg.norm(y, axis=-1, keepdims=True)
    y_star = a * a * y / ny ** 2
    return green_oracle(x, y) - (a / ny[..., 0]) * green_oracle(x, y_star)


def kelvin_bump_solution(points_rz, bump: Bump, a: float = 1.0, n: int = 24) -> np.ndarray:
    """u(x) = integral G(x, y) F(y) dy over the bump, by tensor Gauss quadrature.

    Points are meridian (r, z) pairs and must lie outside the bump support.
    """
    xs, ws = np.polynomial.legendre.leggauss(n)
    s = 0.5 * bump.radius * (xs + 1.0)
    ws_s = 0.5 * bump.radius * ws
    mu, wmu = xs, ws  # cos of polar angle about the bump centre
    phi = TWO_PI * np.arange(2 * n) / (2 * n)
    S, MU, PHI = np.meshgrid(s, mu, phi, indexing="ij")
    W = (ws_s[:, None, None] * wmu[None, :, None] * (TWO_PI / (2 * n))) * S ** 2
    sin_t = np.sqrt(1.0 - MU ** 2)
    Y = np.stack([S * sin_t * np.cos(PHI), S * sin_t * np.sin(PHI), bump.z + S * MU], axis=-1)
    Fv = bump(np.hypot(Y[..., 0], Y[..., 1]), Y[..., 2])
    out = []
    for r, z in np.atleast_2d(points_rz):
        x = np.array([r, 0.0, z])
        out.append(float(np.sum(W * Fv * kelvin_green(x, Y, a))))
    return np.array(out)


def green_representation(u, mesh: Mesh, R: float, targets_rz, n_theta: int = 256,
                         n_phi: int = 128) -> np.ndarray:
    """Right side of u(x) = int_{S_R} (g du/dN - u dg/dN) ds for |x| > R.

    N is the normal pointing out of the exterior region |x| > R, i.e. toward
    the origin; with that orientation the formula reproduces u outside S_R.
    """
    loc = PointLocator(mesh)
    grad = recovered_gradient(mesh, u)
    th, pts, w = _sphere_quadrature(R, n_theta)
    uval = loc.evaluate(u, pts)
    g = np.stack([loc.evaluate(grad[:, 0], pts), loc.evaluate(grad[:, 1], pts)], axis=1)
    du_dN = -(g[:, 0] * np.sin(th) + g[:, 1] * np.cos(th))
    phi = TWO_PI * np.arange(n_phi) / n_phi
    out = []
    for r, z in np.atleast_2d(targets_rz):
        x = np.array([r, 0.0, z])
        acc = 0.0
        for tj, uj, dj, wj in zip(th, uval, du_dN, w):
            y = np.column_stack([R * math.sin(tj) * np.cos(phi), R * math.sin(tj) * np.sin(phi),
                                 np.full(n_phi, R * math.cos(tj))])
            diff = x - y
            d = np.linalg.norm(diff, axis=1)
            gk = 1.0 / (4 * math.pi * d)
            nrm = -y / R
            # d/dN_y of 1/(4 pi |x-y|) = (x-y).N / (4 pi |x-y|^3)
            dg = np.sum(diff * nrm, axis=1) / (4 * math.pi * d ** 3)
            ring = np.sum(gk * dj - uj * dg) * (TWO_PI / n_phi)
            acc = acc + wj * R * R * math.sin(tj) * ring
        out.append(acc)
    return np.array(out)


# ---------------------------------------------------------------------------
# L^3 bound on bounded solids of revolution
# ---------------------------------------------------------------------------


def rotated_domain_mesh(domain: geo.Domain, target_h: float) -> Mesh:
    """Axisymmetric mesh of a cross-section lying in r > 0."""
    from .mesh import polygon_mesh

    pts = np.vstack(domain.loops())
    if np.any(pts[:, 0] <= 0):
        raise GeometryError("cross-section must stay off the axis")
    return polygon_mesh(domain, target_h).with_axisymmetric(True)


def l3_inequality(mesh: Mesh, u) -> tuple:
    """(||u||_L3, ||grad u||_L2 + ||u||_L2(boundary)) on the solid of revolution."""
    if not mesh.axisymmetric:
        raise MeshError("expected an axisymmetric mesh")
    u = np.asarray(u, dtype=float)
    K = fem.assemble_stiffness(mesh).tocsr()
    B1 = fem.assemble_boundary_mass(mesh, 1.0).tocsr()
    lhs = fem.lp_norm(mesh, u, 3.0)
    rhs = math.sqrt(max(float(u @ (K @ u)), 0.0)) + math.sqrt(max(float(u @ (B1 @ u)), 0.0))
    return lhs, rhs


def random_axisymmetric_fields(mesh: Mesh, count: int, seed: int, modes: int = 4,
                               scale: float = 1.0) -> np.ndarray:
    """Seeded random smooth fields: constant plus random Fourier modes in (r, z).

    Returns an (nv, count) array.  Wave numbers are drawn up to ``modes``
    per unit length times ``scale``.
    """
    rng = np.random.default_rng(seed)
    r, z = mesh.vertices[:, 0], mesh.vertices[:, 1]
    out = np.empty((mesh.nv, count))
    for j in range(count):
        u = np.full(mesh.nv, rng.normal())
        for _ in range(modes):
            kr, kz = scale * rng.uniform(-modes, modes, 2) * math.pi
            u += rng.normal() / (1 + abs(kr) + abs(kz)) * np.cos(kr * r + kz * z + rng.uniform(0, TWO_PI))
        out[:, j] = u
    return out
