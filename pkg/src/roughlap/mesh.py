"""Conforming triangle meshes: construction, refinement, validation, I/O.

Charted families (spiral, exterior shells) are meshed on a structured grid in
parameter space and pushed through the chart, so refinement places every new
vertex exactly on the mapped geometry.  Circles are refined with boundary
midpoints projected back onto the circle.  The rectangle-union polygons have
no chart and are handed to a constrained Delaunay mesher with a minimum-angle
bound, which grades the mesh toward the small rectangles automatically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import geometry as geo
from .errors import MeshError

AXIS_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Triangles (CCW vertex triples) plus marked boundary edges.

    ``boundary_edges`` are oriented with the domain on their left.
    ``param``/``chart`` are set for meshes generated in a chart's parameter
    space; ``snap`` projects boundary points of curved loops back onto the curve.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_markers: np.ndarray
    axisymmetric: bool = False
    param: Optional[np.ndarray] = None
    chart: Optional[geo.ChartMap] = None
    snap: Optional[Callable] = None
    expected_loops: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "boundary_markers", "param"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float if name in ("vertices", "param") else np.int64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def nv(self) -> int:
        return len(self.vertices)

    @property
    def nt(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self) -> np.ndarray:
        """Unique undirected edges, each row sorted."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def edge_graph(self) -> sp.csr_matrix:
        e = self.edges()
        w = np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)
        g = sp.coo_matrix((w, (e[:, 0], e[:, 1])), shape=(self.nv, self.nv))
        return (g + g.T).tocsr()

    def max_edge(self) -> float:
        e = self.edges()
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    def boundary_vertices(self, marker: Optional[int] = None) -> np.ndarray:
        be = self.boundary_edges
        if marker is not None:
            be = be[self.boundary_markers == marker]
        return np.unique(be)

    def boundary_length(self, marker: Optional[int] = None) -> float:
        be, mk = self.boundary_edges, self.boundary_markers
        if marker is not None:
            be = be[mk == marker]
        return float(np.sum(np.linalg.norm(self.vertices[be[:, 1]] - self.vertices[be[:, 0]], axis=1)))

    def area(self) -> float:
        return float(np.sum(self.signed_areas()))

    def scaled(self, factor: float) -> "Mesh":
        return Mesh(self.vertices * factor, self.triangles, self.boundary_edges,
                    self.boundary_markers, self.axisymmetric,
                    expected_loops=self.expected_loops, meta=dict(self.meta))

    def translated(self, offset) -> "Mesh":
        return Mesh(self.vertices + np.asarray(offset, dtype=float), self.triangles,
                    self.boundary_edges, self.boundary_markers, self.axisymmetric,
                    expected_loops=self.expected_loops, meta=dict(self.meta))

    def with_axisymmetric(self, flag: bool = True) -> "Mesh":
        return replace(self, axisymmetric=flag)


# ---------------------------------------------------------------------------
# topology helpers
# ---------------------------------------------------------------------------


def _directed_boundary(tris: np.ndarray) -> np.ndarray:
    """Edges used by exactly one triangle, oriented as in that triangle."""
    e = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return e[counts[inv.ravel()] == 1]


def _on_axis(vertices: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return (np.abs(vertices[edges[:, 0], 0]) <= AXIS_TOL) & (np.abs(vertices[edges[:, 1], 0]) <= AXIS_TOL)


def _compact(vertices, tris, param=None):
    used = np.unique(tris)
    remap = -np.ones(len(vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return vertices[used], remap[tris], (None if param is None else param[used])


def _orient_ccw(vertices, tris):
    p = vertices[tris]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    neg = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tris = tris.copy()
    tris[neg] = tris[neg][:, [0, 2, 1]]
    return tris


def boundary_loops(mesh: Mesh) -> list:
    """Split the boundary edges into loops (or axis-to-axis chains).

    At pinch vertices with several outgoing edges the continuation is the
    first outgoing edge clockwise from the reversed incoming edge, which keeps
    every loop inside a single corner sector of the domain.
    """
    v = mesh.vertices
    edges = [tuple(e) for e in mesh.boundary_edges.tolist()]
    outgoing: dict = {}
    for idx, (a, b) in enumerate(edges):
        outgoing.setdefault(a, []).append(idx)
    has_incoming = {b for _, b in edges}
    unused = set(range(len(edges)))
    loops = []

    def next_edge(prev_idx):
        a, b = edges[prev_idx]
        cands = [i for i in outgoing.get(b, []) if i in unused]
        if not cands:
            return None
        if len(cands) == 1:
            return cands[0]
        back = math.atan2(v[a, 1] - v[b, 1], v[a, 0] - v[b, 0])

        def cw(i):
            w = edges[i][1]
            ang = math.atan2(v[w, 1] - v[b, 1], v[w, 0] - v[b, 0])
            return (back - ang) % (2 * math.pi) or 2 * math.pi

        return min(cands, key=cw)

    # open chains first (they start at a vertex with no incoming boundary edge)
    starts = [i for i, (a, _) in enumerate(edges) if a not in has_incoming]
    for s in starts + sorted(unused):
        if s not in unused:
            continue
        loop = [s]
        unused.discard(s)
        cur = s
        while True:
            nxt = next_edge(cur)
            if nxt is None:
                break
            unused.discard(nxt)
            loop.append(nxt)
            cur = nxt
        loops.append([edges[i] for i in loop])
    return loops


def _with_boundary(vertices, tris, marker_fn=None, axisymmetric=False, **kw) -> Mesh:
    tris = _orient_ccw(vertices, np.asarray(tris, dtype=np.int64))
    be = _directed_boundary(tris)
    if axisymmetric:
        be = be[~_on_axis(vertices, be)]
    markers = np.zeros(len(be), dtype=np.int64) if marker_fn is None else marker_fn(vertices, be)
    order = np.lexsort((be[:, 1], be[:, 0]))
    return Mesh(vertices, tris, be[order], markers[order], axisymmetric, **kw)


# ---------------------------------------------------------------------------
# structured constructions
# ---------------------------------------------------------------------------


def grid_mesh(x0, x1, y0, y1, nx, ny, pattern: str = "unionjack", keep=None,
              marker_fn=None) -> Mesh:
    """Tensor grid split into right triangles.

    ``pattern='unionjack'`` alternates the diagonal in a checkerboard, so edge
    paths exist along both 45-degree directions from even-parity vertices.
    ``keep(cx, cy)`` may drop cells by centre.
    """
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    idx = lambda i, j: i * (ny + 1) + j  # noqa: E731
    tris = []
    for i in range(nx):
        for j in range(ny):
            if keep is not None and not keep(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])):
                continue
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            if pattern == "unionjack" and (i + j) % 2 == 1:
                tris += [(a, b, d), (b, c, d)]
            else:
                tris += [(a, b, c), (a, c, d)]
    verts, tris, _ = _compact(verts, np.array(tris))
    return _with_boundary(verts, tris, marker_fn, expected_loops=1)


def _circle_snap(radii: dict, center=(0.0, 0.0)):
    c = np.asarray(center, dtype=float)

    def snap(points, markers):
        out = np.array(points, dtype=float)
        for m, r in radii.items():
            sel = markers == m
            d = out[sel] - c
            out[sel] = c + r * d / np.linalg.norm(d, axis=1)[:, None]
        return out

    return snap


def disk_base_mesh(radius: float = 1.0, n: int = 8) -> Mesh:
    """Centre plus ``n`` boundary vertices; refinement snaps to the circle."""
    th = 2 * math.pi * np.arange(n) / n
    verts = np.vstack([[0.0, 0.0], radius * np.column_stack([np.cos(th), np.sin(th)])])
    tris = [(0, 1 + i, 1 + (i + 1) % n) for i in range(n)]
    return _with_boundary(verts, tris, snap=_circle_snap({0: radius}), expected_loops=1)


def annulus_mesh(r_in: float, r_out: float, n_theta: int, n_r: int) -> Mesh:
    """Structured polar mesh; marker 0 on the outer circle, 1 on the inner."""
    rs = np.linspace(r_in, r_out, n_r + 1)
    th = 2 * math.pi * np.arange(n_theta) / n_theta
    verts = np.array([[r * math.cos(t), r * math.sin(t)] for r in rs for t in th])
    idx = lambda i, j: i * n_theta + (j % n_theta)  # noqa: E731
    tris = []
    for i in range(n_r):
        for j in range(n_theta):
            a, b, c, d = idx(i, j), idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)
            tris += [(a, b, c), (a, c, d)]

    def markers(v, be):
        r = np.linalg.norm(0.5 * (v[be[:, 0]] + v[be[:, 1]]), axis=1)
        return np.where(r > 0.5 * (r_in + r_out), 0, 1)

    return _with_boundary(verts, np.array(tris), markers,
                          snap=_circle_snap({0: r_out, 1: r_in}), expected_loops=2)


def chart_grid_mesh(chart: geo.ChartMap, u_nodes, v_nodes, marker_fn=None,
                    axisymmetric=False, expected_loops=None, meta=None) -> Mesh:
    """Structured grid on a parameter rectangle pushed through ``chart``.

    Each cell is split along whichever diagonal is shorter after mapping.
    """
    U, V = np.meshgrid(np.asarray(u_nodes, float), np.asarray(v_nodes, float), indexing="ij")
    param = np.column_stack([U.ravel(), V.ravel()])
    verts = chart.forward(param)
    if axisymmetric:
        verts[np.abs(verts[:, 0]) < AXIS_TOL, 0] = 0.0
    nu, nv = U.shape
    idx = lambda i, j: i * nv + j  # noqa: E731
    tris = []
    for i in range(nu - 1):
        for j in range(nv - 1):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            if np.linalg.norm(verts[a] - verts[c]) <= np.linalg.norm(verts[b] - verts[d]):
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    return _with_boundary(verts, np.array(tris), marker_fn, axisymmetric=axisymmetric,
                          param=param, chart=chart, expected_loops=expected_loops,
                          meta=meta or {})


def spiral_mesh(n_max: int, target_h: float) -> Mesh:
    """Mesh of the truncated spiral domain, self-similar from band to band.

    Parameter coordinates are u = -ln s (one unit per band) and psi = ln(t/s);
    the cell aspect is chosen so both mapped cell sides have equal length.
    """
    m = max(2, math.ceil(2 * math.pi * math.log(2.0) / target_h))
    dpsi = math.log(2.0) / m
    per_band = max(1, round(math.sqrt(1 + 4 * math.pi ** 2) / (2 * math.pi * dpsi)))
    u_nodes = np.linspace(0.0, float(n_max), n_max * per_band + 1)
    psi_nodes = np.linspace(0.0, math.log(2.0), m + 1)
    chart = geo.compose(geo.spiral_chart(), geo.log_band_chart())
    return chart_grid_mesh(chart, u_nodes, psi_nodes, expected_loops=1,
                           meta={"per_band": per_band, "psi_cells": m, "n_max": n_max})


# ---------------------------------------------------------------------------
# unstructured (constrained Delaunay) construction for plain polygons
# ---------------------------------------------------------------------------


def _interior_seed(loop: np.ndarray) -> np.ndarray:
    import triangle as tr

    n = len(loop)
    segs = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    t = tr.triangulate({"vertices": loop, "segments": segs}, "p")
    p = t["vertices"][t["triangles"]]
    area = np.abs(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]))
    return p[np.argmax(area)].mean(axis=0)


def polygon_mesh(domain: geo.Domain, target_h: float, min_angle: float = 30.0) -> Mesh:
    """Quality constrained Delaunay mesh of a polygon with holes.

    Boundary marker ``i`` is the ``i``-th loop of the domain (0 = outer).
    """
    import triangle as tr

    verts, segs, smark = [], [], []
    index: dict = {}
    for li, loop in enumerate(domain.loops()):
        ids = []
        for p in loop:
            key = (float(p[0]), float(p[1]))
            if key not in index:
                index[key] = len(verts)
                verts.append(key)
            ids.append(index[key])
        for j in range(len(ids)):
            segs.append((ids[j], ids[(j + 1) % len(ids)]))
            smark.append(li + 1)
    verts = np.array(verts)
    data = {"vertices": verts, "segments": np.array(segs), "segment_markers": np.array(smark)[:, None]}
    # seeds: centroids of triangles that fall outside the domain in a plain pass
    rough = tr.triangulate(data, "p")
    cen = rough["vertices"][rough["triangles"]].mean(axis=1)
    outside = ~geo.points_in_domain(cen, domain)
    if np.any(outside):
        data["holes"] = cen[outside]
    max_area = math.sqrt(3) / 4 * target_h ** 2
    out = tr.triangulate(data, f"pq{min_angle:g}a{max_area:.17g}")
    v = out["vertices"]
    tris = out["triangles"]
    seg_marker = {}
    for (a, b), m in zip(out["segments"].tolist(), out["segment_markers"].ravel().tolist()):
        seg_marker[(min(a, b), max(a, b))] = m - 1

    def markers(_, be):
        return np.array([seg_marker.get((min(a, b), max(a, b)), 0) for a, b in be.tolist()],
                        dtype=np.int64)

    return _with_boundary(v, tris, markers, expected_loops=domain.loop_count,
                          meta={"label": domain.label})


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def triangulate(domain: geo.Domain, target_h: float) -> Mesh:
    """Mesh ``domain`` at grid spacing ``target_h``.

    Rectangles and the L-shape get structured union-jack grids with cell side
    at most ``target_h``; disks and annuli are refined from coarse polar meshes;
    the spiral is meshed per band in parameter space; other polygons (the
    rectangle union and its pieces) use the quality Delaunay mesher.
    """
    if not target_h > 0:
        raise MeshError("target_h must be positive")
    fam, prm = domain.family, domain.params
    scale = prm.get("scale", 1.0)
    if fam == "rectangle":
        w, h = prm["x1"] - prm["x0"], prm["y1"] - prm["y0"]
        if target_h > min(w, h) * scale + 1e-15:
            raise MeshError("feature underresolved: rectangle side shorter than target_h")
        nx, ny = math.ceil(w * scale / target_h - 1e-9), math.ceil(h * scale / target_h - 1e-9)
        m = grid_mesh(prm["x0"], prm["x1"], prm["y0"], prm["y1"], nx, ny)
        return m.scaled(scale) if scale != 1.0 else m
    if fam == "lshape":
        if target_h > 0.5 * scale:
            raise MeshError("feature underresolved: re-entrant notch of width 0.5")
        n = 2 * math.ceil(0.5 * scale / target_h - 1e-9)
        m = grid_mesh(0, 1, 0, 1, n, n, keep=lambda cx, cy: not (cx > 0.5 and cy > 0.5))
        return m.scaled(scale) if scale != 1.0 else m
    if fam == "disk":
        r = prm["radius"] * scale
        m = disk_base_mesh(r)
        while m.max_edge() > target_h:
            m = refine(m)
        return m
    if fam == "annulus":
        r_in, r_out = prm["r_in"] * scale, prm["r_out"] * scale
        if target_h > r_out - r_in:
            raise MeshError("feature underresolved: annulus width shorter than target_h")
        n_r = math.ceil((r_out - r_in) / target_h)
        n_t = max(8, math.ceil(2 * math.pi * r_out / target_h))
        return annulus_mesh(r_in, r_out, n_t, n_r)
    if fam == "spiral":
        if scale != 1.0:
            return spiral_mesh(prm["n_max"], target_h / scale).scaled(scale)
        return spiral_mesh(prm["n_max"], target_h)
    if fam.startswith("rect-union"):
        smallest = 2.0 ** (-prm.get("k_max", 0) - 2) * scale
        if target_h > 0.5 * scale:
            raise MeshError(f"feature underresolved: target_h {target_h} exceeds the wedge "
                            f"scale (smallest rectangle height {smallest:g})")
    return polygon_mesh(domain, target_h)


def refine(mesh: Mesh) -> Mesh:
    """Split every triangle into four through its edge midpoints."""
    t = mesh.triangles
    nv = mesh.nv
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    mid_id = nv + np.arange(len(uniq))
    nt = len(t)
    m01, m12, m20 = mid_id[inv[:nt]], mid_id[inv[nt:2 * nt]], mid_id[inv[2 * nt:]]
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    new_t = np.vstack([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    param = None
    if mesh.param is not None:
        param = np.vstack([mesh.param, 0.5 * (mesh.param[uniq[:, 0]] + mesh.param[uniq[:, 1]])])
        new_v = mesh.chart.forward(param)
        if mesh.axisymmetric:
            new_v[np.abs(new_v[:, 0]) < AXIS_TOL, 0] = 0.0
    else:
        new_v = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])])

    # boundary edges: look up their midpoint ids
    lookup = {tuple(k): i for i, k in enumerate(uniq.tolist())}
    be, mk = mesh.boundary_edges, mesh.boundary_markers
    mids = np.array([nv + lookup[(min(p, q), max(p, q))] for p, q in be.tolist()], dtype=np.int64)
    if mesh.snap is not None and mesh.param is None and len(mids):
        new_v[mids] = mesh.snap(new_v[mids], mk)
    new_be = np.vstack([np.column_stack([be[:, 0], mids]), np.column_stack([mids, be[:, 1]])])
    new_mk = np.concatenate([mk, mk])
    order = np.lexsort((new_be[:, 1], new_be[:, 0]))
    meta = dict(mesh.meta)
    meta["level"] = meta.get("level", 0) + 1
    return Mesh(new_v, new_t, new_be[order], new_mk[order], mesh.axisymmetric, param,
                mesh.chart, mesh.snap, mesh.expected_loops, meta)


def refine_n(mesh: Mesh, times: int) -> Mesh:
    for _ in range(times):
        mesh = refine(mesh)
    return mesh


@dataclass
class ValidationReport:
    violations: list
    min_angle: float
    max_aspect: float
    loops: int

    @property
    def valid(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"valid": self.valid, "violations": self.violations,
                "min_angle_deg": self.min_angle, "max_aspect": self.max_aspect,
                "boundary_loops": self.loops}


def triangle_angles(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.nt, 3))
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        w = p[:, (k + 2) % 3] - p[:, k]
        cosang = np.sum(u * w, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
        out[:, k] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return out


def validate(mesh: Mesh, expected_loops: Optional[int] = None) -> ValidationReport:
    """Check the mesh invariants; violations are returned, never raised."""
    problems = []
    areas = mesh.signed_areas()
    for i in np.nonzero(areas <= 0)[0][:20]:
        problems.append(f"negative area at triangle {int(i)}")

    t = mesh.triangles
    e = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    if np.any(counts > 2):
        problems.append(f"{int(np.sum(counts > 2))} edges shared by more than two triangles")
    single = uniq[counts == 1]
    if mesh.axisymmetric:
        single = single[~_on_axis(mesh.vertices, single)]
    listed = np.sort(mesh.boundary_edges, axis=1) if len(mesh.boundary_edges) else np.zeros((0, 2), int)
    listed_set = {tuple(x) for x in listed.tolist()}
    single_set = {tuple(x) for x in single.tolist()}
    if len(listed_set) != len(listed):
        problems.append("duplicate boundary edges")
    if single_set - listed_set:
        problems.append(f"{len(single_set - listed_set)} boundary edges not listed")
    if listed_set - single_set:
        problems.append(f"{len(listed_set - single_set)} listed boundary edges are interior")
    if mesh.axisymmetric and np.any(mesh.vertices[:, 0] < -AXIS_TOL):
        problems.append("axisymmetric mesh has vertices with r < 0")

    loops = boundary_loops(mesh)
    want = expected_loops if expected_loops is not None else mesh.expected_loops
    for lp in loops:
        closed = lp[0][0] == lp[-1][1]
        if not closed and not (mesh.axisymmetric
                               and abs(mesh.vertices[lp[0][0], 0]) <= AXIS_TOL
                               and abs(mesh.vertices[lp[-1][1], 0]) <= AXIS_TOL):
            problems.append("open boundary chain")
    if want is not None and len(loops) != want:
        problems.append(f"boundary loop count {len(loops)} != expected {want}")

    ang = triangle_angles(mesh)
    p = mesh.vertices[t]
    lens = np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], axis=1)
    with np.errstate(divide="ignore"):
        aspect = lens.max(axis=1) * lens.sum(axis=1) / (4 * math.sqrt(3) * np.abs(areas))
    return ValidationReport(problems, float(ang.min()), float(aspect.max()), len(loops))


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def write_mesh(mesh: Mesh, path) -> None:
    lines = [f"mesh {mesh.nv} {mesh.nt} {len(mesh.boundary_edges)} {int(mesh.axisymmetric)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines += [f"{i} {j} {m}" for (i, j), m in zip(mesh.boundary_edges.tolist(), mesh.boundary_markers.tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = fh.read().split("\n")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "mesh":
        raise MeshError("bad mesh header")
    nv, nt, nb, ax = (int(v) for v in head[1:])
    body = lines[1:]
    verts = np.array([[float(v) for v in ln.split()] for ln in body[:nv]]).reshape(nv, 2)
    tris = np.array([[int(v) for v in ln.split()] for ln in body[nv:nv + nt]]).reshape(nt, 3)
    bl = np.array([[int(v) for v in ln.split()] for ln in body[nv + nt:nv + nt + nb]]).reshape(nb, 3)
    return Mesh(verts, tris, bl[:, :2], bl[:, 2], bool(ax))
