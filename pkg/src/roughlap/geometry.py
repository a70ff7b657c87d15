"""Rough planar domains, their charts, and metric estimates.

The two model families are the rectangle union accumulating at the origin
(``build_rect_union``) and the logarithmic spiral (``build_spiral``).  Both
are truncated at a finite depth.  Simple built-ins (square, rectangle,
L-shape, disk, annulus) exist for testing the solvers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.sparse.csgraph import dijkstra

from .errors import GeometryError

TWO_PI = 2.0 * math.pi
RECT_UNION_MAX_K = 12
SPIRAL_MAX_N = 20

Array = np.ndarray


# ---------------------------------------------------------------------------
# Chart maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChartMap:
    """An explicit smooth map R^2 -> R^2 with inverse and Jacobian.

    All three callables act on arrays of shape ``(..., 2)``; ``jacobian``
    returns ``(..., 2, 2)`` with ``J[..., i, j] = d forward_i / d p_j``.
    ``contains`` (optional) tells whether parameter points lie in the set
    where the chart is defined.
    """

    forward: Callable[[Array], Array]
    inverse: Callable[[Array], Array]
    jacobian: Callable[[Array], Array]
    kind: str
    params: tuple = ()
    contains: Optional[Callable[[Array], Array]] = None

    def __call__(self, p):
        return self.forward(np.asarray(p, dtype=float))

    def check_inside(self, p: Array) -> None:
        if self.contains is None:
            return
        ok = self.contains(np.asarray(p, dtype=float))
        if not np.all(ok):
            raise GeometryError("outside chart")


def identity_chart() -> ChartMap:
    def jac(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        return out

    ident = lambda p: np.array(p, dtype=float)  # noqa: E731
    return ChartMap(ident, ident, jac, "identity")


def similarity_chart(k: float) -> ChartMap:
    """The similarity ``x -> k x``."""
    if k <= 0:
        raise GeometryError("similarity coefficient must be positive")

    def jac(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = k
        out[..., 1, 1] = k
        return out

    return ChartMap(
        lambda p: k * np.asarray(p, dtype=float),
        lambda y: np.asarray(y, dtype=float) / k,
        jac,
        "similarity",
        (float(k),),
    )


def _spiral_forward(p):
    p = np.asarray(p, dtype=float)
    s, t = p[..., 0], p[..., 1]
    if np.any(s <= 0) or np.any(t <= 0):
        raise GeometryError("outside chart")
    theta = TWO_PI * np.log(t / (s * s))
    return np.stack([s * np.cos(theta), s * np.sin(theta)], axis=-1)


def _spiral_inverse(y):
    # The angle is only known mod 2*pi; pick the branch with
    # ln(t/s) in [ln2/2 - 1/2, ln2/2 + 1/2), which contains the whole triangle T.
    y = np.asarray(y, dtype=float)
    rho = np.hypot(y[..., 0], y[..., 1])
    if np.any(rho <= 0):
        raise GeometryError("outside chart")
    theta0 = np.arctan2(y[..., 1], y[..., 0])
    lo = 0.5 * math.log(2.0) - 0.5
    psi0 = theta0 / TWO_PI + np.log(rho)
    psi = psi0 - np.floor(psi0 - lo)
    return np.stack([rho, rho * np.exp(psi)], axis=-1)


def _spiral_jacobian(p):
    p = np.asarray(p, dtype=float)
    s, t = p[..., 0], p[..., 1]
    theta = TWO_PI * np.log(t / (s * s))
    c, sn = np.cos(theta), np.sin(theta)
    out = np.empty(p.shape[:-1] + (2, 2))
    out[..., 0, 0] = c + 2.0 * TWO_PI * sn
    out[..., 0, 1] = -s * sn * TWO_PI / t
    out[..., 1, 0] = sn - 2.0 * TWO_PI * c
    out[..., 1, 1] = s * c * TWO_PI / t
    return out


def _positive_quadrant(p):
    p = np.asarray(p, dtype=float)
    return (p[..., 0] > 0) & (p[..., 1] > 0)


def spiral_chart() -> ChartMap:
    """Polar-coordinate chart rho = s, theta = 2 pi ln(t / s^2) on s, t > 0."""
    return ChartMap(
        _spiral_forward, _spiral_inverse, _spiral_jacobian, "spiral",
        contains=_positive_quadrant,
    )


def spiral_map(p) -> Array:
    """Map parameter points ``(s, t)`` to Cartesian points on the spiral domain."""
    return _spiral_forward(p)


def spiral_map_inverse(y) -> Array:
    return _spiral_inverse(y)


def compose(outer: ChartMap, inner: ChartMap, kind: str = "composite",
            params: tuple = ()) -> ChartMap:
    """Chart ``outer(inner(p))``."""

    def fwd(p):
        return outer.forward(inner.forward(p))

    def inv(y):
        return inner.inverse(outer.inverse(y))

    def jac(p):
        q = inner.forward(p)
        return np.einsum("...ij,...jk->...ik", outer.jacobian(q), inner.jacobian(p))

    return ChartMap(fwd, inv, jac, kind, params, contains=inner.contains)


def similarity_conjugate(chart: ChartMap, k: float, k1: float) -> ChartMap:
    """Return ``S_k o chart o S_k1``, a map with constant at most ``k k1 Q``."""
    if k <= 0 or k1 <= 0:
        raise GeometryError("similarity coefficients must be positive")

    def fwd(p):
        return k * chart.forward(k1 * np.asarray(p, dtype=float))

    def inv(y):
        return chart.inverse(np.asarray(y, dtype=float) / k) / k1

    def jac(p):
        return (k * k1) * chart.jacobian(k1 * np.asarray(p, dtype=float))

    contains = None
    if chart.contains is not None:
        contains = lambda p: chart.contains(k1 * np.asarray(p, dtype=float))  # noqa: E731
    return ChartMap(fwd, inv, jac, "composite",
                    ("conjugate", chart.kind) + tuple(chart.params) + (float(k), float(k1)),
                    contains=contains)


def log_band_chart() -> ChartMap:
    """(u, psi) -> (s, t) = (e^-u, e^(psi - u)); flattens the spiral bands."""

    def fwd(q):
        q = np.asarray(q, dtype=float)
        s = np.exp(-q[..., 0])
        return np.stack([s, s * np.exp(q[..., 1])], axis=-1)

    def inv(p):
        p = np.asarray(p, dtype=float)
        return np.stack([-np.log(p[..., 0]), np.log(p[..., 1] / p[..., 0])], axis=-1)

    def jac(q):
        q = np.asarray(q, dtype=float)
        s = np.exp(-q[..., 0])
        t = s * np.exp(q[..., 1])
        out = np.empty(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = -s
        out[..., 0, 1] = 0.0
        out[..., 1, 0] = -t
        out[..., 1, 1] = t
        return out

    return ChartMap(fwd, inv, jac, "logband")


def meridian_polar_chart() -> ChartMap:
    """(rho, theta) -> (r, z) = (rho sin theta, rho cos theta), theta from the +z axis."""

    def fwd(q):
        q = np.asarray(q, dtype=float)
        return np.stack([q[..., 0] * np.sin(q[..., 1]), q[..., 0] * np.cos(q[..., 1])], axis=-1)

    def inv(y):
        y = np.asarray(y, dtype=float)
        return np.stack([np.hypot(y[..., 0], y[..., 1]), np.arctan2(y[..., 0], y[..., 1])], axis=-1)

    def jac(q):
        q = np.asarray(q, dtype=float)
        rho, th = q[..., 0], q[..., 1]
        out = np.empty(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = np.sin(th)
        out[..., 0, 1] = rho * np.cos(th)
        out[..., 1, 0] = np.cos(th)
        out[..., 1, 1] = -rho * np.sin(th)
        return out

    return ChartMap(fwd, inv, jac, "polar")


def chart_from_spec(kind: str, params: Sequence[float]) -> ChartMap:
    """Rebuild a chart from its serialized ``kind`` and numeric parameters."""
    params = [float(v) for v in params]
    if kind == "identity":
        return identity_chart()
    if kind == "similarity":
        return similarity_chart(params[0])
    if kind == "spiral":
        return spiral_chart()
    if kind == "spiral_conjugate":
        return similarity_conjugate(spiral_chart(), params[0], params[1])
    raise GeometryError(f"unknown chart kind {kind!r}")


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """Polygonal loops of a planar domain plus the charts that generated them.

    ``outer_loop`` is counter-clockwise, every hole loop clockwise.  ``family``
    and ``params`` record which builder produced the domain so the mesher can
    pick a matching structured triangulation.
    """

    outer_loop: Array
    hole_loops: tuple = ()
    charts: tuple = ()
    label: str = "domain"
    family: str = "polygon"
    params: dict = field(default_factory=dict)

    @property
    def loop_count(self) -> int:
        return 1 + len(self.hole_loops)

    def loops(self) -> list:
        return [self.outer_loop, *self.hole_loops]

    def area(self) -> float:
        return sum(polygon_signed_area(loop) for loop in self.loops())

    def scaled(self, factor: float) -> "Domain":
        params = dict(self.params)
        params["scale"] = params.get("scale", 1.0) * factor
        return Domain(
            self.outer_loop * factor,
            tuple(h * factor for h in self.hole_loops),
            tuple((similarity_conjugate(c, factor, 1.0), reg) for c, reg in self.charts),
            self.label,
            self.family,
            params,
        )


@dataclass(frozen=True)
class MetricEstimate:
    """Sampled lower/upper bounds of a local distortion ratio."""

    lower: float
    upper: float
    samples: int
    seed: int

    @property
    def constant(self) -> float:
        return max(self.upper, 1.0 / max(self.lower, 1e-300))


def polygon_signed_area(loop: Array) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polyline_length(loop: Array, closed: bool = True) -> float:
    pts = np.vstack([loop, loop[:1]]) if closed else loop
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def points_in_polygon(points: Array, loop: Array) -> Array:
    """Even-odd test; points exactly on edges may go either way."""
    points = np.atleast_2d(points)
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    a = loop
    b = np.roll(loop, -1, axis=0)
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    crosses = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (y - ay) * (bx - ax) / (by - ay)
    inside = np.sum(crosses & (x < xint), axis=1) % 2 == 1
    return inside


def points_in_domain(points: Array, domain: Domain) -> Array:
    inside = points_in_polygon(points, domain.outer_loop)
    for hole in domain.hole_loops:
        inside &= ~points_in_polygon(points, hole)
    return inside


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def check_domain(domain: Domain) -> list:
    """Return a list of invariant violations (empty means valid).

    Loops may touch themselves at isolated vertices (the rectangle union is
    pinched at the origin); proper edge crossings are violations.
    """
    problems = []
    loops = domain.loops()
    if polygon_signed_area(domain.outer_loop) <= 0:
        problems.append("outer loop is not counter-clockwise")
    for i, hole in enumerate(domain.hole_loops):
        if polygon_signed_area(hole) >= 0:
            problems.append(f"hole {i} is not clockwise")
        if not np.all(points_in_polygon(hole, domain.outer_loop)):
            problems.append(f"hole {i} not inside the outer loop")
    segs = []
    for li, loop in enumerate(loops):
        for j in range(len(loop)):
            segs.append((li, loop[j], loop[(j + 1) % len(loop)]))
    n = len(segs)
    for i in range(n):
        for j in range(i + 1, n):
            if _segments_cross(segs[i][1], segs[i][2], segs[j][1], segs[j][2]):
                problems.append(f"loops {segs[i][0]} and {segs[j][0]} cross")
    if not math.isfinite(boundary_measure(domain)):
        problems.append("infinite boundary length")
    return problems


def build_rectangle(x0: float, x1: float, y0: float, y1: float, label: str = "rectangle") -> Domain:
    loop = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)
    return Domain(loop, label=label, family="rectangle",
                  params={"x0": x0, "x1": x1, "y0": y0, "y1": y1})


def build_square(side: float = 1.0) -> Domain:
    return build_rectangle(0.0, side, 0.0, side, label="square")


def build_lshape() -> Domain:
    """Unit square minus [0.5, 1] x [0.5, 1]; re-entrant corner at (0.5, 0.5)."""
    loop = np.array([[0, 0], [1, 0], [1, 0.5], [0.5, 0.5], [0.5, 1], [0, 1]], dtype=float)
    return Domain(loop, label="lshape", family="lshape", params={})


def build_disk(radius: float = 1.0, n: int = 128) -> Domain:
    th = TWO_PI * np.arange(n) / n
    loop = radius * np.column_stack([np.cos(th), np.sin(th)])
    return Domain(loop, label="disk", family="disk", params={"radius": radius})


def build_annulus(r_in: float = 0.5, r_out: float = 1.0, n: int = 128) -> Domain:
    th = TWO_PI * np.arange(n) / n
    ring = np.column_stack([np.cos(th), np.sin(th)])
    return Domain(r_out * ring, (r_in * ring[::-1],), label="annulus", family="annulus",
                  params={"r_in": r_in, "r_out": r_out})


# --- Example: union of rectangles accumulating at the origin ---------------


def rect_union_rectangle(k: int) -> tuple:
    """x1/x2 extents of the k-th rectangle: |x1 - 2^-k| < 2^-k-2, 0 <= x2 < 2^-k-2."""
    c = 2.0 ** -k
    w = 2.0 ** (-k - 2)
    return (c - w, c + w), (0.0, w)


def _check_kmax(k_max: int) -> None:
    if k_max < 0:
        raise GeometryError("k_max must be nonnegative")
    if k_max > RECT_UNION_MAX_K:
        raise GeometryError("truncation limit exceeded")


SLOPE = 0.1  # lower edge x2 = x1 / 10 of the wedge


def build_rect_union(k_max: int) -> Domain:
    """Square, wedge and rectangles 1..k_max, unioned.

    Each rectangle pokes through the wedge's slanted lower edge, so between
    consecutive rectangles a small quadrilateral gap is enclosed: these are the
    hole loops.  The rightmost gap opens onto x1 = 1 and is a notch of the outer
    loop; the gap left of the last rectangle reaches the origin, where the outer
    loop touches itself.
    """
    _check_kmax(k_max)
    outer = [(0.0, -1.0), (1.0, -1.0), (1.0, 0.0)]
    if k_max == 0:
        outer += [(0.0, 0.0)]
    else:
        (a1, b1), _ = rect_union_rectangle(1)
        # notch between x1 = 1 and the first rectangle
        outer += [(b1, 0.0), (b1, SLOPE * b1)]
    outer += [(1.0, SLOPE), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]
    if k_max > 0:
        (a, _), _ = rect_union_rectangle(k_max)
        outer += [(a, SLOPE * a), (a, 0.0), (0.0, 0.0)]
    outer.append((0.0, -1.0))
    # drop the explicit closing duplicate of the start point
    outer = np.array(outer[:-1], dtype=float)

    holes = []
    for k in range(1, k_max):
        (left_k, _), _ = rect_union_rectangle(k)
        (_, right_next), _ = rect_union_rectangle(k + 1)
        quad = np.array([
            [right_next, 0.0],
            [right_next, SLOPE * right_next],
            [left_k, SLOPE * left_k],
            [left_k, 0.0],
        ])
        holes.append(quad)  # clockwise
    return Domain(outer, tuple(holes), label=f"rect-union k_max={k_max}",
                  family="rect-union", params={"k_max": k_max})


def build_rect_union_parts(k_max: int) -> tuple:
    """The two elementary pieces (square with rectangles, wedge) of the union."""
    _check_kmax(k_max)
    loop = [(0.0, -1.0), (1.0, -1.0), (1.0, 0.0)]
    for k in range(1, k_max + 1):
        (a, b), (_, top) = rect_union_rectangle(k)
        loop += [(b, 0.0), (b, top), (a, top), (a, 0.0)]
    loop += [(0.0, 0.0)]
    lower = Domain(np.array(loop, dtype=float), label=f"rect-union lower k_max={k_max}",
                   family="rect-union-lower", params={"k_max": k_max})
    wedge = Domain(np.array([[0.0, 0.0], [1.0, SLOPE], [1.0, 1.0], [0.0, 1.0]]),
                   label="rect-union wedge", family="rect-union-wedge", params={})
    return lower, wedge


def rect_union_length_bound(k_max: int) -> float:
    """len(boundary of square-plus-wedge) plus the perimeters of all rectangles."""
    base = polyline_length(build_rect_union(0).outer_loop)
    return base + sum(3.0 * 2.0 ** (-k - 1) for k in range(1, k_max + 1))


def rect_union_series_bound() -> float:
    """Closed form of the bound for k_max -> infinity: base + 3/2."""
    return polyline_length(build_rect_union(0).outer_loop) + 1.5


# --- Example: spiral -------------------------------------------------------


def spiral_parameter_region(n_max: int) -> Array:
    """Triangle {0<s<1, s<t<2s} cut at s = e^-n_max, counter-clockwise."""
    e = math.exp(-n_max)
    return np.array([[e, e], [1.0, 1.0], [1.0, 2.0], [e, 2 * e]])


def _sample_param_segment(a: Array, b: Array, n: int, log_s: bool) -> Array:
    tau = np.linspace(0.0, 1.0, n, endpoint=False)
    if log_s and a[0] != b[0]:
        # rays through the origin: geometric spacing keeps the spiral resolved
        s = a[0] * (b[0] / a[0]) ** tau
        return np.column_stack([s, s * (a[1] / a[0])])
    return a + tau[:, None] * (b - a)


def build_spiral(n_max: int, samples_per_turn: int = 64) -> Domain:
    """Image of the truncated triangle T under the spiral chart."""
    if not 1 <= n_max <= SPIRAL_MAX_N:
        raise GeometryError("n_max must be in [1, 20]")
    region = spiral_parameter_region(n_max)
    pieces = []
    for i in range(4):
        a, b = region[i], region[(i + 1) % 4]
        ray = a[0] != b[0]
        n = samples_per_turn * n_max if ray else samples_per_turn
        pieces.append(_sample_param_segment(a, b, n, log_s=ray))
    param_loop = np.vstack(pieces)
    loop = spiral_map(param_loop)
    if polygon_signed_area(loop) < 0:
        loop = loop[::-1]
    return Domain(loop, (), ((spiral_chart(), region),), label=f"spiral n_max={n_max}",
                  family="spiral", params={"n_max": n_max})


# ---------------------------------------------------------------------------
# Metric estimates
# ---------------------------------------------------------------------------


def _sample_in_polygon(rng, region: Array, n: int) -> Array:
    lo, hi = region.min(axis=0), region.max(axis=0)
    out = []
    count = 0
    while count < n:
        cand = lo + rng.random((2 * n + 16, 2)) * (hi - lo)
        cand = cand[points_in_polygon(cand, region)]
        out.append(cand)
        count += len(cand)
    return np.vstack(out)[:n]


def estimate_quasiisometry(chart: ChartMap, region: Array, n_samples: int = 10_000,
                           seed: int = 0, delta: float = 1e-3) -> MetricEstimate:
    """Sample |phi(y) - phi(z)| / |y - z| over close pairs in ``region``.

    Pairs satisfy |y - z| <= delta * diam(region).  Sampling is affine
    equivariant: the same seed on a scaled region gives scaled samples.
    """
    region = np.asarray(region, dtype=float)
    if n_samples < 100:
        raise GeometryError("n_samples must be at least 100")
    if abs(polygon_signed_area(region)) <= 0.0:
        raise GeometryError("empty region")
    diam = float(np.max(np.linalg.norm(region[:, None, :] - region[None, :, :], axis=-1)))
    rng = np.random.default_rng(seed)
    ys, zs = [], []
    have = 0
    while have < n_samples:
        m = n_samples - have
        y = _sample_in_polygon(rng, region, m)
        ang = TWO_PI * rng.random(m)
        r = delta * diam * (0.5 + 0.5 * rng.random(m))
        z = y + r[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
        keep = points_in_polygon(z, region)
        ys.append(y[keep])
        zs.append(z[keep])
        have += int(keep.sum())
    y = np.vstack(ys)[:n_samples]
    z = np.vstack(zs)[:n_samples]
    ratio = np.linalg.norm(chart.forward(y) - chart.forward(z), axis=1) / np.linalg.norm(y - z, axis=1)
    return MetricEstimate(float(ratio.min()), float(ratio.max()), n_samples, seed)


def interior_metric(mesh, x: int, y: int) -> float:
    """Shortest edge-path length between two mesh vertices.

    This bounds the interior (geodesic) distance from above; the bound is
    attained along directions carried by mesh edges.
    """
    d = dijkstra(mesh.edge_graph(), directed=False, indices=int(x))[int(y)]
    if not np.isfinite(d):
        raise GeometryError("no path")
    return float(d)


def _curve_length(chart: ChartMap, a: Array, b: Array) -> float:
    d = b - a

    def speed(tau):
        p = (a + tau * d)[None, :]
        return float(np.linalg.norm(chart.jacobian(p)[0] @ d))

    val, _ = integrate.quad(speed, 0.0, 1.0, limit=500, epsabs=1e-13, epsrel=1e-12)
    return val


def boundary_measure(domain: Domain) -> float:
    """Length of the boundary.

    Charted domains integrate |J t| along the edges of each chart's parameter
    region; plain domains sum their polyline lengths.
    """
    if domain.charts:
        total = 0.0
        for chart, region in domain.charts:
            for i in range(len(region)):
                total += _curve_length(chart, region[i], region[(i + 1) % len(region)])
        return total
    return sum(polyline_length(loop) for loop in domain.loops())


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _panel_arc(chart, a, b):
    tau = 0.5 * (_GL_X + 1.0)
    pts = a + tau[:, None] * (b - a)
    speed = np.linalg.norm(np.einsum("nij,j->ni", chart.jacobian(pts), b - a), axis=1)
    return 0.5 * float(np.dot(_GL_W, speed))


def area_formula_check(chart: ChartMap, curve: Array, n_panels: int = 64,
                       rtol: float = 1e-6, max_depth: int = 30) -> tuple:
    """Compare the integral of the 1-D Jacobian with the image length.

    Each segment of ``curve`` is split into ``n_panels`` panels; a panel is
    bisected while its image chord is shorter than the Gauss-integrated arc by
    more than ``rtol``.  Returns ``(lhs, rhs)`` where ``lhs`` sums the Jacobian
    integrals and ``rhs`` the image chords over the final panels.
    """
    curve = np.asarray(curve, dtype=float)
    chart.check_inside(curve)
    lhs = rhs = 0.0
    for i in range(len(curve) - 1):
        a, b = curve[i], curve[i + 1]
        nodes = a + np.linspace(0, 1, n_panels + 1)[:, None] * (b - a)
        stack = [(nodes[j], nodes[j + 1], 0) for j in range(n_panels)][::-1]
        while stack:
            p, q, depth = stack.pop()
            arc = _panel_arc(chart, p, q)
            fp, fq = chart.forward(np.array([p, q]))
            chord = float(np.linalg.norm(fq - fp))
            if depth < max_depth and chord < (1.0 - rtol) * arc:
                m = 0.5 * (p + q)
                stack.append((m, q, depth + 1))
                stack.append((p, m, depth + 1))
                continue
            lhs += arc
            rhs += chord
    return lhs, rhs


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def write_domain(domain: Domain, path) -> None:
    lines = [f"domain {domain.label}"]
    if domain.family != "polygon" or domain.params:
        kv = " ".join(f"{k}={v!r}" for k, v in sorted(domain.params.items()))
        lines.append(f"family {domain.family} {kv}".rstrip())
    for kind, loop in [("outer", domain.outer_loop)] + [("hole", h) for h in domain.hole_loops]:
        lines.append(f"loop {kind} {len(loop)}")
        lines += [f"{x!r} {y!r}" for x, y in loop.tolist()]
    for chart, region in domain.charts:
        kind, params = _chart_spec(chart)
        lines.append(" ".join(["chart", kind] + [repr(p) for p in params]))
        lines.append(f"region {len(region)}")
        lines += [f"{x!r} {y!r}" for x, y in np.asarray(region).tolist()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _chart_spec(chart: ChartMap) -> tuple:
    if chart.kind in ("identity", "spiral"):
        return chart.kind, ()
    if chart.kind == "similarity":
        return "similarity", chart.params
    if chart.kind == "composite" and chart.params[:2] == ("conjugate", "spiral"):
        return "spiral_conjugate", chart.params[2:]
    raise GeometryError(f"chart {chart.kind} {chart.params} is not serializable")


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text.strip("'\"")


def read_domain(path) -> Domain:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("domain"):
        raise GeometryError("missing 'domain' header")
    label = lines[0][len("domain"):].strip()
    family, params = "polygon", {}
    outer, holes, charts = None, [], []
    i = 1
    while i < len(lines):
        head = lines[i].split()
        if head[0] == "family":
            family = head[1]
            params = {k: _parse_value(v) for k, v in (kv.split("=", 1) for kv in head[2:])}
            i += 1
        elif head[0] == "loop":
            n = int(head[2])
            pts = np.array([[float(v) for v in lines[i + 1 + j].split()] for j in range(n)])
            if head[1] == "outer":
                outer = pts
            else:
                holes.append(pts)
            i += n + 1
        elif head[0] == "chart":
            chart = chart_from_spec(head[1], head[2:])
            n = int(lines[i + 1].split()[1])
            region = np.array([[float(v) for v in lines[i + 2 + j].split()] for j in range(n)])
            charts.append((chart, region))
            i += n + 2
        else:
            raise GeometryError(f"line {i + 1}: unknown record {head[0]!r}")
    if outer is None:
        raise GeometryError("no outer loop")
    return Domain(outer, tuple(holes), tuple(charts), label, family, params)
