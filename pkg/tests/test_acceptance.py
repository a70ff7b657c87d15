"""Acceptance criteria 1-11.

Each test prints one ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line to the terminal (also when run as ``python tests/test_acceptance.py``)
and then asserts the same verdict.
"""
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from roughlap import cli  # noqa: E402
from roughlap import exterior as ex  # noqa: E402
from roughlap import fem  # noqa: E402
from roughlap import geometry as geo  # noqa: E402
from roughlap import mesh as ms  # noqa: E402
from roughlap import solve as sv  # noqa: E402
from roughlap.errors import CompatibilityError  # noqa: E402

import oracles  # noqa: E402

PI = math.pi
CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SIN = lambda x, y: np.sin(PI * x) * np.sin(PI * y)  # noqa: E731
SIN_GRAD = lambda x, y: (PI * np.cos(PI * x) * np.sin(PI * y), PI * np.sin(PI * x) * np.cos(PI * y))  # noqa: E731
SIN_F = lambda x, y: 2 * PI ** 2 * SIN(x, y)  # noqa: E731


def square_level(level, side=1.0):
    return ms.refine_n(ms.triangulate(geo.build_square(side), 0.5 * side), level)


def disk_level(level):
    return ms.refine_n(ms.disk_base_mesh(), level)


def l2m(M, u):
    return math.sqrt(float(u @ (fem.as_csr(M) @ u)))


class Verdict:
    def __init__(self):
        self.checks = []

    def check(self, name, ok, detail):
        self.checks.append((name, bool(ok), detail))

    @property
    def ok(self):
        return all(ok for _, ok, _ in self.checks)

    def line(self, n):
        failed = [f"{name} ({d})" for name, ok, d in self.checks if not ok]
        summary = "; ".join(f"{name} {d}" for name, _, d in self.checks)
        head = "PASS" if self.ok else "FAIL"
        tail = summary if self.ok else "failed: " + "; ".join(failed) + " | " + summary
        return f"{head} criterion {n}: {tail}"


# ---------------------------------------------------------------------------


def criterion_1():
    v = Verdict()
    errs = []
    for level in (2, 3, 4, 5):
        m = square_level(level)
        K = fem.assemble_stiffness(m)
        u = sv.solve_dirichlet(K, fem.assemble_load(m, SIN_F), m.boundary_vertices(), 1e-12).solution
        errs.append(fem.error_norms(m, u, SIN, SIN_GRAD))
    l2 = [a[0] / b[0] for a, b in zip(errs, errs[1:])]
    h1 = [a[1] / b[1] for a, b in zip(errs, errs[1:])]
    v.check("L2 ratios", all(3.6 <= r <= 4.4 for r in l2), fmt_list(l2))
    v.check("H1 ratios", all(1.8 <= r <= 2.2 for r in h1), fmt_list(h1))
    return v


def criterion_2():
    v = Verdict()
    exact = lambda x, y: np.cos(PI * x)  # noqa: E731
    errs, means, shifts = [], [], []
    for level in (2, 3, 4, 5):
        m = square_level(level)
        K, M = fem.assemble_stiffness(m), fem.assemble_mass(m)
        b = fem.assemble_load(m, lambda x, y: PI ** 2 * np.cos(PI * x))
        u = sv.solve_neumann(K, M, b, 1e-12).solution
        errs.append(fem.error_norms(m, u, exact)[0])
        means.append(abs(np.ones(m.nv) @ (fem.as_csr(M) @ u)))
        A = fem.as_csr(K)
        shifts.append(float(np.max(np.abs((A @ (u + 3.0) - b) - (A @ u - b)))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    v.check("cos L2 ratios", all(3.6 <= r <= 4.4 for r in ratios), fmt_list(ratios))
    v.check("M-mean", max(means) <= 1e-12, f"max {max(means):.1e}")
    v.check("shift residual change", max(shifts) <= 1e-12, f"max {max(shifts):.1e}")
    m = square_level(3)
    try:
        sv.solve_neumann(fem.assemble_stiffness(m), fem.assemble_mass(m), fem.assemble_load(m, 1.0))
        v.check("F=1 rejected", False, "accepted")
    except CompatibilityError as exc:
        v.check("F=1 rejected", abs(exc.defect - 1.0) < 1e-12, f"defect {exc.defect:.12g}")
    return v


def criterion_3():
    v = Verdict()
    m = disk_level(4)
    K, B = fem.assemble_stiffness(m), fem.assemble_boundary_mass(m, 1.0)
    u = sv.solve_robin(K, B, fem.assemble_load(m, 1.0), 1e-12).solution
    centre = u[int(np.argmin(np.linalg.norm(m.vertices, axis=1)))]
    edge = float(np.mean(u[m.boundary_vertices()]))
    v.check("u(0)", abs(centre / 0.75 - 1) <= 0.02, f"{centre:.5f}")
    v.check("boundary", abs(edge / 0.5 - 1) <= 0.02, f"{edge:.5f}")
    m = square_level(4)
    K, M = fem.assemble_stiffness(m), fem.assemble_mass(m)
    b = fem.assemble_load(m, SIN_F)
    ur = sv.solve_robin(K, fem.assemble_boundary_mass(m, 1e6), b, 1e-12).solution
    ud = sv.solve_dirichlet(K, b, m.boundary_vertices(), 1e-12).solution
    d = l2m(M, ur - ud)
    v.check("penalty limit", d < 1e-3, f"L2 {d:.2e}")
    return v


def criterion_4():
    v = Verdict()
    m = square_level(4)
    c = sv.poincare_constant(fem.assemble_stiffness(m), fem.assemble_mass(m))
    big = square_level(4, 2.0)
    c2 = sv.poincare_constant(fem.assemble_stiffness(big), fem.assemble_mass(big))
    v.check("unit square", abs(c * PI - 1) <= 0.01, f"{c:.6f} vs {1 / PI:.6f}")
    v.check("scaling", abs(c2 / (2 * c) - 1) <= 1e-7, f"ratio {c2 / c:.10f}")
    return v


def criterion_5():
    v = Verdict()
    x1 = oracles.robin_disk_root()
    v.check("oracle", abs(x1 - oracles.ROBIN_DISK_X1) < 1e-14, f"x1 {x1:.12f}")
    m = disk_level(4)
    rep = sv.robin_fredholm_spectrum(fem.assemble_stiffness(m), fem.assemble_boundary_mass(m, 1.0),
                                     fem.assemble_mass(m), 1)
    lam = rep.eigenvalues[0]
    v.check("lambda1", abs(lam / x1 ** 2 - 1) <= 0.01, f"{lam:.5f} vs {x1 ** 2:.5f}")
    return v


def criterion_6():
    v = Verdict()
    m = disk_level(4)
    sig = sv.steklov_spectrum(fem.assemble_stiffness(m), fem.assemble_mass(m),
                              fem.assemble_boundary_mass(m, 1.0), 5, variant="classical").eigenvalues
    ok = abs(sig[0]) <= 0.02 and all(abs(s / t - 1) <= 0.02 for s, t in zip(sig[1:], (1, 1, 2, 2)))
    v.check("disk Steklov", ok, fmt_list(sig))
    c4, c5 = sv.trace_constant(square_level(4)), sv.trace_constant(square_level(5))
    v.check("square trace", abs(c5 / c4 - 1) <= 0.02, f"{c4:.5f}, {c5:.5f}")
    cs = [sv.trace_constant(ms.triangulate(geo.build_rect_union(k), 0.04)) for k in (2, 4, 6)]
    v.check("rect-union trace", max(cs) / min(cs) <= 1.10 and max(cs) < np.inf, fmt_list(cs))
    a = ms.triangulate(geo.build_rectangle(0, 1, 0, 1), 0.05)
    b = ms.triangulate(geo.build_rectangle(0.5, 1.5, 0, 1), 0.05)
    u = ms.triangulate(geo.build_rectangle(0, 1.5, 0, 1), 0.05)
    rep = sv.union_embedding_check(a, b, u, 3)
    v.check("union", rep.passed, f"{rep.trace_constants['union']:.4f} <= {rep.bound:.4f}")
    return v


def criterion_7():
    v = Verdict()
    rng = np.random.default_rng(0)
    worst = 0.0
    T2 = geo.spiral_parameter_region(2)
    sp = geo.spiral_chart()
    pts = geo._sample_in_polygon(rng, T2, 2000)
    charts = [
        (sp, pts),
        (geo.similarity_conjugate(sp, 2.0, 3.0), pts / 3.0),
        (geo.log_band_chart(), np.column_stack([rng.uniform(0, 5, 2000), rng.uniform(0, math.log(2), 2000)])),
        (geo.meridian_polar_chart(), np.column_stack([rng.uniform(1, 9, 2000), rng.uniform(0.01, 3.1, 2000)])),
    ]
    for ch, p in charts:
        back = ch.inverse(ch.forward(p))
        worst = max(worst, float(np.max(np.abs(back - p) / np.maximum(np.abs(p), 1e-3 * np.abs(p).max()))))
    v.check("roundtrips", worst <= 1e-12, f"max rel {worst:.1e}")
    qs = [geo.estimate_quasiisometry(sp, geo.spiral_parameter_region(n), 10_000, 0).constant for n in (1, 3, 5)]
    v.check("Q over T_n", max(qs) / min(qs) - 1 <= 0.05, fmt_list(qs))
    worst_area = 0.0
    for curve in ([[0.5, 0.6], [0.9, 1.5]], [[0.2, 0.25], [0.2, 0.39], [0.05, 0.08]], [[1.0, 1.0], [1.0, 2.0]]):
        lhs, rhs = geo.area_formula_check(sp, np.array(curve), 64)
        worst_area = max(worst_area, abs(lhs - rhs) / rhs)
    v.check("area formula", worst_area <= 5e-3, f"max rel {worst_area:.1e}")
    lhs, _ = geo.area_formula_check(sp, np.array([[1.0, 1.0], [math.exp(-30), math.exp(-30)]]), 64)
    v.check("ray length", abs(lhs / oracles.SPIRAL_RAY_LENGTH - 1) <= 5e-3,
            f"{lhs:.5f} vs {oracles.SPIRAL_RAY_LENGTH:.5f}")
    reg = geo.spiral_parameter_region(1)
    base = geo.estimate_quasiisometry(sp, reg, 10_000, 0)
    slack = 0.0
    for k, k1 in [(2.0, 3.0), (0.5, 4.0), (math.e, 1 / math.e)]:
        e = geo.estimate_quasiisometry(geo.similarity_conjugate(sp, k, k1), reg / k1, 10_000, 0)
        slack = max(slack, e.upper / (k * k1 * base.upper) - 1)
    v.check("conjugation bound", slack <= 0.02, f"max excess {slack:.2e}")
    lengths = [(k, geo.boundary_measure(geo.build_rect_union(k)), geo.rect_union_length_bound(k))
               for k in (0, 1, 2, 4, 6)]
    v.check("rect-union lengths", all(L <= B + 1e-12 for _, L, B in lengths)
            and all(B < geo.rect_union_series_bound() + 1e-12 for _, _, B in lengths),
            ", ".join(f"k{k}:{L:.4f}<={B:.4f}" for k, L, B in lengths))
    return v


def criterion_8():
    v = Verdict()
    t0 = time.perf_counter()
    out = cli.run_exterior(dict(cli.EXTERIOR_DEFAULTS))
    cfg1 = dict(cli.EXTERIOR_DEFAULTS)
    cfg1.update(cli.load_config(CONFIGS / "sphere_k1.json"))
    cli.run_exterior(cfg1)
    elapsed = time.perf_counter() - t0
    diffs = out["result"].pairwise_diffs
    v.check("Cauchy diffs strictly decreasing", all(b < a for a, b in zip(diffs, diffs[1:])), fmt_list(diffs))
    v.check("sup norm ratio", out["norm_ratio"] <= 1.5, f"{out['norm_ratio']:.4f}")
    kel = float(np.max(out["kelvin_rel_error"]))
    v.check("Kelvin oracle", kel <= 0.05 and len(out["kelvin_rel_error"]) == 20, f"max rel {kel:.4f}")
    slope = out["decay"][0]
    v.check("decay exponent", -1.1 <= slope <= -0.9, f"{slope:.4f}")
    rep = float(np.max(out["representation_rel_error"]))
    v.check("representation", rep <= 0.03, f"max rel {rep:.4f}")
    v.check("runtime", elapsed <= 180, f"{elapsed:.1f}s")
    return v


def criterion_9():
    v = Verdict()
    radii = [4.0, 8.0, 16.0]
    res = []
    for dr, nt in ((0.5, 32), (0.25, 64), (0.125, 128)):
        m = ex.shell_mesh(1.0, 40.0, dr, max_dr=dr, n_theta=nt)
        rho = np.linalg.norm(m.vertices, axis=1)
        res.append(ex.radiation_residual(np.exp(1j * rho) / (4 * PI * rho), m, 1.0, radii))
    cont = 1.0 / (4 * PI * np.array(radii) ** 2)
    disc = [np.abs(r - cont) for r in res]
    v.check("exact field: decreasing in radius", all(np.all(np.diff(r) < 0) for r in res),
            fmt_list(res[-1]))
    v.check("exact field: discretisation part decreasing under refinement",
            np.all(disc[1] < disc[0]) and np.all(disc[2] < disc[1]), fmt_list([d[0] for d in disc]))
    cfg = dict(cli.EXTERIOR_DEFAULTS)
    cfg.update(cli.load_config(CONFIGS / "sphere_k1.json"))
    rows = cli.run_exterior(cfg)["radial_rows"]
    q = [r[2] for r in rows]
    v.check("k=1 solution decreasing to floor", all(b < a for a, b in zip(q, q[1:])),
            f"{q[0]:.2e} at r={rows[0][0]:g} -> {q[-1]:.2e} at r={rows[-1][0]:g}")
    return v


def criterion_10():
    v = Verdict()
    m = ex.rotated_domain_mesh(ex.rotated_rect_union(4), 0.05)
    fields = ex.random_axisymmetric_fields(m, 200, seed=7)
    ratios = []
    for j in range(fields.shape[1]):
        lhs, rhs = ex.l3_inequality(m, fields[:, j])
        ratios.append(lhs / rhs)
    bad = int(np.sum(np.array(ratios) > 1))
    v.check("violations", bad == 0, f"{bad} of 200, worst lhs/rhs {max(ratios):.3f}")
    return v


def _command_for(cfg):
    if "problem" in cfg:
        return "solve"
    if "kind" in cfg:
        return "spectrum"
    if "obstacle" in cfg:
        return "exterior"
    return "geometry-check"


def criterion_11(tmp_root):
    v = Verdict()
    os.environ.setdefault("ROUGHLAP_THREADS", "1")
    mismatched = []
    names = sorted(CONFIGS.glob("*.json"))
    for path in names:
        cmd = _command_for(json.loads(path.read_text()))
        out = Path(tmp_root) / path.stem
        snaps = []
        for _ in range(2):
            cli.main([cmd, "--config", str(path), "--out", str(out)])
            snaps.append({f.name: f.read_bytes() for f in sorted(out.iterdir()) if f.suffix in (".csv", ".json")})
        if snaps[0] != snaps[1] or not snaps[0]:
            mismatched.append(path.stem)
    v.check("byte-identical reruns", not mismatched,
            f"{len(names) - len(mismatched)}/{len(names)} configs" + (f", differing: {mismatched}" if mismatched else ""))
    return v


def fmt_list(xs):
    return "[" + ", ".join(f"{float(x):.4g}" for x in xs) + "]"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def _emit(line, capsys=None):
    if capsys is None:
        print(line)
        return
    with capsys.disabled():
        print("\n" + line)


@pytest.mark.slow
@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    v = CRITERIA[n]()
    _emit(v.line(n), capsys)
    assert v.ok, v.line(n)


@pytest.mark.slow
def test_criterion_11(tmp_path, capsys):
    v = criterion_11(tmp_path)
    _emit(v.line(11), capsys)
    assert v.ok, v.line(11)


if __name__ == "__main__":
    import tempfile

    verdicts = {n: fn() for n, fn in CRITERIA.items()}
    with tempfile.TemporaryDirectory() as d:
        verdicts[11] = criterion_11(d)
    for n, v in verdicts.items():
        _emit(v.line(n))
    sys.exit(0 if all(v.ok for v in verdicts.values()) else 1)
