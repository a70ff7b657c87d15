"""Command line front end: ``roughlap {mesh,solve,spectrum,exterior,geometry-check}``.

Every subcommand accepts ``--config file.json``; explicit flags override the
file.  Outputs are CSV/JSON files whose first lines echo the effective config
and the tool version, so reruns with the same config are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import exterior as ex
from . import fem
from . import geometry as geo
from . import mesh as ms
from . import solve as sv
from .errors import CompatibilityError, ConvergenceError, RoughLapError

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_CONVERGENCE = 0, 2, 3, 4
PI = math.pi


class UsageError(Exception):
    pass


def thread_count() -> int:
    raw = os.environ.get("ROUGHLAP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"ROUGHLAP_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _pmap(fn, items):
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc.msg} at line {exc.lineno} column {exc.colno}")
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return cfg


def merged(args, defaults: dict, flag_keys) -> dict:
    cfg = dict(defaults)
    cfg.update(load_config(args.config))
    for key in flag_keys:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def header(cfg: dict) -> str:
    return (f"# roughlap {__version__}\n"
            f"# config {json.dumps(cfg, sort_keys=True, separators=(',', ':'))}\n")


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, cfg: dict, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(header(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())


def write_json(path: Path, cfg: dict, payload: dict) -> None:
    doc = {"tool": "roughlap", "version": __version__, "config": cfg, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def outdir(cfg) -> Path:
    p = Path(cfg.get("out", "out"))
    p.mkdir(parents=True, exist_ok=True)
    return p


def build_domain(spec) -> geo.Domain:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "square":
        d = geo.build_square(spec.get("side", 1.0))
    elif kind == "rectangle":
        d = geo.build_rectangle(*spec.get("bounds", [0.0, 2.0, 0.0, 1.0]))
    elif kind == "lshape":
        d = geo.build_lshape()
    elif kind == "disk":
        d = geo.build_disk(spec.get("radius", 1.0))
    elif kind == "annulus":
        d = geo.build_annulus(spec.get("r_in", 0.5), spec.get("r_out", 1.0))
    elif kind == "spiral":
        d = geo.build_spiral(int(spec.get("n_max", 3)))
    elif kind == "rect-union":
        d = geo.build_rect_union(int(spec.get("k_max", 2)))
    else:
        raise UsageError(f"unknown domain kind {kind!r}")
    scale = spec.get("scale", 1.0)
    return d.scaled(scale) if scale != 1.0 else d


def level_mesh(domain: geo.Domain, base_h: float, level: int) -> ms.Mesh:
    return ms.refine_n(ms.triangulate(domain, base_h), level)


# ---------------------------------------------------------------------------
# manufactured solutions and sources
# ---------------------------------------------------------------------------


MANUFACTURED = {
    "sin_sin": (lambda x, y: np.sin(PI * x) * np.sin(PI * y),
                lambda x, y: (PI * np.cos(PI * x) * np.sin(PI * y), PI * np.sin(PI * x) * np.cos(PI * y)),
                lambda x, y: 2 * PI ** 2 * np.sin(PI * x) * np.sin(PI * y)),
    "cos_x": (lambda x, y: np.cos(PI * x),
              lambda x, y: (-PI * np.sin(PI * x), 0 * y),
              lambda x, y: PI ** 2 * np.cos(PI * x)),
    # unit disk, h = 1, F = 1
    "disk_robin": (lambda x, y: 0.75 - 0.25 * (x * x + y * y),
                   lambda x, y: (-0.5 * x, -0.5 * y),
                   lambda x, y: 1.0 + 0 * x),
}


def source_function(name):
    if name in MANUFACTURED:
        return MANUFACTURED[name][2]
    if name == "one":
        return lambda x, y: 1.0 + 0 * x
    if isinstance(name, (int, float)):
        return lambda x, y: float(name) + 0 * x
    raise UsageError(f"unknown source {name!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_mesh(args) -> int:
    if args.n_max is not None and args.domain not in (None, "spiral"):
        raise UsageError("--n-max only applies to --domain spiral")
    if args.k_max is not None and args.domain not in (None, "rect-union"):
        raise UsageError("--k-max only applies to --domain rect-union")
    cfg = merged(args, {"domain": "square", "h": 0.1, "refine": 0, "out": "out"},
                 ["domain", "h", "refine", "out", "n_max", "k_max"])
    spec = {"kind": cfg["domain"]}
    if "n_max" in cfg:
        spec["n_max"] = cfg["n_max"]
    if "k_max" in cfg:
        spec["k_max"] = cfg["k_max"]
    domain = build_domain(spec)
    mesh = ms.refine_n(ms.triangulate(domain, cfg["h"]), int(cfg["refine"]))
    report = ms.validate(mesh, domain.loop_count)
    out = outdir(cfg)
    ms.write_mesh(mesh, out / "mesh.txt")
    write_json(out / "mesh_report.json", cfg, {
        "nv": mesh.nv, "nt": mesh.nt, "boundary_loops": report.loops,
        "expected_loops": domain.loop_count, "boundary_length": mesh.boundary_length(),
        "area": mesh.area(), "quality": report.as_dict()})
    print(f"mesh: {mesh.nv} vertices, {mesh.nt} triangles, {report.loops} boundary loops, "
          f"min angle {report.min_angle:.3f} deg")
    if not report.valid:
        print("validation failed: " + "; ".join(report.violations), file=sys.stderr)
        return 1
    return EXIT_OK


def _robin_h(cfg) -> fem.RobinCoefficient:
    h = cfg.get("h", 1.0)
    if isinstance(h, dict):
        return fem.RobinCoefficient(per_marker={int(k): float(v) for k, v in h.items()})
    return fem.RobinCoefficient(per_marker={}, default=float(h))


def cmd_solve(args) -> int:
    cfg = merged(args, {"problem": "dirichlet", "domain": {"kind": "square"}, "levels": [2, 3, 4, 5],
                        "base_h": 0.5, "source": "sin_sin", "exact": "sin_sin", "tol": 1e-10,
                        "tol_compat": 1e-10, "out": "out"},
                 ["problem", "out"])
    problem = cfg["problem"]
    if problem not in ("dirichlet", "neumann", "robin"):
        raise UsageError(f"unknown problem {problem!r}")
    domain = build_domain(cfg["domain"])
    F = source_function(cfg["source"])
    exact = MANUFACTURED.get(cfg.get("exact")) if cfg.get("exact") else None
    out = outdir(cfg)

    def run(level):
        mesh = level_mesh(domain, cfg["base_h"], level)
        K, M = fem.assemble_stiffness(mesh), fem.assemble_mass(mesh)
        B1 = fem.assemble_boundary_mass(mesh, 1.0)
        b = fem.assemble_load(mesh, F)
        B = None
        if problem == "dirichlet":
            res = sv.solve_dirichlet(K, b, mesh.boundary_vertices(), cfg["tol"])
        elif problem == "neumann":
            res = sv.solve_neumann(K, M, b, cfg["tol"], cfg["tol_compat"])
        else:
            B = fem.assemble_boundary_mass(mesh, _robin_h(cfg))
            res = sv.solve_robin(K, B, b, cfg["tol"])
        u = res.solution
        if exact is not None and problem == "neumann":
            # compare against the exact solution's M-mean representative
            Mc, ones = fem.as_csr(M), np.ones(mesh.nv)
            shift = float(ones @ (Mc @ fem.interpolate(mesh, exact[0]))) / float(ones @ (Mc @ ones))
            err = fem.error_norms(mesh, u + shift, exact[0], exact[1])
        elif exact is not None:
            err = fem.error_norms(mesh, u, exact[0], exact[1])
        else:
            err = (float("nan"), float("nan"))
        nrm = fem.norms(u, K, M, B1, B)
        energy_identity = float(u @ (fem.as_csr(K) @ u) + (0 if B is None else u @ (fem.as_csr(B) @ u)))
        return level, mesh, res, err, nrm, energy_identity, float(b @ u)

    try:
        results = _pmap(run, list(cfg["levels"]))
    except CompatibilityError as exc:
        write_json(out / "solve_report.json", cfg, {"status": "compatibility failure",
                                                   "defect": exc.defect, "message": str(exc)})
        raise
    rows, prev = [], None
    for level, mesh, res, err, nrm, e_lhs, e_rhs in results:
        r2 = prev[0] / err[0] if prev else float("nan")
        r1 = prev[1] / err[1] if prev else float("nan")
        rows.append([level, mesh.max_edge(), mesh.nv, err[0], err[1], r2, r1, nrm.energy, e_lhs, e_rhs,
                     res.iterations, res.relative_residual])
        prev = err
    write_csv(out / "solve.csv", cfg, ["level", "h", "nv", "l2_error", "h1_error", "l2_ratio", "h1_ratio",
                                       "energy", "energy_form", "load_pairing", "iterations", "residual"], rows)
    last = results[-1]
    np.savetxt(out / "solution.txt", last[2].solution, header=header(cfg).replace("# ", "").rstrip(),
               fmt="%.17g")
    for row in rows:
        print(",".join(fmt(v) for v in row))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = merged(args, {"kind": "steklov", "domain": {"kind": "disk"}, "levels": [4], "base_h": 0.5,
                        "count": 5, "h": 1.0, "tol": 1e-8, "out": "out"},
                 ["kind", "out"])
    kind = cfg["kind"]
    if kind not in ("poincare", "steklov", "trace", "robin", "trace-constant"):
        raise UsageError(f"unknown spectrum kind {kind!r}")
    dspec = cfg["domain"] if isinstance(cfg["domain"], dict) else {"kind": cfg["domain"]}
    k_list = dspec.get("k_max") if isinstance(dspec.get("k_max"), list) else [None]
    jobs = [(k, lv) for k in k_list for lv in cfg["levels"]]

    def run(job):
        k, level = job
        spec = dict(dspec)
        if k is not None:
            spec["k_max"] = k
        mesh = level_mesh(build_domain(spec), cfg["base_h"], level)
        K, M = fem.assemble_stiffness(mesh), fem.assemble_mass(mesh)
        B1 = fem.assemble_boundary_mass(mesh, 1.0)
        h = mesh.max_edge()
        if kind == "poincare":
            rep = sv.neumann_spectrum(K, M, cfg["count"], cfg["tol"], h)
            derived = 1.0 / np.sqrt(rep.eigenvalues)
        elif kind in ("steklov", "trace", "trace-constant"):
            variant = "classical" if kind == "steklov" else "trace"
            rep = sv.steklov_spectrum(K, M, B1, cfg["count"], cfg["tol"], variant, h)
            derived = 1.0 / np.sqrt(rep.eigenvalues) if variant == "trace" else rep.eigenvalues
        else:
            B = fem.assemble_boundary_mass(mesh, _robin_h(cfg))
            rep = sv.robin_fredholm_spectrum(K, B, M, cfg["count"], cfg["tol"], h)
            derived = rep.eigenvalues
        return k, level, rep, derived

    rows = []
    for k, level, rep, derived in _pmap(run, jobs):
        for (idx, lam, res), d in zip(rep.rows(), derived):
            rows.append(["" if k is None else k, level, rep.mesh_h, idx, lam, res, float(d)])
    derived_name = {"poincare": "poincare_constant", "steklov": "eigenvalue",
                    "trace": "trace_constant", "trace-constant": "trace_constant",
                    "robin": "eigenvalue"}[kind]
    out = outdir(cfg)
    write_csv(out / "spectrum.csv", cfg, ["k_max", "level", "h", "index", "eigenvalue", "residual",
                                          derived_name], rows)
    for row in rows:
        print(",".join(fmt(v) for v in row))
    return EXIT_OK


EXTERIOR_DEFAULTS = {
    "name": "sphere_k0", "obstacle": {"kind": "sphere", "radius": 1.0}, "bc": "dirichlet", "h": 0.0,
    "k": 0.0, "epsilons": [0.1, 0.01, 0.001, 0.0], "a": 1.5, "R_inf": 8192.0, "target_h": 0.05,
    "near_radius": 2.0, "growth": 1.2, "max_dr": None, "n_theta": None,
    "source": {"z": 2.0, "radius": 0.5, "mass": 1.0}, "tol": 1e-10,
    "probe_seed": 0, "probe_count": 20, "probe_rho": [1.2, 6.0],
    "decay_radii": [32, 64, 128, 256, 512], "radiation_radii": [],
    "representation": {"sphere": 4.0, "target_radius": 8.0, "angles": [0.1, 0.7, 1.3, 1.9, 2.5, 3.0]},
    "out": "out",
}


def probe_points(cfg, bump: ex.Bump) -> np.ndarray:
    rng = np.random.default_rng(cfg["probe_seed"])
    lo, hi = cfg["probe_rho"]
    pts = []
    while len(pts) < cfg["probe_count"]:
        rho, th = rng.uniform(lo, hi), rng.uniform(0.0, PI)
        p = (rho * math.sin(th), rho * math.cos(th))
        if math.hypot(p[0], p[1] - bump.z) > 1.2 * bump.radius:
            pts.append(p)
    return np.array(pts)


def run_exterior(cfg: dict) -> dict:
    """Run one scenario; returns the tables and diagnostics without writing files."""
    ob = cfg["obstacle"]
    if ob.get("kind") == "sphere":
        obstacle = ex.build_half_disk(ob.get("radius", 1.0))
    elif ob.get("kind") == "rect-union":
        obstacle = ex.rotated_rect_union(int(ob.get("k_max", 2)), ob.get("offset", 2.0))
    else:
        raise UsageError(f"unknown obstacle {ob.get('kind')!r}")
    mesh = ex.build_exterior_mesh(obstacle, cfg["R_inf"], cfg["target_h"], cfg["near_radius"],
                                  cfg["growth"], cfg["max_dr"], cfg["n_theta"])
    bump = ex.Bump(**cfg["source"])
    schedule = ex.ContinuationSchedule(tuple(cfg["epsilons"]), cfg["k"], cfg["bc"], cfg["h"])
    spec = ex.WeightedNormSpec(cfg["a"])
    res = ex.solve_shifted(mesh, schedule, bump, cfg["tol"], spec, workers=thread_count())
    u = res.fields[-1]
    cont_rows = [[e, n, "" if j == 0 else res.pairwise_diffs[j - 1]]
                 for j, (e, n) in enumerate(zip(res.epsilons, res.weighted_norms))]
    out = {"mesh": mesh, "result": res, "continuation_rows": cont_rows,
           "norm_ratio": max(res.weighted_norms) / res.weighted_norms[-1]}
    radii = sorted(set(float(r) for r in cfg["decay_radii"]) | set(float(r) for r in cfg["radiation_radii"]))
    loc = ex.PointLocator(mesh)
    maxu = ex.sphere_max(u, mesh, radii, locator=loc) if radii else []
    rad = (ex.radiation_residual(u, mesh, cfg["k"], radii) if cfg["k"] > 0 and radii
           else [float("nan")] * len(radii))
    out["radial_rows"] = [[r, m, q] for r, m, q in zip(radii, maxu, rad)]
    if len(cfg["decay_radii"]) >= 3:
        out["decay"] = ex.decay_fit(u, mesh, cfg["decay_radii"])
    if cfg["k"] == 0 and cfg["bc"] == "dirichlet" and ob.get("kind") == "sphere" and res.epsilons[-1] == 0:
        P = probe_points(cfg, bump)
        oracle = ex.kelvin_bump_solution(P, bump, ob.get("radius", 1.0))
        num = loc.evaluate(u, P).real
        out["kelvin_rel_error"] = np.abs(num - oracle) / np.abs(oracle)
        rp = cfg["representation"]
        T = np.array([[rp["target_radius"] * math.sin(a), rp["target_radius"] * math.cos(a)]
                      for a in rp["angles"]])
        rep = ex.green_representation(u.real, mesh, rp["sphere"], T)
        direct = loc.evaluate(u, T).real
        out["representation_rel_error"] = np.abs(rep - direct) / np.abs(direct)
    return out


def cmd_exterior(args) -> int:
    cfg = merged(args, EXTERIOR_DEFAULTS, ["out"])
    unknown = set(cfg) - set(EXTERIOR_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown exterior config keys: {sorted(unknown)}")
    out = run_exterior(cfg)
    d = outdir(cfg)
    name = cfg["name"]
    write_csv(d / f"{name}_continuation.csv", cfg, ["epsilon", "weighted_norm", "pairwise_diff"],
              out["continuation_rows"])
    write_csv(d / f"{name}_radial.csv", cfg, ["radius", "max_abs_u", "radiation_residual"], out["radial_rows"])
    summary = {k: out[k] for k in ("norm_ratio", "decay", "kelvin_rel_error", "representation_rel_error")
               if k in out}
    summary["pairwise_diffs"] = out["result"].pairwise_diffs
    summary["weighted_norms"] = out["result"].weighted_norms
    summary["nv"] = out["mesh"].nv
    write_json(d / f"{name}_summary.json", cfg, summary)
    for row in out["continuation_rows"]:
        print(",".join(fmt(v) for v in row))
    if "decay" in out:
        print(f"decay exponent {out['decay'][0]:.4f}")
    return EXIT_OK


def cmd_geometry_check(args) -> int:
    cfg = merged(args, {"seed": 0, "samples": 20000, "n_values": [1, 3, 5], "panels": 64, "level": 4,
                        "out": "out"}, ["seed", "out"])
    rows = []
    chart = geo.spiral_chart()
    for n in cfg["n_values"]:
        est = geo.estimate_quasiisometry(chart, geo.spiral_parameter_region(n), cfg["samples"], cfg["seed"])
        rows.append(["quasiisometry_constant", n, est.constant, "", ""])
    s = np.exp(np.linspace(-6.0, 0.0, 2))
    lhs, rhs = geo.area_formula_check(chart, np.column_stack([s, s]), cfg["panels"])
    ref = math.exp(0) * math.sqrt(1 + 4 * PI ** 2) * (1 - math.exp(-6.0))
    rows.append(["spiral_ray_length_lhs", "", lhs, ref, abs(lhs / ref - 1) <= 5e-3])
    rows.append(["spiral_ray_length_rhs", "", rhs, ref, abs(rhs / ref - 1) <= 5e-3])
    sq = level_mesh(geo.build_square(), 0.5, cfg["level"])
    a = int(np.argmin(np.hypot(sq.vertices[:, 0], sq.vertices[:, 1])))
    b = int(np.argmin(np.hypot(sq.vertices[:, 0] - 1, sq.vertices[:, 1] - 1)))
    dist = geo.interior_metric(sq, a, b)
    rows.append(["interior_metric_square_diagonal", cfg["level"], dist, math.sqrt(2),
                 abs(dist / math.sqrt(2) - 1) <= 0.05])
    for k in (0, 1, 2, 4, 6):
        length = geo.boundary_measure(geo.build_rect_union(k))
        bound = geo.rect_union_length_bound(k)
        rows.append(["rect_union_boundary_length", k, length, bound, length <= bound])
    write_csv(outdir(cfg) / "geometry_check.csv", cfg, ["check", "parameter", "value", "reference", "passed"],
              rows)
    for row in rows:
        print(",".join(fmt(v) for v in row))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roughlap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"roughlap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="build and validate a mesh")
    m.add_argument("--domain", choices=["square", "rectangle", "lshape", "disk", "annulus", "spiral",
                                        "rect-union"])
    m.add_argument("--n-max", dest="n_max", type=int, help="spiral truncation (spiral only)")
    m.add_argument("--k-max", dest="k_max", type=int, help="rectangle count (rect-union only)")
    m.add_argument("--h", type=float, help="target grid spacing")
    m.add_argument("--refine", type=int, help="uniform refinements after meshing")
    m.set_defaults(func=cmd_mesh)

    s = sub.add_parser("solve", help="Dirichlet/Neumann/Robin refinement ladder")
    s.add_argument("--problem", choices=["dirichlet", "neumann", "robin"])
    s.set_defaults(func=cmd_solve)

    sp = sub.add_parser("spectrum", help="Poincare, Steklov, trace and Robin spectra")
    sp.add_argument("--kind", choices=["poincare", "steklov", "trace", "robin", "trace-constant"])
    sp.set_defaults(func=cmd_spectrum)

    e = sub.add_parser("exterior", help="limiting absorption scenario")
    e.set_defaults(func=cmd_exterior)

    g = sub.add_parser("geometry-check", help="chart and metric checks")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_geometry_check)

    for sp_ in (m, s, sp, e, g):
        sp_.add_argument("--config", help="JSON config file")
        sp_.add_argument("--out", help="output directory")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except RoughLapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
