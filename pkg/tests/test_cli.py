import csv
import json
import math
from pathlib import Path

import pytest

from roughlap import __version__
from roughlap import mesh as ms
from roughlap.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(*argv):
    return main([str(a) for a in argv])


def read_table(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0] == f"# roughlap {__version__}"
    assert lines[1].startswith("# config ")
    cfg = json.loads(lines[1][len("# config "):])
    rows = list(csv.DictReader(lines[2:]))
    return cfg, rows


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_version_flag(capsys):
    assert run("--version") == 0
    assert capsys.readouterr().out.strip() == f"roughlap {__version__}"


def test_mesh_spiral(tmp_path):
    assert run("mesh", "--domain", "spiral", "--n-max", 4, "--h", 0.05, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "mesh_report.json").read_text())
    assert rep["version"] == __version__ and rep["config"]["n_max"] == 4
    assert rep["quality"]["valid"] and rep["boundary_loops"] == 1
    m = ms.read_mesh(tmp_path / "mesh.txt")
    assert m.nv == rep["nv"] and m.nt == rep["nt"]


def test_mesh_rect_union_loops(tmp_path):
    assert run("mesh", "--domain", "rect-union", "--k-max", 3, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "mesh_report.json").read_text())
    assert rep["boundary_loops"] == rep["expected_loops"] == 3


@pytest.mark.parametrize("argv", [
    ["mesh", "--domain", "square", "--n-max", "3"],
    ["mesh", "--domain", "disk", "--k-max", "3"],
    ["mesh", "--domain", "hexagon"],
    ["solve", "--problem", "stokes"],
    ["frobnicate"],
])
def test_usage_errors(tmp_path, argv):
    assert run(*argv, "--out", tmp_path) == 2


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x",\n "k": }\n')
    assert run("exterior", "--config", bad, "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert "line 2 column" in err


def test_unknown_exterior_key(tmp_path):
    p = write_cfg(tmp_path, {"R_inff": 10})
    assert run("exterior", "--config", p, "--out", tmp_path) == 2


def test_solve_dirichlet_ladder(tmp_path):
    assert run("solve", "--config", CONFIGS / "dirichlet_square.json", "--out", tmp_path) == 0
    cfg, rows = read_table(tmp_path / "solve.csv")
    assert cfg["problem"] == "dirichlet" and cfg["tol"] == 1e-12
    ratios = [float(r["l2_ratio"]) for r in rows[1:]]
    assert all(3.6 <= x <= 4.4 for x in ratios)
    for r in rows:
        assert float(r["energy_form"]) == pytest.approx(float(r["load_pairing"]), rel=1e-9)


def test_solve_neumann_incompatible(tmp_path, capsys):
    assert run("solve", "--config", CONFIGS / "neumann_one.json", "--out", tmp_path) == 3
    assert "Neumann compatibility" in capsys.readouterr().err
    rep = json.loads((tmp_path / "solve_report.json").read_text())
    assert rep["defect"] == pytest.approx(1.0, abs=1e-12)


def test_solve_robin_rect_union(tmp_path):
    assert run("solve", "--config", CONFIGS / "robin_rect_union.json", "--out", tmp_path) == 0
    _, rows = read_table(tmp_path / "solve.csv")
    assert len(rows) == 2
    assert (tmp_path / "solution.txt").exists()


def test_solve_nonconvergence_exit_4(tmp_path):
    p = write_cfg(tmp_path, {"problem": "dirichlet", "levels": [1], "tol": 1e-40})
    assert run("solve", "--config", p, "--out", tmp_path) == 4


def test_spectrum_steklov_disk(tmp_path):
    assert run("spectrum", "--config", CONFIGS / "steklov_disk.json", "--out", tmp_path) == 0
    _, rows = read_table(tmp_path / "spectrum.csv")
    fine = [float(r["eigenvalue"]) for r in rows if r["level"] == "4"]
    for v, t in zip(fine, (0, 1, 1, 2, 2)):
        assert v == pytest.approx(t, abs=0.04)


def test_spectrum_poincare_square(tmp_path):
    assert run("spectrum", "--config", CONFIGS / "poincare_square.json", "--out", tmp_path) == 0
    _, rows = read_table(tmp_path / "spectrum.csv")
    assert float(rows[-1]["poincare_constant"]) == pytest.approx(1 / math.pi, rel=0.01)


def test_geometry_check(tmp_path):
    assert run("geometry-check", "--config", CONFIGS / "geometry_check.json", "--out", tmp_path) == 0
    _, rows = read_table(tmp_path / "geometry_check.csv")
    q = [float(r["value"]) for r in rows if r["check"] == "quasiisometry_constant"]
    assert len(q) == 3 and max(q) / min(q) < 1.05


def test_exterior_small_scenario(tmp_path):
    p = write_cfg(tmp_path, {"name": "tiny", "R_inf": 64.0, "target_h": 0.1,
                             "decay_radii": [4, 8, 16], "representation": {"sphere": 3.0, "target_radius": 5.0,
                                                                         "angles": [0.5, 1.5]}})
    assert run("exterior", "--config", p, "--out", tmp_path) == 0
    _, cont = read_table(tmp_path / "tiny_continuation.csv")
    assert [float(r["epsilon"]) for r in cont] == [0.1, 0.01, 0.001, 0.0]
    _, radial = read_table(tmp_path / "tiny_radial.csv")
    assert [float(r["radius"]) for r in radial] == [4.0, 8.0, 16.0]
    assert all(r["radiation_residual"] == "nan" for r in radial)
    summary = json.loads((tmp_path / "tiny_summary.json").read_text())
    assert summary["version"] == __version__ and summary["config"]["R_inf"] == 64.0


def test_reruns_are_byte_identical(tmp_path):
    # the output directory is part of the echoed config, so both runs share it
    outs = []
    for _ in range(2):
        assert run("spectrum", "--config", CONFIGS / "poincare_square.json", "--out", tmp_path) == 0
        assert run("geometry-check", "--config", CONFIGS / "geometry_check.json", "--out", tmp_path) == 0
        outs.append({f.name: f.read_bytes() for f in sorted(tmp_path.iterdir())})
    assert outs[0] == outs[1]


def test_thread_count_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ROUGHLAP_THREADS", "lots")
    p = write_cfg(tmp_path, {"name": "t", "R_inf": 32.0, "target_h": 0.2, "decay_radii": []})
    assert run("exterior", "--config", p, "--out", tmp_path) == 2
