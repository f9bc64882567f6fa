import csv
import json

import numpy as np
import pytest

from bbtrack.cli import main
from bbtrack.fieldio import read_field, write_field
from bbtrack.grid import Grid, StaggeredField
from bbtrack.stability import XI_NORM_DISCLOSURE

BASE = """
seed = 0
[grid]
nx_cells = 16
ny_cells = 16
T_final_time = 1.0
nt_steps = 16
[flow]
nu_viscosity = 0.1
[output]
directory = "out"
"""


def write_config(tmp_path, extra, name="run.toml"):
    p = tmp_path / name
    p.write_text(BASE + extra)
    return str(p)


def test_solve_recoverable(tmp_path, capsys):
    cfg = write_config(tmp_path, '[objective]\ninstance = "recoverable"\n')
    assert main(["solve", cfg]) == 0
    out = tmp_path / "out"
    rep = json.loads((out / "report.json").read_text())
    assert rep["J_star"] <= 1e-6 * rep["J_u0"]
    assert rep["xi_norm"] == XI_NORM_DISCLOSURE and len(rep["config_hash"]) == 16
    assert (out / "history.csv").read_text().startswith(f"# config_hash={rep['config_hash']}")
    with np.load(out / "control.npz") as z:
        assert str(z["config_hash"]) == rep["config_hash"]
    assert len(json.loads((out / "state" / "manifest.json").read_text())["snapshots"]) == 17
    assert read_field(out / "state" / "y_000016.fld").grid.nx == 16
    assert "J_star=" in capsys.readouterr().out


def test_missing_file(tmp_path, capsys):
    cfg = str(tmp_path / "run.toml")
    (tmp_path / "run.toml").write_text(BASE.replace("nu_viscosity = 0.1", 'nu_viscosity = 0.1\ninitial_state_file = "nope.fld"'))
    assert main(["solve", cfg]) == 1
    assert "file not found: " in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "absent.toml")]) == 1
    assert not (tmp_path / "out").exists()


def test_config_errors_name_key_paths(tmp_path, capsys):
    cfg = write_config(tmp_path, "[optimizer]\nmax_iter = 3\n")
    assert main(["solve", cfg]) == 1
    assert "optimizer.max_iter: unknown key" in capsys.readouterr().err
    cfg = write_config(tmp_path, "[objective]\neps_tikhonov = -1.0\n")
    assert main(["solve", cfg]) == 1
    assert "objective.eps_tikhonov" in capsys.readouterr().err


def test_iteration_cap_exit_code(tmp_path):
    # conditional gradient lands on the strictly stationary vertex in one step; the Tikhonov problem does not
    cfg = write_config(tmp_path, '[objective]\ninstance = "overshoot"\neps_tikhonov = 0.01\n'
                                 '[optimizer]\nmethod = "ProjectedGradient"\nmax_iters = 1\nsigma_tol = 1e-14\n')
    assert main(["solve", cfg]) == 2
    assert json.loads((tmp_path / "out" / "report.json").read_text())["cap_hit"]


def test_sweep_needs_three_specs(tmp_path, capsys):
    cfg = write_config(tmp_path, "[[sweep.spec]]\neps = 0.1\n[[sweep.spec]]\neps = 0.01\n")
    assert main(["sweep", cfg, "--no-probe"]) == 1
    assert "at least 3" in capsys.readouterr().err


def test_tikhonov_sweep_fixture(tmp_path):
    specs = "".join(f"[[sweep.spec]]\neps = {e}\nspec_id = \"eps{k}\"\n" for k, e in enumerate([1e-1, 1e-2, 1e-3, 1e-4]))
    cfg = write_config(tmp_path, '[optimizer]\nstep_rule = "Armijo"\n' + specs)
    assert main(["sweep", cfg, "--no-probe"]) == 0
    fit = json.loads((tmp_path / "out" / "ratefit.json").read_text())
    assert fit["slope"] > 0 and fit["r2"] >= 0.9 and fit["n_points"] == 4
    assert fit["xi_norm"] == XI_NORM_DISCLOSURE


def _sweep_rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [{k: v for k, v in r.items() if k != "wall_seconds"} for r in csv.DictReader(lines)]


def test_sweep_worker_count_does_not_change_results(tmp_path):
    extra = '[optimizer]\nstep_rule = "Armijo"\n[sweep]\nsize_min = 1e-3\nsize_max = 1e-1\ncount = 3\n'
    cfg = write_config(tmp_path, extra)
    assert main(["sweep", cfg, "--no-probe", "--workers", "1"]) == 0
    one = _sweep_rows(tmp_path / "out" / "sweep.csv")
    assert main(["sweep", cfg, "--no-probe", "--workers", "2"]) == 0
    two = _sweep_rows(tmp_path / "out" / "sweep.csv")
    assert one == two and [r["spec_id"] for r in one] == ["spec000", "spec001", "spec002"]


def test_probe_growth(tmp_path, capsys):
    cfg = write_config(tmp_path, '[objective]\ninstance = "overshoot"\n[probe]\ndistances = [0.1, 0.05, 0.02]\nsamples = 2\n')
    assert main(["probe", "growth", cfg]) == 0
    out = json.loads((tmp_path / "out" / "growth.json").read_text())
    assert len(out["table"]) == 3 and np.isfinite(out["mu_hat"])
    assert "mu_hat=" in capsys.readouterr().out


def test_verify_operators(capsys):
    assert main(["verify", "operators"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_verify_unknown_suite(capsys):
    assert main(["verify", "nonsense"]) == 1
    assert "usage" in capsys.readouterr().err


def test_fields_inspect_and_convert(tmp_path, capsys):
    g = Grid(8, 6)
    f = StaggeredField.from_vec(g, np.random.default_rng(0).standard_normal(g.n_dof))
    src = str(tmp_path / "a.fld")
    write_field(src, f)
    assert main(["fields", "inspect", src]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (info["nx"], info["ny"]) == (8, 6)
    assert main(["fields", "convert", src, str(tmp_path / "b.npz")]) == 0
    assert main(["fields", "convert", str(tmp_path / "b.npz"), str(tmp_path / "c.fld")]) == 0
    back = read_field(tmp_path / "c.fld")
    assert np.array_equal(back.to_vec(), f.to_vec())
    (tmp_path / "bad.fld").write_bytes(b"garbage")
    assert main(["fields", "inspect", str(tmp_path / "bad.fld")]) == 1
