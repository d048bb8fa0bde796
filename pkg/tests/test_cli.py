import json
from pathlib import Path

import numpy as np
import pytest

from hypgrav.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SOLVER,
    ConfigError,
    RunConfig,
    main,
    parse_config,
    run,
    run_convergence,
    write_histogram,
    write_snapshot,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_parse_config_and_overrides(tmp_path):
    cfg = parse_config(CONFIGS / "jeans.toml")
    assert cfg.experiment == "jeans"
    assert cfg.polydeg == 3 and cfg.cfl_gravity == 0.8
    cfg = parse_config(
        CONFIGS / "jeans.toml",
        overrides=["solver.t_final=0.25", "mesh.initial_level=2",
                   "output.dir='elsewhere'"],
    )
    assert cfg.t_final == 0.25 and cfg.initial_level == 2
    assert cfg.outdir == "elsewhere"


def test_parse_config_errors(tmp_path):
    missing = tmp_path / "nope.toml"
    with pytest.raises(ConfigError):
        parse_config(missing)
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment]\nname = 'starship'\n")
    with pytest.raises(ConfigError):
        parse_config(bad)
    syntax = tmp_path / "syntax.toml"
    syntax.write_text("experiment =")
    with pytest.raises(ConfigError):
        parse_config(syntax)


def test_main_exit_codes(tmp_path):
    assert main(["run", str(tmp_path / "missing.toml")]) == EXIT_CONFIG
    cfg = tmp_path / "blowup.toml"
    cfg.write_text(
        "[experiment]\nname = 'euler_manufactured'\n"
        "[mesh]\ninitial_level = 1\n"
        "[solver]\npolydeg = 3\ncfl_euler = 40.0\nt_final = 1.0\n"
        f"[output]\ndir = '{tmp_path / 'out'}'\n"
    )
    assert main(["run", str(cfg)]) == EXIT_SOLVER


def test_run_euler_manufactured_outputs(tmp_path):
    cfg = RunConfig(experiment="euler_manufactured", polydeg=3,
                    initial_level=1, t_final=0.2, outdir=str(tmp_path))
    summary = run(cfg)
    assert (tmp_path / "errors.csv").exists()
    assert (tmp_path / "summary.json").exists()
    loaded = json.loads((tmp_path / "summary.json").read_text())
    assert loaded["errors"]["rho"] == summary["errors"]["rho"]
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines[0] == "variable,l2_error"
    assert len(lines) == 5


def test_run_convergence_outputs(tmp_path):
    cfg = RunConfig(experiment="euler_manufactured", polydeg=3,
                    t_final=0.2, outdir=str(tmp_path))
    summary = run_convergence(cfg, [1, 2])
    assert (tmp_path / "eoc_table.csv").exists()
    assert (tmp_path / "eoc_table.txt").exists()
    assert summary["avg_eoc"]["rho"] > 3.0
    with pytest.raises(ConfigError):
        run_convergence(cfg, [2])
    with pytest.raises(ConfigError):
        run_convergence(cfg, [3, 2])


def test_jeans_run_is_deterministic(tmp_path):
    outputs = []
    for sub in ("a", "b"):
        cfg = RunConfig(experiment="jeans", polydeg=3, initial_level=3,
                        coupling="per_stage", cfl_euler=0.5, cfl_gravity=0.8,
                        tol=1e-4, t_final=0.05, outdir=str(tmp_path / sub))
        run(cfg)
        outputs.append((tmp_path / sub / "energies.csv").read_bytes())
    assert outputs[0] == outputs[1]
    header = outputs[0].decode().splitlines()[0].split(",")
    assert header[:5] == ["t", "omega_t", "e_kin", "e_int", "e_pot"]
    hist = (tmp_path / "a" / "subcycles.csv").read_text().splitlines()
    assert hist[0] == "subcycles,frequency"


def test_write_histogram(tmp_path):
    write_histogram(tmp_path / "h.csv", [1, 2, 2, 3, 1, 1])
    rows = (tmp_path / "h.csv").read_text().splitlines()
    assert rows[0] == "subcycles,frequency"
    assert rows[1:] == ["1,3", "2,2", "3,1"]


def test_snapshot_single_element_row_count(tmp_path):
    from hypgrav.mesh import create_uniform
    from hypgrav.semidisc import EulerEquations, Semidiscretization

    tree = create_uniform(((0.0, 0.0), (1.0, 1.0)), 0, periodic=(True, True))
    semi = Semidiscretization(tree, 3, EulerEquations(1.4))
    u = semi.new_state()
    u[:, 0] = 1.0
    u[:, 3] = 2.0
    out = write_snapshot(semi, None, u, None, 0.5, tmp_path, slice_y=0.25)
    rows = (out / "state_euler.csv").read_text().splitlines()
    assert len(rows) == 1 + 16  # header + (N+1)^2 nodal rows
    slice_rows = (out / "slice.csv").read_text().splitlines()
    vals = [float(r.split(",")[1]) for r in slice_rows[1:]]
    assert all(abs(v - 1.0) < 1e-12 for v in vals)
    elements = (out / "elements.csv").read_text().splitlines()
    assert elements[0] == "element,center_x,center_y,level,h"


def test_sedov_snapshot_slice_is_monotone(tmp_path):
    cfg = RunConfig(experiment="sedov", polydeg=3, initial_level=2,
                    coupling="per_stage", cfl_euler=0.5, cfl_gravity=1.2,
                    tol=1e-4, t_final=0.004, shock_capture=True,
                    integrator_gravity="rk3sstar",
                    snapshot_times=[0.004], outdir=str(tmp_path),
                    amr={"level_low": 2, "level_high": 8, "threshold": 3e-4,
                         "interval": 1})
    summary = run(cfg)
    snap = Path(summary["snapshots"][0])
    rows = (snap / "slice.csv").read_text().splitlines()
    assert rows[0].split(",")[:3] == ["x", "rho", "mom_x"]
    xs = [float(r.split(",")[0]) for r in rows[1:]]
    assert xs == sorted(xs)
    assert xs[0] >= -4.0 and xs[-1] <= 4.0
