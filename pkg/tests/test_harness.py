import os
import subprocess
import sys

import numpy as np
import pytest

from fracfem.harness import (EXPERIMENTS, cli_main, experiment_config,
                             run_experiment)


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "fracfem.harness", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_registry_is_consistent():
    for name, spec in EXPERIMENTS.items():
        assert spec.name == name
        assert spec.dim in (1, 2)
        assert 0 < spec.r
        assert all(0 < s < 1 for s in spec.default_s)
        assert all(a > b for a, b in zip(spec.desk_ladder, spec.desk_ladder[1:]))
        assert spec.method in ("mixed", "direct")
        assert spec.norms


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        experiment_config("no-such-experiment")
    with pytest.raises(ValueError):
        experiment_config("getoor-1d", s=(1.5,))
    with pytest.raises(ValueError):
        experiment_config("getoor-1d", ladder=(0.1, 0.2))  # must decrease
    with pytest.raises(ValueError):
        experiment_config("getoor-1d", method="magic")
    cfg = experiment_config("getoor-1d", s=(0.5,), ladder=(1 / 8, 1 / 16))
    assert cfg.s_values == (0.5,)


def test_run_experiment_produces_report():
    cfg = experiment_config("getoor-1d", s=(0.5,),
                            ladder=(1 / 8, 1 / 16, 1 / 32))
    reports = run_experiment(cfg, progress=lambda *a: None)
    assert len(reports) == 1
    rep = reports[0]
    assert rep.experiment == "getoor-1d"
    assert len(rep.rows) == 3
    assert not rep.failures
    eoc = rep.eoc()
    assert 0.3 < eoc["energy_hs"] < 0.7
    # errors decrease along the ladder
    errs = [row["energy_hs"] for row in rep.rows]
    assert errs[0] > errs[-1]


def test_cli_convergence_writes_csv(tmp_path):
    out = tmp_path / "run.csv"
    r = run_cli(["convergence", "--experiment", "getoor-1d", "--s", "0.5",
                 "--h", "0.125,0.0625,0.03125", "--out", str(out)], tmp_path)
    assert r.returncode == 0, r.stderr
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("# experiment=getoor-1d n=1 s=0.5")
    assert lines[1] == "h,H,Ndof,energy_hs,l2_omega"
    assert len([l for l in lines if not l.startswith(("#", "EOC", "h,"))]) == 3
    assert any(l.startswith("EOC") for l in lines)


def test_cli_convergence_is_deterministic(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        r = run_cli(["convergence", "--experiment", "getoor-1d", "--s", "0.25",
                     "--h", "0.25,0.125,0.0625", "--out", str(out)], tmp_path)
        assert r.returncode == 0, r.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_config_file_equivalent_to_flags(tmp_path):
    cfgtext = (
        "# convergence settings\n"
        "experiment = getoor-1d\n"
        "s = 0.5\n"
        "h = 0.25, 0.125, 0.0625\n"
    )
    cfg = tmp_path / "run.cfg"
    cfg.write_text(cfgtext)
    out1 = tmp_path / "fromcfg.csv"
    r1 = run_cli(["--config", str(cfg), "convergence", "--out", str(out1)], tmp_path)
    assert r1.returncode == 0, r1.stderr
    out2 = tmp_path / "fromflags.csv"
    r2 = run_cli(["convergence", "--experiment", "getoor-1d", "--s", "0.5",
                  "--h", "0.25,0.125,0.0625", "--out", str(out2)], tmp_path)
    assert r2.returncode == 0, r2.stderr
    assert out1.read_bytes() == out2.read_bytes()
    # flags override the config file
    out3 = tmp_path / "override.csv"
    r3 = run_cli(["--config", str(cfg), "convergence", "--s", "0.25",
                  "--out", str(out3)], tmp_path)
    assert r3.returncode == 0, r3.stderr
    assert b"s=0.25" in out3.read_bytes()


def test_cli_unknown_experiment_exits_one(tmp_path):
    r = run_cli(["convergence", "--experiment", "bogus"], tmp_path)
    assert r.returncode == 1
    assert "bogus" in r.stderr


def test_cli_solve_writes_solution(tmp_path):
    out = tmp_path / "sol.csv"
    r = run_cli(["solve", "--experiment", "getoor-1d", "--s", "0.5",
                 "--h", "0.125", "--out", str(out)], tmp_path)
    assert r.returncode == 0, r.stderr
    header = out.read_text().splitlines()[0]
    assert header.split(",")[:2] == ["node_id", "x"]


def test_cli_mesh_report(tmp_path):
    out = tmp_path / "mesh.npz"
    r = run_cli(["mesh", "--dim", "2", "--h", "0.3", "--r", "0.5",
                 "--s", "0.5", "--out", str(out)], tmp_path)
    assert r.returncode == 0, r.stderr
    assert "min_angle_deg" in r.stdout
    assert out.exists()
    from fracfem.geometry import read_mesh

    mesh = read_mesh(out)
    assert mesh.dim == 2 and mesh.r == pytest.approx(0.5)


def test_cli_oracle_fast_suites(tmp_path):
    r = run_cli(["oracle", "getoor"], tmp_path)
    assert r.returncode == 0, r.stderr
    assert "gate 1e-04" in r.stdout
    r2 = run_cli(["oracle", "normalization"], tmp_path)
    assert r2.returncode == 0, r2.stderr


def test_domain_growth_requires_single_s():
    from fracfem.harness import run_domain_growth

    cfg = experiment_config("domain-growth", s=(0.3, 0.6),
                            ladder=(0.3, 0.25, 0.2))
    with pytest.raises(ValueError):
        run_domain_growth(cfg)


def test_run_experiment_rejects_domain_growth():
    cfg = experiment_config("domain-growth", ladder=(0.3, 0.25))
    with pytest.raises(ValueError):
        run_experiment(cfg)


def test_cli_exit_two_when_every_cell_fails(tmp_path, monkeypatch, capsys):
    """Per-cell numerical failures become ``# failed`` lines; if no cell of any
    ladder survives the command exits 2."""
    import fracfem.harness as harness
    from fracfem.solve import SolverError

    def broken_cell(cfg, s, h, shared, calibration=None):
        raise SolverError("synthetic blow-up")

    monkeypatch.setattr(harness, "_run_cell", broken_cell)
    out = tmp_path / "dead.csv"
    rc = harness.cli_main(["convergence", "--experiment", "getoor-1d",
                           "--s", "0.5", "--h", "0.25,0.125",
                           "--out", str(out)])
    assert rc == 2
    assert "every cell failed" in capsys.readouterr().err
    text = out.read_text()
    assert text.count("# failed h=") == 2
    assert "SolverError: synthetic blow-up" in text
