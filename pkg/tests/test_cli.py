import json

import numpy as np
import pytest

from agdiff.cli import main
from agdiff.state import GridDensity


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


UNIFORM = """
domain.L = 8
kernel.kind = double_yukawa
kernel.beta = 2
initial.kind = uniform
n_particles = 64
integrator.t_end = 0.2
integrator.sample_every = 0.02
outputs.grid_m = 256
"""

HAT_DIFFUSION = """
domain.L = 8
kernel.kind = zero
initial.kind = hat
initial.width = 4
initial.height = 0.5
n_particles = 48
integrator.t_end = 0.1
integrator.sample_every = 0.01
outputs.grid_m = 256
"""


def test_simulate_uniform(tmp_path, capsys):
    cfg = write_cfg(tmp_path, UNIFORM)
    out = tmp_path / "out"
    assert main(["simulate", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["termination"]["kind"] == "completed"
    assert summary["inequality_violations"] == 0
    assert abs(summary["energy_final"] - summary["energy_initial"]) <= 1e-10
    assert (out / "diagnostics.csv").exists()
    g = GridDensity.read_csv(out / "final_state.csv")
    assert np.allclose(g.values, 1.0 / 8.0, atol=1e-9)


def test_simulate_diffusion_energy_decreases(tmp_path):
    cfg = write_cfg(tmp_path, HAT_DIFFUSION)
    out = tmp_path / "out"
    assert main(["simulate", cfg, "--out", str(out)]) == 0
    rows = (out / "diagnostics.csv").read_text().strip().splitlines()
    header = rows[0].split(",")
    e_idx = header.index("energy")
    energies = [float(r.split(",")[e_idx]) for r in rows[1:]]
    assert all(b < a for a, b in zip(energies, energies[1:]))


def test_validate_default_and_linear_diffusion(tmp_path, capsys):
    cfg = write_cfg(tmp_path, UNIFORM)
    assert main(["validate", cfg]) == 0
    cfg_m1 = write_cfg(tmp_path, UNIFORM + "phi.m = 1\n", "m1.cfg")
    assert main(["validate", cfg_m1]) == 0
    assert "warning" in capsys.readouterr().out.lower()


def test_validate_catches_bad_kernel(tmp_path, monkeypatch):
    import agdiff.cli as cli
    from agdiff.config import parse_config
    from agdiff.kernels import KernelSpec, build_kernel

    cfg = parse_config(write_cfg(tmp_path, UNIFORM))
    grid = np.linspace(-10, 10, 801)
    vals = np.exp(-np.abs(grid))
    vals[600] += 0.3       # asymmetric table
    bad = build_kernel(KernelSpec("tabulated", {"grid": grid, "values": vals}))
    monkeypatch.setattr(type(cfg), "kernel", lambda self: bad)
    assert cli.cmd_validate(cfg) == 1


def test_oracle_writes_snapshots(tmp_path):
    cfg = write_cfg(tmp_path, HAT_DIFFUSION)
    out = tmp_path / "ref"
    assert main(["oracle", cfg, "--m", "128", "--out", str(out)]) == 0
    snaps = sorted(out.glob("ref_t*.csv"))
    assert len(snaps) == 11
    g = GridDensity.read_csv(snaps[0])
    assert g.cell_count == 128
    assert g.mass == pytest.approx(1.0, rel=1e-9)


def test_sweep_n_decreasing_errors(tmp_path):
    cfg = write_cfg(tmp_path, HAT_DIFFUSION)
    out = tmp_path / "sweep"
    rc = main(["sweep-n", cfg, "--n", "32,64,128", "--oracle-m", "512",
               "--out", str(out)])
    assert rc == 0
    table = (out / "sweep_n.csv").read_text().strip().splitlines()
    assert table[0].startswith("n,spacetime_l1")
    errs = [float(r.split(",")[1]) for r in table[1:]]
    assert errs[2] < errs[0]


def test_sweep_n_argument_validation(tmp_path):
    cfg = write_cfg(tmp_path, HAT_DIFFUSION)
    assert main(["sweep-n", cfg, "--n", "64", "--out", str(tmp_path)]) == 2
    assert main(["sweep-n", cfg, "--n", "16,32,64", "--out", str(tmp_path)]) == 2


def test_sweep_positivity(tmp_path):
    cfg = write_cfg(tmp_path, HAT_DIFFUSION)
    out = tmp_path / "pos"
    rc = main(["sweep-positivity", cfg, "--eps", "1e-1,1e-2", "--out", str(out)])
    assert rc == 0
    lines = (out / "sweep_positivity.csv").read_text().strip().splitlines()
    assert len(lines) == 3


def test_sweep_domain_runs(tmp_path):
    cfg = write_cfg(tmp_path, HAT_DIFFUSION.replace("outputs.grid_m = 256",
                                                    "outputs.grid_m = 64"),
                    "d.cfg")
    out = tmp_path / "dom"
    rc = main(["sweep-domain", cfg, "--l", "8,16", "--out", str(out)])
    assert rc == 0
    lines = (out / "sweep_domain.csv").read_text().strip().splitlines()
    assert len(lines) == 3


def test_config_error_exit_code(tmp_path):
    bad = write_cfg(tmp_path, "domain.L = 8\nunknown.key = 1\n")
    assert main(["simulate", bad, "--out", str(tmp_path / "x")]) == 2
