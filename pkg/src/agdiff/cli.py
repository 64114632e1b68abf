"""Command-line harness: single runs, convergence sweeps, validation.

Subcommands
  simulate <config>                        one particle run + diagnostics
  sweep-n <config> --n 64,128 --oracle-m M particle count refinement vs solver
  sweep-domain <config> --l 8,16,32        growing-window consistency
  sweep-positivity <config> --eps ...      vanishing vacuum-floor consistency
  validate <config>                        kernel/nonlinearity/inequality audit
  oracle <config> --m M                    reference solver run, CSV snapshots

All numeric output is written with repr precision, so repeated runs of the
same configuration produce byte-identical files.  AGDIFF_THREADS caps the
worker count of the compiled pairwise kernels.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _pairwise, diagnostics
from .config import ConfigError, RunConfig, parse_config
from .domain import TorusDomain
from .dynamics import simulate
from .nonlinearity import validate_nonlinearity
from .kernels import validate_kernel
from .oracle import FVConfig, compare_trajectories, fv_solve, spacetime_l1
from .state import ParticleState, init_from_density, to_grid


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_table(path: Path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _sample_times(cfg: RunConfig):
    dt = cfg.integrator.resolved_sample_every()
    n = int(round(cfg.integrator.t_end / dt))
    return [i * dt for i in range(n)] + [cfg.integrator.t_end]


def _run_particles(cfg: RunConfig, n=None, domain=None, vacuum_floor=None):
    s0 = cfg.initial_particles(n=n, domain=domain, vacuum_floor=vacuum_floor)
    kernel, nl = cfg.kernel(), cfg.nonlinearity()
    traj = simulate(s0, kernel, nl, cfg.integrator)
    return traj, kernel, nl


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    traj, kernel, nl = _run_particles(cfg)
    rows, violations = diagnostics.trajectory_diagnostics(
        traj, kernel, nl, with_inequalities=True)
    out.mkdir(parents=True, exist_ok=True)
    (out / "diagnostics.csv").write_text(diagnostics.rows_to_csv(rows),
                                         encoding="utf-8")
    to_grid(traj.final_state(), cfg.grid_m).write_csv(out / "final_state.csv")

    holder = diagnostics.holder_ratios(traj)
    summary = {
        "termination": {"kind": traj.termination.kind,
                        "time": traj.termination.time,
                        "index": traj.termination.index},
        "steps": traj.steps,
        "dt_min": traj.dt_min if np.isfinite(traj.dt_min) else None,
        "dt_max": traj.dt_max,
        "windings": traj.windings,
        "n_particles": cfg.n_particles,
        "max_max_density": max(r.max_density for r in rows),
        "energy_initial": rows[0].energy,
        "energy_final": rows[-1].energy,
        "holder_coarse_constant": holder[0][1] if holder else None,
        "holder_max_ratio": max(h[1] for h in holder) if holder else None,
        "inequality_violations": violations,
        "pairwise_backend": _pairwise.active_backend(),
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"termination: {traj.termination.kind} at t={traj.termination.time:.6g} "
          f"({traj.steps} steps)")
    print(f"energy {rows[0].energy:.6g} -> {rows[-1].energy:.6g}, "
          f"max density {summary['max_max_density']:.6g}, "
          f"violations {violations}")
    if traj.termination.kind == "gap_collapse" and \
            traj.termination.time < cfg.integrator.min_time:
        print(f"collapse before configured minimum time "
              f"{cfg.integrator.min_time}", file=sys.stderr)
        return 3
    return 0


def cmd_oracle(cfg: RunConfig, m: int, out: Path) -> int:
    datum = cfg.initial_datum()
    fv = FVConfig(cell_count=m, t_end=cfg.integrator.t_end)
    times = _sample_times(cfg)
    final, snaps = fv_solve(datum.grid(m), cfg.kernel(), cfg.nonlinearity(),
                            fv, sample_times=times)
    out.mkdir(parents=True, exist_ok=True)
    for t, g in snaps:
        g.write_csv(out / f"ref_t{t:.6g}.csv")
    final.write_csv(out / "ref_final.csv")
    print(f"wrote {len(snaps)} reference snapshots to {out}")
    return 0


def cmd_sweep_n(cfg: RunConfig, n_list, oracle_m: int, out: Path) -> int:
    kernel, nl = cfg.kernel(), cfg.nonlinearity()
    datum = cfg.initial_datum()
    times = _sample_times(cfg)
    fv = FVConfig(cell_count=oracle_m, t_end=cfg.integrator.t_end)
    _, snaps = fv_solve(datum.grid(oracle_m), kernel, nl, fv, sample_times=times)

    rows = []
    errors = []
    for n in n_list:
        traj, _, _ = _run_particles(cfg, n=n)
        drows, _ = diagnostics.trajectory_diagnostics(traj, kernel, nl)
        err = np.nan
        if traj.termination.kind == "completed":
            err = spacetime_l1(compare_trajectories(traj, snaps, oracle_m))
            errors.append((n, err))
        max_pos_rate = max(max(r.energy_rate for r in drows), 0.0)
        rows.append((n, err, max_pos_rate,
                     max(r.max_density for r in drows),
                     traj.steps, traj.dt_min, traj.dt_max,
                     traj.termination.kind))
        print(f"N={n}: spacetime L1 {err:.6g}, max positive energy rate "
              f"{max_pos_rate:.3g}, termination {traj.termination.kind}")

    out.mkdir(parents=True, exist_ok=True)
    _write_table(out / "sweep_n.csv",
                 ("n", "spacetime_l1", "max_pos_energy_rate", "max_density",
                  "steps", "dt_min", "dt_max", "termination"), rows)

    ok = True
    for (n0, e0), (n1, e1) in zip(errors, errors[1:]):
        if e1 > 1.1 * e0:
            print(f"warning: error did not decrease within 10% from N={n0} "
                  f"({e0:.3g}) to N={n1} ({e1:.3g})", file=sys.stderr)
            ok = False
    return 0 if ok else 4


def _window_slice(state: ParticleState, window_l: float, cells: int):
    """Project a state onto the central window of width window_l."""
    ratio = state.domain.length / window_l
    m_full = int(round(cells * ratio))
    g = to_grid(state, m_full)
    start = (m_full - cells) // 2
    return g.values[start:start + cells]


def cmd_sweep_domain(cfg: RunConfig, l_list, out: Path) -> int:
    if any(b <= a for a, b in zip(l_list, l_list[1:])):
        raise ConfigError("--l values must increase")
    base_l = l_list[0]
    cells = cfg.grid_m - cfg.grid_m % 2
    datum0 = cfg.initial_datum()
    fm = datum0.first_moment()
    if not np.isfinite(fm):
        print("warning: initial datum has no finite first moment", file=sys.stderr)

    rows = []
    prev_vals = None
    prev_diff = np.inf
    ok = True
    for L in l_list:
        domain = TorusDomain(L, cfg.domain.mass)
        n = int(round(cfg.n_particles * L / base_l))
        traj, kernel, nl = _run_particles(cfg, n=n, domain=domain)
        final = traj.final_state()
        gd = to_grid(final, int(round(cells * L / base_l)))
        margin = max(1, gd.cell_count // 50)
        seam_mass = float((np.sum(gd.values[:margin]) +
                           np.sum(gd.values[-margin:])) * gd.cell_width)
        flagged = seam_mass > 1e-6 * cfg.domain.mass
        vals = _window_slice(final, base_l, cells)
        diff = np.nan
        if prev_vals is not None:
            diff = float(np.sum(np.abs(vals - prev_vals)) * (base_l / cells))
            if traj.termination.kind == "completed" and not flagged:
                if diff > prev_diff:
                    ok = False
                prev_diff = diff
        prev_vals = vals
        rows.append((L, n, traj.termination.kind, int(flagged), seam_mass, diff))
        print(f"L={L}: N={n}, diff to previous window {diff:.6g}, "
              f"seam mass {seam_mass:.3g}{' [flagged]' if flagged else ''}")

    out.mkdir(parents=True, exist_ok=True)
    _write_table(out / "sweep_domain.csv",
                 ("L", "n", "termination", "seam_flag", "seam_mass",
                  "l1_diff_prev"), rows)
    if not ok:
        print("warning: window differences did not decrease", file=sys.stderr)
    return 0 if ok else 4


def cmd_sweep_positivity(cfg: RunConfig, eps_list, out: Path) -> int:
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("--eps values must decrease")
    rows = []
    prev = None
    prev_diff = np.inf
    ok = True
    for eps in eps_list:
        traj, kernel, nl = _run_particles(cfg, vacuum_floor=eps)
        gd = to_grid(traj.final_state(), cfg.grid_m)
        diff = np.nan
        if prev is not None:
            diff = float(np.sum(np.abs(gd.values - prev.values)) * gd.cell_width)
            if diff > prev_diff:
                ok = False
            prev_diff = diff
        prev = gd
        rows.append((eps, traj.termination.kind,
                     max(r.max_density() for r in traj.states()), diff))
        print(f"eps={eps:g}: termination {traj.termination.kind}, "
              f"diff to previous {diff:.6g}")
    out.mkdir(parents=True, exist_ok=True)
    _write_table(out / "sweep_positivity.csv",
                 ("eps", "termination", "max_density", "l1_diff_prev"), rows)
    if not ok:
        print("warning: floor differences did not decrease", file=sys.stderr)
    return 0 if ok else 4


def _random_states(domain: TorusDomain, count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(8, 49))
        while True:
            pos = np.sort(rng.uniform(-domain.half, domain.half, n))
            if np.all(np.diff(pos) > 1e-9 * domain.length):
                break
        yield ParticleState(domain, pos)


def cmd_validate(cfg: RunConfig) -> int:
    kernel, nl = cfg.kernel(), cfg.nonlinearity()
    krep = validate_kernel(kernel)
    nrep = validate_nonlinearity(nl)
    print(krep)
    print(nrep)

    bad = 0
    for s in _random_states(cfg.domain, 100):
        bad += len(diagnostics.check_inequalities(s, kernel, nl).failures())
    print(f"inequality check over 100 random states: {bad} violations")

    failures = list(krep.failures())
    hard_nl = [c for c in nrep.failures() if c.name != "W_nonnegative"]
    soft_nl = [c for c in nrep.failures() if c.name == "W_nonnegative"]
    if soft_nl and nl.kind == "power_law" and nl.m == 1.0:
        print("warning: W takes negative values for linear diffusion (m=1); "
              "energy lower-bound diagnostics are skipped for this nonlinearity")
        soft_nl = []
    if failures or hard_nl or soft_nl or bad:
        return 1
    return 0


def _parse_list(raw, conv):
    try:
        return [conv(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"could not parse list {raw!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="agdiff",
        description="Deterministic particle solver for 1-d aggregation-diffusion "
                    "dynamics on a torus, with reference solvers and sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("simulate", "sweep-n", "sweep-domain", "sweep-positivity",
                 "validate", "oracle"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to a key=value or JSON config file")
        if name != "validate":
            p.add_argument("--out", default=None, help="output directory "
                           "(default: outputs.dir from the config)")
        if name == "sweep-n":
            p.add_argument("--n", required=True, help="comma list of particle counts")
            p.add_argument("--oracle-m", type=int, default=4096)
        if name == "sweep-domain":
            p.add_argument("--l", required=True, help="comma list of window sizes")
        if name == "sweep-positivity":
            p.add_argument("--eps", required=True, help="comma list of floors")
        if name == "oracle":
            p.add_argument("--m", type=int, default=4096)

    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        out = Path(getattr(args, "out", None) or cfg.outputs_dir)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "oracle":
            return cmd_oracle(cfg, args.m, out)
        if args.command == "sweep-n":
            n_list = _parse_list(args.n, int)
            if len(n_list) < 3 or min(n_list) < 32 or \
                    any(b <= a for a, b in zip(n_list, n_list[1:])):
                raise ConfigError("--n needs >= 3 increasing values, each >= 32")
            return cmd_sweep_n(cfg, n_list, args.oracle_m, out)
        if args.command == "sweep-domain":
            return cmd_sweep_domain(cfg, _parse_list(args.l, float), out)
        if args.command == "sweep-positivity":
            return cmd_sweep_positivity(cfg, _parse_list(args.eps, float), out)
        if args.command == "validate":
            return cmd_validate(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
