"""Independent references: a finite-volume solver and self-similar profiles.

The finite-volume scheme discretizes the conservative form of the equation
directly on the uniform grid: explicit Euler in time, central differencing
of the nonlinear diffusion flux, first-order upwinding of the nonlocal
transport flux.  The transport velocity at each face is the midpoint
quadrature of -(K' * rho); on the uniform periodic grid that quadrature is
a circular convolution, evaluated via FFT with the kernel samples cached.

This solver deliberately shares no code with the particle scheme beyond
kernel/nonlinearity evaluation and the grid container, so the two can
arbitrate each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .initial import barenblatt, barenblatt_support_radius  # noqa: F401  (re-export)
from .kernels import Kernel
from .nonlinearity import Nonlinearity
from .state import GridDensity, l1_distance, to_grid


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class FVConfig:
    cell_count: int = 1024
    cfl: float = 0.4
    t_end: float = 1.0

    def __post_init__(self):
        if self.cell_count < 16:
            raise OracleError("finite-volume grid needs at least 16 cells")
        if not (0.0 < self.cfl <= 1.0):
            raise OracleError("cfl must lie in (0, 1]")
        if self.t_end <= 0.0:
            raise OracleError("t_end must be positive")


def _face_velocity_spectrum(domain, m: int, kernel: Kernel):
    """FFT of the K' samples that turn cell averages into face velocities."""
    if kernel.is_zero:
        return None
    L = domain.length
    dx = L / m
    d = np.arange(m)
    offsets = (d - 0.5) * dx
    half = 0.5 * L
    offsets = np.where(offsets >= half, offsets - L, offsets)
    offsets = np.where(offsets < -half, offsets + L, offsets)
    return np.fft.rfft(kernel.eval_d1(offsets) * dx)


def fv_solve(rho0: GridDensity, kernel: Kernel, nl: Nonlinearity,
             cfg: FVConfig, sample_times=None):
    """March rho0 to t_end; returns (final GridDensity, [(t, GridDensity)]).

    Faces sit at the cell edges; face i carries the flux between cells i-1
    and i (periodic).  Mass is conserved exactly by the flux form; the
    CFL restriction keeps the update monotone, hence nonnegative.
    """
    m = cfg.cell_count
    if rho0.cell_count != m:
        raise OracleError(f"initial grid has {rho0.cell_count} cells, config wants {m}")
    d = rho0.domain
    dx = d.length / m
    rho = rho0.values.copy()
    spectrum = _face_velocity_spectrum(d, m, kernel)

    wanted = sorted(float(t) for t in
                    (sample_times if sample_times is not None else []))
    for t_req in wanted:
        if t_req < -1e-12 or t_req > cfg.t_end * (1.0 + 1e-12):
            raise OracleError(f"sample time {t_req} outside [0, t_end]")
    snaps = []
    w_idx = 0

    def record(tt):
        nonlocal w_idx
        while w_idx < len(wanted) and wanted[w_idx] <= tt + 1e-12 * cfg.t_end:
            snaps.append((wanted[w_idx], GridDensity(d, rho.copy())))
            w_idx += 1

    t = 0.0
    record(t)
    dt_floor = 1e-15 * cfg.t_end
    max_phi_prime_floor = 1e-300

    while t < cfg.t_end * (1.0 - 1e-15):
        if spectrum is not None:
            v = -np.fft.irfft(spectrum * np.fft.rfft(rho), n=m)
        else:
            v = None

        dt_diff = cfg.cfl * dx * dx / (
            2.0 * max(float(np.max(nl.phi_prime(rho))), max_phi_prime_floor))
        if v is not None:
            vmax = float(np.max(np.abs(v)))
            dt = min(dt_diff, cfg.cfl * dx / vmax) if vmax > 0.0 else dt_diff
        else:
            dt = dt_diff
        if dt < dt_floor:
            raise OracleError(f"CFL step underflow at t={t:.6g}: dt={dt:.3e}")
        next_stop = cfg.t_end if w_idx >= len(wanted) else wanted[w_idx]
        dt = min(dt, next_stop - t) if next_stop > t else dt

        phi = nl.phi(rho)
        flux = -(phi - np.roll(phi, 1)) / dx        # face i: cells i-1 -> i
        if v is not None:
            upwind = np.where(v > 0.0, np.roll(rho, 1), rho)
            flux = flux + v * upwind
        rho = rho - (dt / dx) * (np.roll(flux, -1) - flux)

        neg = rho < 0.0
        if np.any(neg):
            worst = float(np.min(rho))
            if worst < -1e-13 * max(1.0, float(np.max(rho))):
                raise OracleError(f"negative density {worst:.3e} at t={t:.6g}")
            rho[neg] = 0.0
        t = next_stop if abs(t + dt - next_stop) <= 1e-12 * cfg.t_end else t + dt
        record(t)

    return GridDensity(d, rho), snaps


def block_average(g: GridDensity, m: int) -> GridDensity:
    """Coarsen a grid density to m cells; the fine count must be a multiple."""
    if g.cell_count % m:
        raise OracleError(f"cannot average {g.cell_count} cells down to {m}")
    q = g.cell_count // m
    return GridDensity(g.domain, g.values.reshape(m, q).mean(axis=1))


def compare_trajectories(traj, reference, m_grid: int):
    """Per-time L^1 distances between particle snapshots and reference grids.

    ``reference`` is a list of (t, GridDensity); times must match the
    trajectory sampling to 1e-9.  Reference grids finer than m_grid (by an
    integer factor) are block-averaged down.
    """
    ref_by_time = list(reference)
    out = []
    for t, s in traj.samples:
        match = [g for tr, g in ref_by_time if abs(tr - t) <= 1e-9 * (1.0 + abs(t))]
        if not match:
            continue
        ref = match[0]
        if ref.cell_count != m_grid:
            ref = block_average(ref, m_grid)
        out.append((t, l1_distance(to_grid(s, m_grid), ref)))
    if not out:
        raise OracleError("no matching sample times between trajectory and reference")
    return out


def spacetime_l1(errors) -> float:
    """Trapezoid rule in time over (t, l1) pairs."""
    t = np.array([e[0] for e in errors])
    v = np.array([e[1] for e in errors])
    if len(t) == 1:
        return float(v[0])
    return float(np.trapezoid(v, t))
