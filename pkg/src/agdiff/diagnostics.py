"""Functionals and inequality monitors evaluated along particle trajectories.

The free energy of a density rho on the torus is

    F[rho] = 1/2 * double-integral K(x-y) rho(x) rho(y) + integral W(rho).

For the piecewise-constant particle density the internal part is the exact
sum over cells, sum_k g_k * W(rho_k); the pairwise part is integrated by
midpoint quadrature on an equal-mass subdivision of the particle cells
(``quad_per_cell`` subintervals each), which makes every quadrature node
carry the same weight c_L/(N*q).

Also here: the discrete H^1-type seminorm of phi(rho) in mass coordinates,
total variation of phi(rho), the 1-Wasserstein distance via pseudo-inverses,
and runtime checks of the algebraic inequalities the scheme is guaranteed
to satisfy.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import _pairwise
from .domain import wrap
from .kernels import Kernel
from .nonlinearity import Nonlinearity
from .reporting import ValidationReport
from .state import ParticleState, unwrapped_positions

CSV_COLUMNS = ("t", "min_gap", "max_density", "energy", "interaction_energy",
               "internal_energy", "w12", "tv_phi", "w1_from_init", "energy_rate")


class DiagnosticsError(ValueError):
    pass


@dataclass
class DiagnosticsRow:
    t: float
    min_gap: float
    max_density: float
    energy: float
    interaction_energy: float
    internal_energy: float
    w12: float
    tv_phi: float
    w1_from_init: float
    energy_rate: float = 0.0

    def astuple(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        buf.write(",".join(repr(v) for v in r.astuple()) + "\n")
    return buf.getvalue()


def _quad_points(s: ParticleState, q: int):
    """Equal-mass midpoint nodes: q per particle cell, uniform weight c_L/(N q)."""
    g = s.gaps()
    offs = (np.arange(q) + 0.5) / q
    pts = s.positions[:, None] + g[:, None] * offs[None, :]
    return wrap(pts.ravel(), s.domain)


def interaction_energy(s: ParticleState, kernel: Kernel, quad_per_cell: int = 4) -> float:
    if kernel.is_zero:
        return 0.0
    if quad_per_cell < 1:
        raise DiagnosticsError("quad_per_cell must be >= 1")
    pts = _quad_points(s, quad_per_cell)
    wgt = s.domain.mass / (s.n * quad_per_cell)
    L = s.domain.length
    if kernel.exp_terms is not None:
        amps, rates = kernel.exp_terms
        total = _pairwise.weighted_pair_sum(pts, np.full(len(pts), wgt), L, amps, rates)
    else:
        total = _pairwise.weighted_pair_sum_generic(
            pts, np.full(len(pts), wgt), L,
            lambda w: kernel.eval(w))
    return 0.5 * total


def interaction_energy_particle_sum(s: ParticleState, kernel: Kernel) -> float:
    """Fast O(N^2) estimate: the bare particle double sum with weight c_L/N."""
    if kernel.is_zero:
        return 0.0
    w = np.full(s.n, s.domain.mass / s.n)
    L = s.domain.length
    if kernel.exp_terms is not None:
        amps, rates = kernel.exp_terms
        return 0.5 * _pairwise.weighted_pair_sum(s.positions, w, L, amps, rates)
    return 0.5 * _pairwise.weighted_pair_sum_generic(
        s.positions, w, L, lambda z: kernel.eval(z))


def internal_energy(s: ParticleState, nl: Nonlinearity) -> float:
    g = s.gaps()
    return float(np.sum(g * nl.w(s.domain.mass / (s.n * g))))


def energy(s: ParticleState, kernel: Kernel, nl: Nonlinearity,
           quad_per_cell: int = 4):
    """(total, interaction, internal) free energy of the particle density."""
    inter = interaction_energy(s, kernel, quad_per_cell)
    intern = internal_energy(s, nl)
    return inter + intern, inter, intern


def discrete_w12(s: ParticleState, nl: Nonlinearity) -> float:
    """(N/c_L) * sum_k (phi(rho_{k+1}) - phi(rho_k))^2 over cyclic indices."""
    phi = nl.phi(s.densities())
    diff = np.roll(phi, -1) - phi
    return float(s.n / s.domain.mass * np.sum(diff * diff))


def tv_phi(s: ParticleState, nl: Nonlinearity) -> float:
    """Total variation of phi(rho) around the torus."""
    phi = nl.phi(s.densities())
    return float(np.sum(np.abs(np.roll(phi, -1) - phi)))


def _pseudo_inverse_gap_l1(d: np.ndarray, dz: float) -> float:
    """Exact integral of |piecewise-linear through nodes d| (cyclic), times dz."""
    p = d
    q = np.roll(d, -1)
    same = p * q >= 0.0
    seg = np.where(same,
                   0.5 * (np.abs(p) + np.abs(q)),
                   0.5 * (p * p + q * q) / np.maximum(np.abs(q - p), 1e-300))
    return float(np.sum(seg) * dz)


def _check_compatible(a: ParticleState, b: ParticleState):
    if a.n != b.n:
        raise DiagnosticsError("states must carry the same particle count")
    if a.domain != b.domain:
        raise DiagnosticsError("states must share domain and mass")


def wasserstein1(a: ParticleState, b: ParticleState) -> float:
    """1-Wasserstein distance of the two normalized particle densities.

    Uses the identity d_W1 = ||X_a - X_b||_{L^1([0, c_L])} for the
    piecewise-linear pseudo-inverses on the shared mass grid, integrated
    segment by segment in closed form, positions unwrapped from each
    state's leftmost particle.  The result is divided by c_L so that it
    compares probability measures.
    """
    _check_compatible(a, b)
    d = unwrapped_positions(a) - unwrapped_positions(b)
    return _pseudo_inverse_gap_l1(d, a.domain.mass / a.n) / a.domain.mass


def wasserstein1_aligned(a: ParticleState, b: ParticleState,
                         shift_a: int = 0, shift_b: int = 0) -> float:
    """Trajectory-aware transport distance, paired by flow particle identity.

    Along a trajectory, snapshots are relabeled whenever a particle crosses
    the seam; pairing pseudo-inverse nodes by the recorded label shifts (and
    taking canonical position differences) keeps the distance continuous
    across crossings.  Valid while individual displacements stay under L/2.
    """
    _check_compatible(a, b)
    n = a.n
    idx = np.arange(n)
    xa = a.positions[(idx - shift_a) % n]
    xb = b.positions[(idx - shift_b) % n]
    d = wrap(xb - xa, a.domain)
    return _pseudo_inverse_gap_l1(d, a.domain.mass / n) / a.domain.mass


def convolution_quadrature(s: ParticleState, kernel: Kernel, x,
                           subdiv: int = 8) -> np.ndarray:
    """Midpoint quadrature of (K' * rho)(x) over the particle density."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if kernel.is_zero:
        return np.zeros(len(x))
    pts = _quad_points(s, subdiv)
    wgt = np.full(len(pts), s.domain.mass / (s.n * subdiv))
    L = s.domain.length
    if kernel.exp_terms is not None:
        amps, rates = kernel.exp_terms
        return _pairwise.convolve_kprime(x, pts, wgt, L, amps, rates)
    return _pairwise.convolve_kprime_generic(x, pts, wgt, L, kernel.eval_d1)


def check_inequalities(s: ParticleState, kernel: Kernel, nl: Nonlinearity,
                       subdiv: int = 8) -> ValidationReport:
    """Evaluate the guaranteed inequalities at one state; margins must be
    >= -1e-9 * (1 + bound scale).  Violations are report entries.

    Checked: the convolution bound |K'*rho| <= c_L ||K'||_inf at the cell
    midpoints; the deviation between the true and the mass-interpolated
    pairwise field against its Lipschitz bound; the sup bound on phi(rho)
    through the discrete seminorm; and the TV-vs-seminorm inequality.
    """
    rep = ValidationReport(subject="state inequalities")
    d, n = s.domain, s.n
    cL, L = d.mass, d.length
    g = s.gaps()
    rho = s.densities()
    phi = nl.phi(rho)
    dphi = np.roll(phi, -1) - phi
    sum_sq = float(np.sum(dphi * dphi))
    tol = 1e-9

    # sample at cell midpoints in mass coordinates
    xq = wrap(s.positions + 0.5 * g, d)
    conv = convolution_quadrature(s, kernel, xq, subdiv)

    bound = cL * kernel.norms.sup_K1
    margin = bound - float(np.max(np.abs(conv)))
    k = int(np.argmax(np.abs(conv)))
    rep.add("convolution_sup_bound", margin >= -tol * (1.0 + bound),
            witness=float(xq[k]), detail=f"margin {margin:.3e}")

    if kernel.is_zero:
        rep.add("interpolation_error_bound", True, detail="zero kernel")
    else:
        sums = _interaction_sums_for(s, kernel)
        klin = (cL / n) * 0.5 * (sums + np.roll(sums, -1))   # theta = 1/2 rows
        lhs = np.abs(conv - klin)
        bounds = kernel.norms.sup_K2 * g + cL * (L * kernel.norms.sup_K2
                                                 + 3.0 * kernel.norms.sup_K1) / n
        margins = bounds - lhs
        k = int(np.argmin(margins))
        rep.add("interpolation_error_bound",
                margins[k] >= -tol * (1.0 + bounds[k]),
                witness=int(k), detail=f"min margin {margins[k]:.3e}")

    lhs = float(np.max(phi))
    bound = float(nl.phi(cL / L)) + 1.0 + n * sum_sq
    rep.add("sup_phi_bound", bound - lhs >= -tol * (1.0 + abs(bound)),
            detail=f"max phi {lhs:.6e} vs bound {bound:.6e}")

    tv = float(np.sum(np.abs(dphi)))
    bound = max(1.0, n * sum_sq)
    rep.add("tv_seminorm_bound", bound - tv >= -tol * (1.0 + bound),
            detail=f"TV {tv:.6e} vs bound {bound:.6e}")
    return rep


def _interaction_sums_for(s: ParticleState, kernel: Kernel) -> np.ndarray:
    if kernel.is_zero:
        return np.zeros(s.n)
    if kernel.exp_terms is not None:
        amps, rates = kernel.exp_terms
        return _pairwise.interaction_sums(s.positions, s.domain.length, amps, rates)
    return _pairwise.interaction_sums_generic(s.positions, s.domain.length,
                                              kernel.eval_d1)


def energy_rate_series(times, energies):
    """Centered finite differences of an energy sample sequence.

    Sampling must be uniform; the endpoints use one-sided differences.
    """
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if len(times) < 3:
        raise DiagnosticsError("energy rate needs at least 3 samples")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-6 * abs(dt[0]):
        raise DiagnosticsError("energy rate needs uniform sampling")
    h = float(dt[0])
    rate = np.empty_like(energies)
    rate[1:-1] = (energies[2:] - energies[:-2]) / (2.0 * h)
    rate[0] = (energies[1] - energies[0]) / h
    rate[-1] = (energies[-1] - energies[-2]) / h
    return rate


def holder_ratios(traj):
    """Time-regularity profile of the flow in transport distance.

    For each dyadic stride of the sampling grid, the largest value of
    w1(t, t + h) / sqrt(h) over the grid pairs at that stride.  The first
    entry (full-span pair) serves as the reference constant; the flow obeys
    a square-root-in-time modulus when the finer-scale ratios stay within a
    moderate factor of it.  Returns a list of (h, max_ratio), coarse first.
    """
    times = traj.times()
    states = traj.states()
    shifts = traj.label_shifts or [0] * len(states)
    span = len(times) - 1
    if span < 1:
        return []
    out = []
    stride = span
    while stride >= 1:
        ratios = []
        for i in range(0, span - stride + 1, stride):
            h = times[i + stride] - times[i]
            if h > 0.0:
                ratios.append(wasserstein1_aligned(
                    states[i], states[i + stride],
                    shifts[i], shifts[i + stride]) / np.sqrt(h))
        if ratios:
            out.append((float(times[stride] - times[0]), float(max(ratios))))
        if stride == 1:
            break
        stride //= 2
    return out


def trajectory_diagnostics(traj, kernel: Kernel, nl: Nonlinearity,
                           quad_per_cell: int = 4,
                           with_inequalities: bool = False):
    """One DiagnosticsRow per snapshot, plus the inequality-violation count."""
    rows = []
    violations = 0
    s_init = traj.samples[0][1]
    shifts = traj.label_shifts or [0] * len(traj.samples)
    for (t, s), shift in zip(traj.samples, shifts):
        tot, inter, intern = energy(s, kernel, nl, quad_per_cell)
        rows.append(DiagnosticsRow(
            t=t,
            min_gap=s.min_gap(),
            max_density=s.max_density(),
            energy=tot,
            interaction_energy=inter,
            internal_energy=intern,
            w12=discrete_w12(s, nl),
            tv_phi=tv_phi(s, nl),
            w1_from_init=wasserstein1_aligned(s_init, s, shifts[0], shift),
        ))
        if with_inequalities:
            violations += len(check_inequalities(s, kernel, nl).failures())
    if len(rows) >= 3:
        rate = energy_rate_series([r.t for r in rows], [r.energy for r in rows])
        for r, v in zip(rows, rate):
            r.energy_rate = float(v)
    return rows, violations
