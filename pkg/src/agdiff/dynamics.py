"""Particle dynamics: pairwise transport plus nearest-neighbour diffusion.

Each particle k moves with

    dx_k/dt = -(c_L/N) * sum_{j != k} K'(x_k - x_j)
              -(N/c_L) * [phi(rho_k) - phi(rho_{k-1})]

(indices cyclic, differences canonical on the torus).  The configuration is
well defined while the strict ordering of the particles persists; losing it
is a first-class outcome ("collapse"), not an exception.

Integration happens in unwrapped coordinates (an increasing real sequence
spanning less than one period), so particle identity is stable across the
seam; wrapping happens only when kernels are evaluated and when snapshots
are published.  Time steps are explicit (rk4 / heun / euler) under two
adaptive restrictions: a gap CFL limit (no particle may cross a neighbour
within one step) and a diffusion stability limit derived from the local
linearization of the nearest-neighbour term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _pairwise
from .domain import TorusDomain, wrap
from .kernels import Kernel
from .nonlinearity import Nonlinearity
from .state import ParticleState, cdf_at

_STABILITY_SPAN = {"euler": 2.0, "heun": 2.0, "rk4": 2.78}
_EPS_DIV = 1e-30


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt_init: float = 1e-3
    safety: float = 0.2
    t_end: float = 1.0
    sample_every: float = None
    min_gap_floor: float = None       # resolved to 1e-3 * c_L / (N * rho_cap)
    rho_cap: float = 1e4
    min_time: float = 0.0             # CLI failure threshold for collapses
    t0_particle_threshold: int = 256  # N above which early collapse is anomalous

    def __post_init__(self):
        if self.method not in _STABILITY_SPAN:
            raise DynamicsError(f"unknown method {self.method!r}; "
                                f"use one of {sorted(_STABILITY_SPAN)}")
        if not (self.dt_init > 0.0 and self.t_end > 0.0):
            raise DynamicsError("dt_init and t_end must be positive")
        if not (0.0 < self.safety <= 1.0):
            raise DynamicsError("safety must lie in (0, 1]")

    def resolved_sample_every(self) -> float:
        return self.sample_every if self.sample_every else self.t_end / 100.0

    def resolved_gap_floor(self, cL: float, n: int) -> float:
        if self.min_gap_floor is not None:
            return self.min_gap_floor
        return 1e-3 * cL / (n * self.rho_cap)


@dataclass(frozen=True)
class CollapseSignal:
    """Ordering loss at time ``time`` in the gap behind particle ``index``."""
    time: float
    index: int


@dataclass(frozen=True)
class Termination:
    kind: str                 # 'completed' | 'gap_collapse' | 'step_floor'
    time: float
    index: int = -1


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)   # (t, ParticleState) pairs
    # positions[j] of samples[i] belongs to flow particle (j + label_shifts[i])
    # mod N; the shift moves when a particle crosses the seam
    label_shifts: list = field(default_factory=list)
    termination: Termination = None
    steps: int = 0
    dt_min: float = np.inf
    dt_max: float = 0.0
    windings: int = 0          # snapshots whose leftmost particle label moved
    t0_guarantee: float = 0.0  # collapse earlier than this is anomalous at large N
    collapsed_before_t0: bool = False

    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    def states(self):
        return [s for _, s in self.samples]

    def final_state(self) -> ParticleState:
        return self.samples[-1][1]


def _interaction_sums(xc: np.ndarray, L: float, kernel: Kernel) -> np.ndarray:
    if kernel.is_zero:
        return np.zeros(len(xc))
    if kernel.exp_terms is not None:
        amps, rates = kernel.exp_terms
        return _pairwise.interaction_sums(xc, L, amps, rates)
    return _pairwise.interaction_sums_generic(xc, L, kernel.eval_d1)


class _Flow:
    """rhs/step machinery on raw unwrapped position arrays."""

    def __init__(self, domain: TorusDomain, n: int, kernel: Kernel,
                 nl: Nonlinearity):
        self.d = domain
        self.n = n
        self.kernel = kernel
        self.nl = nl

    def gaps(self, y):
        g = np.empty(self.n)
        g[:-1] = np.diff(y)
        g[-1] = y[0] + self.d.length - y[-1]
        return g

    def ordered(self, y) -> bool:
        g = self.gaps(y)
        return bool(np.all(g > 0.0))

    def velocity(self, y):
        """Velocities for an unwrapped ordered configuration, or None if the
        configuration is not strictly ordered (mid-stage crossing)."""
        g = self.gaps(y)
        if not np.all(g > 0.0):
            return None
        cL, n = self.d.mass, self.n
        rho = cL / (n * g)
        phi = self.nl.phi(rho)
        jumps = phi - np.roll(phi, 1)
        v = -(n / cL) * jumps
        if not self.kernel.is_zero:
            s = _interaction_sums(wrap(y, self.d), self.d.length, self.kernel)
            v -= (cL / n) * s
        return v

    def step(self, y, dt, method, k1=None):
        """One explicit step; returns the new array or None on stage crossing."""
        k1 = self.velocity(y) if k1 is None else k1
        if k1 is None:
            return None
        if method == "euler":
            return y + dt * k1
        if method == "heun":
            k2 = self.velocity(y + dt * k1)
            if k2 is None:
                return None
            return y + 0.5 * dt * (k1 + k2)
        k2 = self.velocity(y + 0.5 * dt * k1)
        k3 = self.velocity(y + 0.5 * dt * k2) if k2 is not None else None
        k4 = self.velocity(y + dt * k3) if k3 is not None else None
        if k4 is None:
            return None
        return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def stable_dt(self, y, method):
        """Linear-stability bound for the explicit diffusion update.

        The nearest-neighbour term linearizes to a graph Laplacian whose
        largest eigenvalue is at most 4 (N/c_L)^2 max_k phi'(rho_k) rho_k^2.
        """
        g = self.gaps(y)
        cL, n = self.d.mass, self.n
        rho = cL / (n * g)
        lam = 4.0 * (n / cL) ** 2 * float(np.max(self.nl.phi_prime(rho) * rho * rho))
        if lam <= 0.0:
            return np.inf
        return 0.9 * _STABILITY_SPAN[method] / lam

    def gap_dt(self, y, v, safety):
        g = self.gaps(y)
        dv = np.empty(self.n)
        dv[:-1] = np.abs(np.diff(v))
        dv[-1] = abs(v[0] - v[-1])
        return safety * float(np.min(g)) / (float(np.max(dv)) + _EPS_DIV)


def rhs(s: ParticleState, kernel: Kernel, nl: Nonlinearity) -> np.ndarray:
    """Particle velocities for a valid state."""
    flow = _Flow(s.domain, s.n, kernel, nl)
    v = flow.velocity(s.positions.copy())
    if v is None:
        raise DynamicsError("rhs requires a strictly ordered state")
    return v


def phi_jumps(s: ParticleState, nl: Nonlinearity) -> np.ndarray:
    """F_k = phi(rho_k) - phi(rho_{k-1}), the diffusion drive per particle."""
    phi = nl.phi(s.densities())
    return phi - np.roll(phi, 1)


def klin_convolve(s: ParticleState, kernel: Kernel, x) -> np.ndarray:
    """Mass-interpolated pairwise field at torus point(s) x.

    In the cell with mass coordinate z, writing theta for the fractional
    particle index z*N/c_L - k, the value interpolates the two particle sums

        (c_L/N) * [(1-theta) * sum_{j != k} K'(x_k - x_j)
                   + theta * sum_{j != k+1} K'(x_{k+1} - x_j)].

    At a particle position (theta = 0) this reproduces the interaction part
    of the velocity bitwise, same summation order.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d, n = s.domain, s.n
    sums = _interaction_sums(s.positions, d.length, kernel)
    z = np.atleast_1d(cdf_at(s, x))
    u = z * n / d.mass
    u = np.where(np.abs(u - np.round(u)) < 1e-12 * n, np.round(u), u)
    k = np.minimum(u.astype(int), n - 1)
    theta = u - k
    out = (d.mass / n) * ((1.0 - theta) * sums[k] + theta * sums[(k + 1) % n])
    return float(out[0]) if scalar else out


def step(s: ParticleState, kernel: Kernel, nl: Nonlinearity,
         cfg: IntegratorConfig, dt: float):
    """One explicit step from a valid state.

    Returns the stepped ParticleState, or a CollapseSignal if the step loses
    strict ordering or pushes a gap below the configured floor.
    """
    if dt < 0.0:
        raise DynamicsError("dt must be nonnegative")
    if dt == 0.0:
        return s
    flow = _Flow(s.domain, s.n, kernel, nl)
    y = flow.step(s.positions.copy(), dt, cfg.method)
    bad = _collapse_index(flow, y, cfg.resolved_gap_floor(s.domain.mass, s.n))
    if bad is not None:
        return CollapseSignal(s.time + dt, bad)
    return _publish(s.domain, y, s.time + dt)[0]


def _collapse_index(flow, y, floor):
    if y is None:
        return -1        # crossing happened inside a stage
    g = flow.gaps(y)
    k = int(np.argmin(g))
    if g[k] < floor:
        return k
    return None


def _publish(d: TorusDomain, y, t):
    """Canonicalize an unwrapped configuration into a ParticleState.

    Returns (state, shift): position j of the state is flow particle
    (j + shift) mod N; shift is nonzero once a particle crossed the seam.
    """
    c = wrap(y, d)
    k0 = int(np.argmin(c))
    if k0:
        c = np.roll(c, -k0)
    return ParticleState(d, c, t), k0


def simulate(s0: ParticleState, kernel: Kernel, nl: Nonlinearity,
             cfg: IntegratorConfig, observers=()) -> Trajectory:
    """Advance to t_end with adaptive explicit stepping and ordering guards.

    Snapshots are taken on the uniform sampling grid (period
    cfg.sample_every, default t_end/100); observers are called as
    observer(t, state) at each snapshot.  Termination records whether the
    run completed, collapsed (when, which gap), or hit the step floor.
    """
    d, n = s0.domain, s0.n
    flow = _Flow(d, n, kernel, nl)
    floor_gap = cfg.resolved_gap_floor(d.mass, n)
    dt_floor = 1e-14 * cfg.t_end
    sample_dt = cfg.resolved_sample_every()

    traj = Trajectory()
    rho0_max = s0.max_density()
    if kernel.norms.sup_K1 > 0.0:
        traj.t0_guarantee = 1.0 / (2.0 * kernel.norms.sup_K1 * rho0_max)
    else:
        traj.t0_guarantee = np.inf

    y = s0.positions.copy()
    t = float(s0.time)
    t_start = t

    def publish(tt, yy):
        state, shift = _publish(d, yy, tt)
        if traj.label_shifts and shift != traj.label_shifts[-1]:
            traj.windings += 1
        traj.samples.append((tt, state))
        traj.label_shifts.append(shift)
        for obs in observers:
            obs(tt, state)

    publish(t, y)
    next_sample = t_start + sample_dt
    t_final = t_start + cfg.t_end

    while t < t_final - 1e-15 * cfg.t_end:
        v = flow.velocity(y)
        dt = min(cfg.dt_init,
                 flow.gap_dt(y, v, cfg.safety),
                 flow.stable_dt(y, cfg.method))
        if dt < dt_floor:
            traj.termination = Termination("step_floor", t)
            break
        hit_sample = False
        target = min(next_sample, t_final)
        if t + dt >= target - 1e-12 * cfg.t_end:
            dt = target - t
            hit_sample = True
        y_new = flow.step(y, dt, cfg.method, k1=v)
        bad = _collapse_index(flow, y_new, floor_gap)
        if bad is not None:
            traj.termination = Termination("gap_collapse", t + dt, bad)
            if t + dt < min(traj.t0_guarantee, t_final) and n >= cfg.t0_particle_threshold:
                traj.collapsed_before_t0 = True
            break
        y = y_new
        t = target if hit_sample else t + dt
        traj.steps += 1
        traj.dt_min = min(traj.dt_min, dt)
        traj.dt_max = max(traj.dt_max, dt)
        if hit_sample:
            publish(t, y)
            if abs(t - t_final) <= 1e-12 * cfg.t_end:
                break
            next_sample = min(next_sample + sample_dt, t_final)

    if traj.termination is None:
        traj.termination = Termination("completed", t)
    return traj
