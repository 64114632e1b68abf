"""Particle configurations and grid densities.

A configuration of N ordered particles on the torus carries equal mass
c_L / N per particle cell; the cell [x_k, x_{k+1}) encodes the constant
density rho_k = c_L / (N * gap_k).  Initialization places particles at
consecutive equal-mass quantiles of a given density, starting from the
pinned left endpoint x_0 = -L/2.

``GridDensity`` (cell averages on a uniform grid) is the single exchange
format between the particle world, the finite-volume reference solver, and
all L^1 comparisons.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .domain import TorusDomain, wrap


class StateError(ValueError):
    pass


class InitializationError(StateError):
    pass


@dataclass(frozen=True)
class GridDensity:
    """Cell averages on a uniform grid of M cells anchored at -L/2."""

    domain: TorusDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or len(v) < 1:
            raise StateError("grid density needs a 1-d, nonempty value array")
        if np.any(v < 0.0) or not np.all(np.isfinite(v)):
            raise StateError("grid density values must be finite and nonnegative")

    @property
    def cell_count(self) -> int:
        return len(self.values)

    @property
    def cell_width(self) -> float:
        return self.domain.length / len(self.values)

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.cell_width)

    def edges(self) -> np.ndarray:
        return -self.domain.half + self.cell_width * np.arange(self.cell_count + 1)

    def centers(self) -> np.ndarray:
        return -self.domain.half + self.cell_width * (np.arange(self.cell_count) + 0.5)

    def cumulative(self) -> np.ndarray:
        """Masses at the cell edges: M+1 values from 0 to the total mass."""
        return np.concatenate([[0.0], np.cumsum(self.values) * self.cell_width])

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# L={float(self.domain.length)!r} M={self.cell_count} "
                  f"mass={float(self.mass)!r}\n")
        for v in self.values:
            buf.write(f"{float(v)!r}\n")
        return buf.getvalue()

    @staticmethod
    def read_csv(path) -> "GridDensity":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("#"):
                raise StateError(f"{path}: missing grid density header")
            fields = dict(tok.split("=") for tok in header[1:].split())
            values = np.array([float(line) for line in fh if line.strip()])
        L = float(fields["L"])
        mass = float(fields["mass"])
        if int(fields["M"]) != len(values):
            raise StateError(f"{path}: header M={fields['M']} but {len(values)} rows")
        return GridDensity(TorusDomain(L, mass), values)


def l1_distance(a: GridDensity, b: GridDensity) -> float:
    """integral |a - b| over the torus; grids must match exactly."""
    if a.cell_count != b.cell_count or a.domain.length != b.domain.length:
        raise StateError("l1_distance needs matching domain and cell count")
    return float(np.sum(np.abs(a.values - b.values)) * a.cell_width)


@dataclass(frozen=True)
class ParticleState:
    """N strictly ordered canonical positions plus the derived cell densities."""

    domain: TorusDomain
    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        p = np.ascontiguousarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", p)
        if p.ndim != 1 or len(p) < 2:
            raise StateError("particle state needs at least two particles")
        L, half = self.domain.length, self.domain.half
        if np.any(p < -half) or np.any(p >= half):
            raise StateError("positions must be canonical, in [-L/2, L/2)")
        if np.any(np.diff(p) <= 0.0):
            raise StateError("positions must be strictly increasing")
        if p[0] + L - p[-1] <= 0.0:
            raise StateError("wraparound gap must be positive")

    @property
    def n(self) -> int:
        return len(self.positions)

    def gaps(self) -> np.ndarray:
        """g_k = arc from particle k to particle k+1 (cyclic); sums to L."""
        p = self.positions
        return np.concatenate([np.diff(p), [p[0] + self.domain.length - p[-1]]])

    def densities(self) -> np.ndarray:
        """rho_k = c_L / (N * g_k), the density on cell [x_k, x_{k+1})."""
        return self.domain.mass / (self.n * self.gaps())

    def min_gap(self) -> float:
        return float(np.min(self.gaps()))

    def max_density(self) -> float:
        return self.domain.mass / (self.n * self.min_gap())

    def with_time(self, t: float) -> "ParticleState":
        return ParticleState(self.domain, self.positions, t)


def _invert_cumulative(edges: np.ndarray, cum: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Leftmost points where the piecewise-linear cumulative reaches each z.

    ``cum`` is nondecreasing over ``edges``; flat stretches (vacuum) resolve
    to their left end, matching the sup-of-sublevel definition of the
    generalized inverse.
    """
    idx = np.searchsorted(cum, z, side="left")
    idx = np.clip(idx, 1, len(cum) - 1)
    lo, hi = cum[idx - 1], cum[idx]
    slope = hi - lo
    frac = np.where(slope > 0.0, (z - lo) / np.where(slope > 0.0, slope, 1.0), 1.0)
    return edges[idx - 1] + frac * (edges[idx] - edges[idx - 1])


def _invert_cdf_bisect(cdf, lo: float, hi: float, targets: np.ndarray,
                       tol: float) -> np.ndarray:
    """Vectorized bisection for a nondecreasing cdf: leftmost crossings."""
    a = np.full_like(targets, lo)
    b = np.full_like(targets, hi)
    while np.max(b - a) > tol:
        mid = 0.5 * (a + b)
        below = np.asarray(cdf(mid), dtype=float) < targets
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def init_from_density(rho0, n: int, d: TorusDomain = None) -> ParticleState:
    """Place N particles at consecutive mass-c_L/N quantiles of ``rho0``.

    ``rho0`` may be a GridDensity (inverted exactly through its piecewise
    linear cumulative), an object with exact ``cdf``/``mass`` methods
    (inverted by bisection to 1e-13 L), or a bare callable (sampled on a
    fine grid).  The first particle is pinned at -L/2; cell k then carries
    c_L / N of rho0-mass.
    """
    if n < 2:
        raise InitializationError("need at least 2 particles")
    exact_cdf = None
    if isinstance(rho0, GridDensity):
        d = rho0.domain
        edges, cum = rho0.edges(), rho0.cumulative()
    elif hasattr(rho0, "cdf") and hasattr(rho0, "mass"):
        if d is None:
            d = rho0.domain
        exact_cdf = rho0.cdf
        total0 = float(rho0.mass) if not callable(rho0.mass) else float(rho0.mass())
    else:
        if d is None:
            raise InitializationError("callable densities need an explicit domain")
        m = max(1 << 17, 32 * n)
        cells = GridDensity(d, np.maximum(np.asarray(
            rho0(-d.half + d.length * (np.arange(m) + 0.5) / m), dtype=float), 0.0))
        edges, cum = cells.edges(), cells.cumulative()

    z = d.mass * np.arange(1, n) / n
    if exact_cdf is not None:
        if total0 <= 0.0:
            raise InitializationError("initial density has zero total mass")
        scale = d.mass / total0
        inner = _invert_cdf_bisect(lambda x: scale * np.asarray(exact_cdf(x)),
                                   -d.half, d.half, z, 1e-13 * d.length)
    else:
        total = float(cum[-1])
        if total <= 0.0:
            raise InitializationError("initial density has zero total mass")
        cum = cum * (d.mass / total)   # normalize to the domain mass c_L
        inner = _invert_cumulative(edges, cum, z)
    positions = np.concatenate([[-d.half], inner])
    if np.any(np.diff(positions) <= 0.0):
        k = int(np.argmin(np.diff(positions)))
        raise InitializationError(
            f"cannot separate quantiles near x={positions[k]:.6g}: "
            f"a single point carries mass >= c_L/N")
    return ParticleState(d, positions, 0.0)


def cdf_at(s: ParticleState, x) -> np.ndarray:
    """Mass accumulated counterclockwise from x_0 up to canonical point x.

    Piecewise linear, equals k*c_L/N at x_k, slope rho_k in between.
    """
    p, d = s.positions, s.domain
    cL, n = d.mass, s.n
    rho = s.densities()
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(p, x, side="right") - 1
    before = idx < 0      # x lies in the wraparound cell, left of x_0
    idx_w = np.where(before, n - 1, idx)
    base = idx_w * (cL / n)
    offset = x - p[idx_w] + np.where(before, d.length, 0.0)
    out = base + rho[idx_w] * offset
    return out if out.ndim else float(out)


def pseudo_inverse(s: ParticleState, z) -> np.ndarray:
    """Position of the mass coordinate z in [0, c_L): inverse of cdf_at.

    X(k*c_L/N) = x_k exactly; linear in z inside each mass cell.
    """
    d, n = s.domain, s.n
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0) or np.any(z >= d.mass):
        raise StateError("mass coordinate must lie in [0, c_L)")
    u = z * n / d.mass
    u = np.where(np.abs(u - np.round(u)) < 1e-12 * n, np.round(u), u)
    k = np.minimum(u.astype(int), n - 1)
    theta = u - k
    g = s.gaps()
    out = wrap(s.positions[k] + theta * g[k], d)
    return out if out.ndim else float(out)


def unwrapped_positions(s: ParticleState) -> np.ndarray:
    """Particle positions lifted to the real line, increasing from x_0."""
    g = s.gaps()
    return s.positions[0] + np.concatenate([[0.0], np.cumsum(g[:-1])])


def to_grid(s: ParticleState, m: int) -> GridDensity:
    """Project the piecewise-constant particle density onto a uniform grid.

    Cell averages come from exact overlap integrals of particle cells with
    grid cells (particle cells crossing the seam are split), so total mass
    is preserved to rounding.
    """
    if m < 1:
        raise StateError("grid needs at least one cell")
    d = s.domain
    L, half = d.length, d.half
    width = L / m
    mass = np.zeros(m)
    rho = s.densities()
    starts = s.positions
    gaps = s.gaps()

    def deposit(p, q, density):
        # segment [p, q) inside the canonical window
        if q <= p:
            return
        i0 = min(int((p + half) / width), m - 1)
        i1 = min(int(np.nextafter(q + half, -np.inf) / width), m - 1)
        if i1 <= i0:
            mass[i0] += density * (q - p)
            return
        mass[i0] += density * ((-half + (i0 + 1) * width) - p)
        if i1 > i0 + 1:
            mass[i0 + 1:i1] += density * width
        mass[i1] += density * (q - (-half + i1 * width))

    for k in range(s.n):
        a, g = starts[k], gaps[k]
        b = a + g
        if b <= half:
            deposit(a, b, rho[k])
        else:
            deposit(a, half, rho[k])
            deposit(-half, b - L, rho[k])
    return GridDensity(d, mass / width)
