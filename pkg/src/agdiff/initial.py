"""Initial density construction: named shapes, vacuum floors, normalization.

Every shape exposes an exact cumulative function from the left domain edge,
so particle quantile placement and grid cell averages are both computed from
the same closed-form mass rather than from pointwise samples.  A built datum
is always normalized to the domain mass c_L; an optional vacuum floor adds a
constant eps before the final normalization, producing the strictly positive
approximants used by the vanishing-floor experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, erf, gamma

from .domain import TorusDomain
from .state import GridDensity, InitializationError


def barenblatt(m: float, mass: float, t: float, x) -> np.ndarray:
    """Self-similar source solution of d/dt rho = (rho^m)_xx on the line.

    rho(t, x) = t^-a (C - kappa x^2 t^-2a)_+^(1/(m-1)) with a = 1/(m+1) and
    kappa = a(m-1)/(2m); C is fixed so the profile carries ``mass``.
    """
    if m <= 1.0:
        raise ValueError("self-similar profile needs m > 1")
    if t <= 0.0:
        raise ValueError("self-similar profile needs t > 0")
    a = 1.0 / (m + 1.0)
    kappa = a * (m - 1.0) / (2.0 * m)
    C = _barenblatt_C(m, mass)
    x = np.asarray(x, dtype=float)
    core = C - kappa * x * x * t ** (-2.0 * a)
    out = t ** (-a) * np.maximum(core, 0.0) ** (1.0 / (m - 1.0))
    return out if out.ndim else float(out)


def _barenblatt_C(m: float, mass: float) -> float:
    # integral of (C - kappa y^2)_+^p dy = C^(p+1/2) kappa^-1/2 * A(p),
    # A(p) = sqrt(pi) Gamma(p+1) / Gamma(p+3/2), p = 1/(m-1): invert for C.
    a = 1.0 / (m + 1.0)
    kappa = a * (m - 1.0) / (2.0 * m)
    p = 1.0 / (m - 1.0)
    A = np.sqrt(np.pi) * gamma(p + 1.0) / gamma(p + 1.5)
    return float((mass * np.sqrt(kappa) / A) ** (1.0 / (p + 0.5)))


def barenblatt_support_radius(m: float, mass: float, t: float) -> float:
    a = 1.0 / (m + 1.0)
    kappa = a * (m - 1.0) / (2.0 * m)
    return float(np.sqrt(_barenblatt_C(m, mass) / kappa) * t ** a)


class _Shape:
    """Unnormalized profile on the window [-L/2, L/2] with an exact CDF."""

    def __init__(self, domain: TorusDomain):
        self.domain = domain

    def cdf(self, x):        # mass accumulated from -L/2; vectorized
        raise NotImplementedError

    @property
    def mass(self) -> float:
        return float(self.cdf(self.domain.half))


class UniformShape(_Shape):
    def cdf(self, x):
        return np.asarray(x, dtype=float) + self.domain.half


class HatShape(_Shape):
    """Triangle of given peak height and base width centered inside the window."""

    def __init__(self, domain, center=0.0, width=2.0, height=1.0):
        super().__init__(domain)
        if width <= 0.0 or height <= 0.0:
            raise InitializationError("hat needs positive width and height")
        if center - width / 2 < -domain.half or center + width / 2 > domain.half:
            raise InitializationError("hat support must lie inside the window")
        self.center, self.width, self.height = center, width, height

    def cdf(self, x):
        c, w, h = self.center, 0.5 * self.width, self.height
        x = np.asarray(x, dtype=float)
        left = np.clip(x - (c - w), 0.0, w)
        right = np.clip(x - c, 0.0, w)
        m = h * (left * left - right * right) / (2.0 * w) + h * right
        # pieces: rising flank integrates to h*left^2/(2w); falling flank to
        # h*right - h*right^2/(2w); combined in one clipped expression
        return m if m.ndim else float(m)


class GaussianShape(_Shape):
    """exp(-(x-center)^2 / (2 sigma^2)) truncated to the window."""

    def __init__(self, domain, center=0.0, sigma=1.0):
        super().__init__(domain)
        if sigma <= 0.0:
            raise InitializationError("gaussian needs positive sigma")
        self.center, self.sigma = center, sigma

    def cdf(self, x):
        s2 = self.sigma * np.sqrt(2.0)
        amp = self.sigma * np.sqrt(0.5 * np.pi)
        lo = erf((-self.domain.half - self.center) / s2)
        out = amp * (erf((np.asarray(x, dtype=float) - self.center) / s2) - lo)
        return out if out.ndim else float(out)


class BarenblattShape(_Shape):
    """Self-similar profile frozen at time t0, unit mass before normalization."""

    def __init__(self, domain, m=2.0, t0=0.1):
        super().__init__(domain)
        self.m, self.t0 = float(m), float(t0)
        self.radius = barenblatt_support_radius(self.m, 1.0, self.t0)
        if self.radius >= domain.half:
            raise InitializationError(
                f"self-similar support radius {self.radius:.3g} does not fit in "
                f"the window (needs < L/2 = {domain.half:.3g})")
        self.p = 1.0 / (self.m - 1.0)

    def cdf(self, x):
        s = np.clip(np.asarray(x, dtype=float) / self.radius, -1.0, 1.0)
        out = betainc(self.p + 1.0, self.p + 1.0, 0.5 * (s + 1.0))
        return out if out.ndim else float(out)


class GridShape(_Shape):
    """Shape backed by grid cell averages; CDF is their exact running mass."""

    def __init__(self, grid: GridDensity):
        super().__init__(grid.domain)
        self.grid = grid
        self._edges = grid.edges()
        self._cum = grid.cumulative()

    def cdf(self, x):
        out = np.interp(np.asarray(x, dtype=float), self._edges, self._cum)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class InitialDatum:
    """A shape together with floor/normalization, pinned to total mass c_L.

    cdf(x) = scale2 * (scale1 * shape_cdf(x) + eps * (x + L/2)) where scale1
    normalizes the bare shape to c_L and scale2 renormalizes after the floor.
    """

    shape: object
    domain: TorusDomain
    vacuum_floor: float = 0.0

    def _scales(self):
        cL, L = self.domain.mass, self.domain.length
        m0 = self.shape.mass
        if m0 <= 0.0:
            raise InitializationError("initial shape has zero mass")
        s1 = cL / m0
        s2 = cL / (cL + self.vacuum_floor * L)
        return s1, s2

    @property
    def mass(self) -> float:
        return self.domain.mass

    def cdf(self, x):
        s1, s2 = self._scales()
        base = np.asarray(self.shape.cdf(x), dtype=float)
        out = s2 * (s1 * base + self.vacuum_floor
                    * (np.asarray(x, dtype=float) + self.domain.half))
        return out if out.ndim else float(out)

    def grid(self, m: int) -> GridDensity:
        """Exact cell averages on an m-cell grid (CDF increments / width)."""
        edges = -self.domain.half + self.domain.length * np.arange(m + 1) / m
        cum = self.cdf(edges)
        vals = np.diff(cum) / (self.domain.length / m)
        return GridDensity(self.domain, np.maximum(vals, 0.0))

    def min_density(self, samples: int = 4096) -> float:
        g = self.grid(samples)
        return float(np.min(g.values))

    def first_moment(self, samples: int = 8192) -> float:
        g = self.grid(samples)
        return float(np.sum(np.abs(g.centers()) * g.values) * g.cell_width)


_SHAPE_BUILDERS = {
    "uniform": lambda d, p: UniformShape(d),
    "hat": lambda d, p: HatShape(d, p.get("center", 0.0), p.get("width", 2.0),
                                 p.get("height", 1.0)),
    "gaussian_like": lambda d, p: GaussianShape(d, p.get("center", 0.0),
                                                p.get("sigma", 1.0)),
    "barenblatt": lambda d, p: BarenblattShape(d, p.get("m", 2.0),
                                               p.get("t0", 0.1)),
    "from_file": lambda d, p: GridShape(GridDensity.read_csv(p["path"])),
}


def build_initial(kind: str, domain: TorusDomain, params=None,
                  vacuum_floor: float = 0.0) -> InitialDatum:
    params = params or {}
    if kind not in _SHAPE_BUILDERS:
        raise InitializationError(
            f"unknown initial kind {kind!r}; expected one of {sorted(_SHAPE_BUILDERS)}")
    if vacuum_floor < 0.0:
        raise InitializationError("vacuum floor must be nonnegative")
    shape = _SHAPE_BUILDERS[kind](domain, params)
    if kind == "from_file" and shape.domain.length != domain.length:
        raise InitializationError("initial file domain length does not match config")
    return InitialDatum(shape, domain, vacuum_floor)
