"""Flat torus arithmetic: canonical representatives, periodic differences, arc gaps.

All positions live on the circle R/LZ, identified with the interval
[-L/2, L/2) (closed on the left).  Every other module routes its positional
arithmetic through the three functions here so the seam convention lives in
exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class TorusDomain:
    """Periodic domain of circumference ``length`` carrying total mass ``mass``.

    ``mass`` is the amount of density living on the torus (at most 1: the
    configurations of interest are sub-probability densities).
    """

    length: float
    mass: float = 1.0

    def __post_init__(self):
        if not (self.length > 0.0 and np.isfinite(self.length)):
            raise DomainError(f"torus length must be positive, got {self.length}")
        if not (0.0 < self.mass <= 1.0):
            raise DomainError(f"torus mass must lie in (0, 1], got {self.mass}")

    @property
    def half(self) -> float:
        return 0.5 * self.length


def wrap(x, d: TorusDomain):
    """Canonical representative of ``x`` in [-L/2, L/2).

    Accepts scalars or arrays.  The right endpoint maps to the left one:
    wrap(L/2) == -L/2.
    """
    L = d.length
    r = np.asarray(x, dtype=float) - L * np.floor(np.asarray(x, dtype=float) / L + 0.5)
    # floor rounding can leave a value pinned to +L/2; fold it back.
    r = np.where(r >= d.half, r - L, r)
    r = np.where(r < -d.half, r + L, r)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(r)
    return r


def periodic_diff(x, y, d: TorusDomain):
    """Canonical representative of x - y, i.e. the signed shortest-ish offset.

    Equals wrap(x - y); in particular antisymmetric up to the seam.
    """
    return wrap(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), d)


def gap(x_left, x_right, d: TorusDomain):
    """Arc length travelled counterclockwise from ``x_left`` to ``x_right``.

    Result lies in (0, L]; by convention the self-gap is the full circle,
    gap(x, x) == L.  Inputs must be canonical representatives.
    """
    L = d.length
    r = np.asarray(x_right, dtype=float) - np.asarray(x_left, dtype=float)
    r = np.where(r <= 0.0, r + L, r)
    if np.isscalar(x_left) and np.isscalar(x_right):
        return float(r)
    return r
