"""Diffusion nonlinearities phi(rho) = rho*W'(rho) - W(rho) and their inverses.

The canonical family is the power law phi(rho) = rho^m with m >= 1, whose
internal energy density is W(rho) = rho^m / (m-1) for m > 1.  The m = 1
(linear diffusion) case is supported but carries a caveat: its natural
W(rho) = rho*log(rho) - rho is negative on (0, 1), so energy diagnostics
that rely on W >= 0 must be skipped for it.  ``validate_nonlinearity``
reports that as an expected failure rather than hiding it.

Structural constants carried alongside:
  c0       : phi'(rho)*rho <= c0*phi(rho) and phi <= max(rho, c0*W)
  c1, c2   : phi <= c1*rho below rho_hat, phi >= c2*rho above rho_bar
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reporting import ValidationReport


class NonlinearityError(ValueError):
    pass


@dataclass(frozen=True)
class PhiConstants:
    c0: float
    c1: float
    c2: float
    rho_hat: float
    rho_bar: float


@dataclass(frozen=True)
class Nonlinearity:
    phi: object           # rho -> phi(rho), vectorized
    phi_prime: object     # rho -> phi'(rho)
    w: object             # rho -> W(rho)
    phi_inverse: object   # v -> rho with phi(rho) = v
    constants: PhiConstants
    kind: str = "power_law"
    m: float = 2.0
    # True when W >= 0 holds (false for m = 1, where energy lower bounds fail).
    w_nonnegative: bool = True


@dataclass(frozen=True)
class NonlinearitySpec:
    kind: str                       # 'power_law' or 'custom'
    params: dict = field(default_factory=dict)


def _power_law(m: float) -> Nonlinearity:
    if m < 1.0:
        raise NonlinearityError(f"power-law exponent must satisfy m >= 1, got {m}")
    consts = PhiConstants(c0=m, c1=1.0, c2=1.0, rho_hat=0.5, rho_bar=2.0)
    if m == 1.0:
        def w(r):
            r = np.asarray(r, dtype=float)
            out = np.where(r > 0.0, r * np.log(np.where(r > 0.0, r, 1.0)) - r, 0.0)
            return out if out.ndim else float(out)

        return Nonlinearity(
            phi=lambda r: np.asarray(r, dtype=float) + 0.0,
            phi_prime=lambda r: np.ones_like(np.asarray(r, dtype=float)) + 0.0,
            w=w,
            phi_inverse=lambda v: np.asarray(v, dtype=float) + 0.0,
            constants=consts, kind="power_law", m=1.0, w_nonnegative=False)

    def phi(r):
        return np.asarray(r, dtype=float) ** m

    def phi_prime(r):
        return m * np.asarray(r, dtype=float) ** (m - 1.0)

    def w(r):
        return np.asarray(r, dtype=float) ** m / (m - 1.0)

    def phi_inverse(v):
        return np.asarray(v, dtype=float) ** (1.0 / m)

    return Nonlinearity(phi, phi_prime, w, phi_inverse, consts,
                        kind="power_law", m=m, w_nonnegative=True)


def _custom(params) -> Nonlinearity:
    grid = np.asarray(params["rho_grid"], dtype=float)
    phi_v = np.asarray(params["phi_values"], dtype=float)
    w_v = np.asarray(params["w_values"], dtype=float)
    if grid.ndim != 1 or grid.shape != phi_v.shape or grid.shape != w_v.shape:
        raise NonlinearityError("custom nonlinearity needs matching rho_grid/phi_values/w_values")
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
        raise NonlinearityError("custom rho_grid must start at 0 and increase strictly")
    consts = PhiConstants(**params.get("constants", dict(
        c0=2.0, c1=1.0, c2=1.0, rho_hat=0.5, rho_bar=2.0)))
    dphi = np.gradient(phi_v, grid)

    def phi(r):
        return np.interp(np.asarray(r, dtype=float), grid, phi_v)

    def phi_prime(r):
        return np.interp(np.asarray(r, dtype=float), grid, dphi)

    def w(r):
        return np.interp(np.asarray(r, dtype=float), grid, w_v)

    def phi_inverse(v):
        # phi is piecewise linear and (when valid) strictly increasing, so
        # the exact inverse is interpolation with the axes swapped.
        return np.interp(np.asarray(v, dtype=float), phi_v, grid)

    return Nonlinearity(phi, phi_prime, w, phi_inverse, consts,
                        kind="custom", m=float("nan"),
                        w_nonnegative=bool(np.all(w_v >= 0.0)))


def build_nonlinearity(spec: NonlinearitySpec) -> Nonlinearity:
    if spec.kind == "power_law":
        return _power_law(float(spec.params.get("m", 2.0)))
    if spec.kind == "custom":
        return _custom(spec.params)
    raise NonlinearityError(f"unknown nonlinearity kind {spec.kind!r}")


def validate_nonlinearity(nl: Nonlinearity, rho_max: float = 100.0,
                          n_samples: int = 1000) -> ValidationReport:
    """Audit the structural assumptions on a grid of densities in (0, rho_max]."""
    if n_samples < 100:
        raise NonlinearityError("validate_nonlinearity needs n_samples >= 100")
    rep = ValidationReport(subject=f"nonlinearity[{nl.kind}, m={nl.m}]")
    r = np.unique(np.concatenate([
        np.geomspace(1e-8, rho_max, n_samples // 2),
        np.linspace(rho_max / n_samples, rho_max, n_samples // 2),
    ]))
    c = nl.constants
    phi, w = nl.phi(r), nl.w(r)
    dphi = nl.phi_prime(r)
    tol = 1e-12

    i = int(np.argmin(w))
    rep.add("W_nonnegative", w[i] >= -tol, witness=float(r[i]),
            detail=f"min W = {w[i]:.3e}" + ("" if w[i] >= -tol else " (known for m=1)"))

    rep.add("phi_vanishes_at_zero", abs(float(nl.phi(0.0))) <= tol,
            detail=f"phi(0) = {float(nl.phi(0.0)):.3e}")

    inc = np.diff(phi)
    i = int(np.argmin(inc))
    rep.add("phi_strictly_increasing", np.all(inc > 0.0), witness=float(r[i]),
            detail=f"min increment {inc[i]:.3e}")

    lhs = dphi * r
    margin = c.c0 * phi - lhs
    i = int(np.argmin(margin))
    rep.add("phi_prime_growth", margin[i] >= -tol * (1.0 + abs(lhs[i])),
            witness=float(r[i]), detail=f"min c0*phi - phi'*rho = {margin[i]:.3e}")

    margin = np.maximum(r, c.c0 * w) - phi
    i = int(np.argmin(margin))
    rep.add("phi_energy_domination", margin[i] >= -tol * (1.0 + abs(phi[i])),
            witness=float(r[i]), detail=f"min max(rho, c0*W) - phi = {margin[i]:.3e}")

    low = r <= c.rho_hat
    ok_low = np.all(phi[low] <= c.c1 * r[low] * (1.0 + 1e-12))
    high = r >= c.rho_bar
    ok_high = np.all(phi[high] >= c.c2 * r[high] * (1.0 - 1e-12))
    rep.add("linear_bounds", bool(ok_low and ok_high),
            detail=f"phi <= c1*rho below {c.rho_hat}, phi >= c2*rho above {c.rho_bar}")

    rt = nl.phi_inverse(phi)
    err = np.abs(rt - r) / (1.0 + np.abs(r))
    i = int(np.argmax(err))
    rep.add("inverse_roundtrip", err[i] <= 1e-10, witness=float(r[i]),
            detail=f"max relative roundtrip error {err[i]:.3e}")
    return rep
