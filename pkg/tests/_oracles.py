"""Independent reference computations used only by the tests.

Everything here is built from first principles (antiderivatives, dense
Riemann sums, adaptive quadrature) and deliberately avoids the package's
pairwise-summation and quadrature code paths, so tests can arbitrate them.
"""

import numpy as np
from scipy.integrate import quad

from agdiff.domain import wrap
from agdiff.state import unwrapped_positions


def brute_interaction_sums(state, kernel):
    """Plain double loop over K'(wrap(x_k - x_j)), j != k, skipping corners."""
    x = state.positions
    d = state.domain
    n = len(x)
    out = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for j in range(n):
            if j == k:
                continue
            w = wrap(x[k] - x[j], d)
            if w == -d.half:
                continue
            acc += float(kernel.eval_d1(w))
        out[k] = acc
    return out


def exact_convolution_kprime(state, kernel, x):
    """(K' * rho)(x) exactly for the piecewise-constant particle density.

    On each cell the integral of K'(wrap(x - y)) dy telescopes to
    K(wrap(x - a)) - K(wrap(x - b)); K composed with wrap is continuous
    (K is even), so no seam corrections appear.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = state.domain
    a = state.positions
    b = a + state.gaps()
    rho = state.densities()
    out = np.zeros(len(x))
    for j in range(state.n):
        out += rho[j] * (np.asarray(kernel.eval(wrap(x - a[j], d)))
                         - np.asarray(kernel.eval(wrap(x - b[j], d))))
    return out


def _antiderivative(kernel):
    amps, rates = kernel.exp_terms

    def P(z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        out = np.zeros_like(az)
        for a, r in zip(amps, rates):
            out += (a / r) * (1.0 - np.exp(-r * az))
        return np.sign(z) * out

    return P


def exact_convolution_k(state, kernel, x):
    """(K * rho)(x) exactly, via the odd antiderivative P of K.

    P(wrap(.)) jumps by -2 P(L/2) when the argument crosses the antipode,
    so each cell containing the antipode of x gets a correction.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = state.domain
    L = d.length
    P = _antiderivative(kernel)
    corr = 2.0 * float(P(d.half))
    a = state.positions
    g = state.gaps()
    rho = state.densities()
    out = np.zeros(len(x))
    anti = wrap(x + d.half, d)
    for j in range(state.n):
        term = np.asarray(P(wrap(x - a[j], d))) - np.asarray(P(wrap(x - a[j] - g[j], d)))
        arc_to_anti = np.mod(anti - a[j], L)
        inside = (arc_to_anti > 0.0) & (arc_to_anti < g[j])
        out += rho[j] * (term + corr * inside)
    return out


def exact_interaction_energy(state, kernel):
    """1/2 * double integral K(x-y) rho(x) rho(y), inner integral exact,
    outer by adaptive quadrature cell by cell."""
    rho = state.densities()
    a = state.positions
    g = state.gaps()
    total = 0.0
    for k in range(state.n):
        val, _ = quad(lambda s: float(exact_convolution_k(
            state, kernel, wrap(a[k] + s, state.domain))[0]),
            0.0, g[k], limit=400)
        total += rho[k] * val
    return 0.5 * total


def riemann_wasserstein1(sa, sb, points=100_000):
    """Mean of |X_a - X_b| over a dense mass grid, pseudo-inverses unwrapped."""
    cL = sa.domain.mass
    n = sa.n
    z = (np.arange(points) + 0.5) * cL / points
    ua = unwrapped_positions(sa)
    ub = unwrapped_positions(sb)
    ga, gb = sa.gaps(), sb.gaps()
    u = z * n / cL
    k = np.minimum(u.astype(int), n - 1)
    theta = u - k
    xa = ua[k] + theta * ga[k]
    xb = ub[k] + theta * gb[k]
    return float(np.mean(np.abs(xa - xb)))   # integral / c_L


def dense_pairwise_quadrature_energy(state, kernel, per_cell=2000):
    """Midpoint double-sum on a very fine equal-mass subdivision."""
    d = state.domain
    g = state.gaps()
    offs = (np.arange(per_cell) + 0.5) / per_cell
    pts = wrap((state.positions[:, None] + g[:, None] * offs[None, :]).ravel(), d)
    w = d.mass / (state.n * per_cell)
    total = 0.0
    for lo in range(0, len(pts), 512):
        hi = min(lo + 512, len(pts))
        diff = wrap(pts[lo:hi, None] - pts[None, :], d)
        total += float(np.sum(kernel.eval(diff)))
    return 0.5 * w * w * total
