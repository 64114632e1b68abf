"""Pure-numpy implementations of the pairwise torus sums.

These mirror ``_speedups`` exactly (same seam conventions: K'(0) = 0 and
K' = 0 at the antipodal corner) but evaluate kernels directly on wrapped
difference matrices.  They serve as the import-time fallback when the
compiled extension is unavailable and as an independent cross-check of the
factorized arithmetic in tests and benchmarks.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

_BLOCK = 1024


def _wrap_diff(a, b, L):
    d = a[:, None] - b[None, :]
    half = 0.5 * L
    d = np.where(d >= half, d - L, d)
    d = np.where(d < -half, d + L, d)
    return d


def _expsum_kprime(w, L, amps, rates):
    """K'(w) on canonical w, with the corner values at 0 and -L/2 set to 0."""
    aw = np.abs(w)
    out = np.zeros_like(aw)
    for a, r in zip(amps, rates):
        out += a * r * np.exp(-r * aw)
    out *= -np.sign(w)
    return np.where(w == -0.5 * L, 0.0, out)


def _expsum_k(w, amps, rates):
    aw = np.abs(w)
    out = np.zeros_like(aw)
    for a, r in zip(amps, rates):
        out += a * np.exp(-r * aw)
    return out


def interaction_sums(x, L, amps, rates, num_threads=0):
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = np.zeros(n)
    if len(amps) == 0 or n == 0:
        return out
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        w = _wrap_diff(x[lo:hi], x, L)
        kp = _expsum_kprime(w, L, np.asarray(amps), np.asarray(rates))
        kp[np.arange(lo, hi) - lo, np.arange(lo, hi)] = 0.0
        out[lo:hi] = kp.sum(axis=1)
    return out


def convolve_kprime(targets, sources, weights, L, amps, rates, num_threads=0):
    targets = np.asarray(targets, dtype=float)
    sources = np.asarray(sources, dtype=float)
    weights = np.asarray(weights, dtype=float)
    out = np.zeros(len(targets))
    if len(amps) == 0 or len(targets) == 0 or len(sources) == 0:
        return out
    for lo in range(0, len(targets), _BLOCK):
        hi = min(lo + _BLOCK, len(targets))
        w = _wrap_diff(targets[lo:hi], sources, L)
        kp = _expsum_kprime(w, L, np.asarray(amps), np.asarray(rates))
        out[lo:hi] = kp @ weights
    return out


def weighted_pair_sum(points, weights, L, amps, rates, num_threads=0):
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(amps) == 0 or len(points) == 0:
        return 0.0
    total = 0.0
    for lo in range(0, len(points), _BLOCK):
        hi = min(lo + _BLOCK, len(points))
        w = _wrap_diff(points[lo:hi], points, L)
        kv = _expsum_k(w, np.asarray(amps), np.asarray(rates))
        total += float(weights[lo:hi] @ (kv @ weights))
    return total


def interaction_sums_generic(x, L, kprime, num_threads=0):
    """Same contract as interaction_sums for an arbitrary K' callable."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = np.zeros(n)
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        w = _wrap_diff(x[lo:hi], x, L)
        kp = np.asarray(kprime(w), dtype=float)
        kp = np.where((w == 0.0) | (w == -0.5 * L), 0.0, kp)
        out[lo:hi] = kp.sum(axis=1)
    return out


def convolve_kprime_generic(targets, sources, weights, L, kprime, num_threads=0):
    targets = np.asarray(targets, dtype=float)
    out = np.zeros(len(targets))
    sources = np.asarray(sources, dtype=float)
    weights = np.asarray(weights, dtype=float)
    for lo in range(0, len(targets), _BLOCK):
        hi = min(lo + _BLOCK, len(targets))
        w = _wrap_diff(targets[lo:hi], sources, L)
        kp = np.asarray(kprime(w), dtype=float)
        kp = np.where(w == -0.5 * L, 0.0, kp)
        out[lo:hi] = kp @ weights
    return out


def weighted_pair_sum_generic(points, weights, L, keval, num_threads=0):
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = 0.0
    for lo in range(0, len(points), _BLOCK):
        hi = min(lo + _BLOCK, len(points))
        w = _wrap_diff(points[lo:hi], points, L)
        kv = np.asarray(keval(w), dtype=float)
        total += float(weights[lo:hi] @ (kv @ weights))
    return total
