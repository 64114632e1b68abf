"""Backend selection for the hot pairwise sums.

At import time the compiled extension (``agdiff._speedups``, Cython + OpenMP)
is preferred; the pure-numpy implementation is the fallback.  Selection can
be forced with AGDIFF_FORCE_NUMPY=1, and the worker count for the compiled
path is capped by AGDIFF_THREADS.

The compiled path factorizes exponentials, which is valid only while
exp(rate * L) stays comfortably inside double range; calls outside that
envelope are routed to the plain evaluation automatically.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pairwise_np

try:
    from . import _speedups
except ImportError:          # built without a compiler; numpy path only
    _speedups = None

# factorized exponentials need exp(+-rate*L) finite with headroom
_FACTORIZATION_LIMIT = 600.0


def compiled_available() -> bool:
    return _speedups is not None


def active_backend() -> str:
    if _forced_numpy() or _speedups is None:
        return "numpy"
    return "compiled"


def _forced_numpy() -> bool:
    return os.environ.get("AGDIFF_FORCE_NUMPY", "").strip() not in ("", "0")


def num_threads() -> int:
    cap = os.environ.get("AGDIFF_THREADS", "").strip()
    avail = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(int(cap), avail))
        except ValueError:
            pass
    return avail


def _route(L, rates):
    if _forced_numpy() or _speedups is None:
        return _pairwise_np
    if len(rates) and float(np.max(rates)) * L > _FACTORIZATION_LIMIT:
        return _pairwise_np
    return _speedups


def interaction_sums(x, L, amps, rates):
    """S[k] = sum_{j != k} K'(wrap(x[k] - x[j])).

    The compiled path uses the O(N) half-window sweep, which requires the
    positions to be a rotation of a sorted array (true for every ordered
    configuration); anything else falls back to the direct evaluation.
    """
    x = np.ascontiguousarray(x, dtype=float)
    amps = np.ascontiguousarray(amps, dtype=float)
    rates = np.ascontiguousarray(rates, dtype=float)
    impl = _route(L, rates)
    if impl is _speedups:
        try:
            return np.asarray(impl.interaction_sums(x, float(L), amps, rates,
                                                    num_threads()))
        except ValueError:
            return np.asarray(impl.interaction_sums_direct(
                x, float(L), amps, rates, num_threads()))
    return np.asarray(impl.interaction_sums(x, float(L), amps, rates, num_threads()))


def interaction_sums_direct(x, L, amps, rates):
    """Direct O(N^2) reference evaluation of interaction_sums."""
    x = np.ascontiguousarray(x, dtype=float)
    amps = np.ascontiguousarray(amps, dtype=float)
    rates = np.ascontiguousarray(rates, dtype=float)
    impl = _route(L, rates)
    if impl is _speedups:
        return np.asarray(impl.interaction_sums_direct(x, float(L), amps, rates,
                                                       num_threads()))
    return np.asarray(impl.interaction_sums(x, float(L), amps, rates, num_threads()))


def convolve_kprime(targets, sources, weights, L, amps, rates):
    """out[t] = sum_j w[j] * K'(wrap(targets[t] - sources[j]))."""
    targets = np.ascontiguousarray(targets, dtype=float)
    sources = np.ascontiguousarray(sources, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    amps = np.ascontiguousarray(amps, dtype=float)
    rates = np.ascontiguousarray(rates, dtype=float)
    impl = _route(L, rates)
    return np.asarray(impl.convolve_kprime(targets, sources, weights,
                                           float(L), amps, rates, num_threads()))


def weighted_pair_sum(points, weights, L, amps, rates):
    """sum_{p,q} w_p w_q K(wrap(points[p] - points[q])), diagonal included."""
    points = np.ascontiguousarray(points, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    amps = np.ascontiguousarray(amps, dtype=float)
    rates = np.ascontiguousarray(rates, dtype=float)
    impl = _route(L, rates)
    return float(impl.weighted_pair_sum(points, weights, float(L),
                                        amps, rates, num_threads()))


# generic (non exponential-sum) kernels always take the numpy matrix path
interaction_sums_generic = _pairwise_np.interaction_sums_generic
convolve_kprime_generic = _pairwise_np.convolve_kprime_generic
weighted_pair_sum_generic = _pairwise_np.weighted_pair_sum_generic
