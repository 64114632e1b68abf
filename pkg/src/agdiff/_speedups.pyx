# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled O(N^2) pairwise sums for exponential-sum kernels on a torus.

All positions are canonical representatives in [-L/2, L/2), so pairwise
differences lie in (-L, L) and one conditional fold recovers the canonical
difference.  Exponentials are factorized, exp(-r*|x-y|) = exp(-r*x)*exp(r*y)
(plus an exp(-r*L) factor on seam-crossing pairs), so the inner loop is
multiply-add only.  Each output entry is accumulated sequentially in
ascending source index, which makes results independent of the thread count.

Conventions: K'(0) = 0 and K' = 0 at the antipodal corner |z| = L/2 (the odd
extension of an even kernel at both of its corners).
"""

import numpy as np

cimport cython
from cython.parallel import prange
from libc.math cimport exp
from libc.stdlib cimport free, malloc

BACKEND = "compiled"


cdef inline void _fill_exp_tables(double* em, double* ep, const double* x,
                                  Py_ssize_t n, const double* rates,
                                  Py_ssize_t nt) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(nt):
        for j in range(n):
            em[i * n + j] = exp(-rates[i] * x[j])
            ep[i * n + j] = exp(rates[i] * x[j])


def interaction_sums(double[::1] x, double L, double[::1] amps,
                     double[::1] rates, int num_threads=0):
    """S[k] = sum_{j != k} K'(wrap(x[k] - x[j])) for K(z) = sum_i a_i e^{-r_i|z|}.

    Positions must be a rotation of a sorted canonical array (which every
    ordered particle configuration is).  Splitting the sum into the sources
    at most half a circle behind and ahead of each target,

        S[k] = sum_i c_i * (W+_i(k) - W-_i(k)),   c_i = a_i r_i,
        W-_i(k) = sum_{0 < arc(j->k) < L/2} exp(-r_i * arc(j->k)),

    each window sum obeys a multiplicative decay recurrence along the
    circularly sorted order, so the whole evaluation is O(N) per term with a
    fixed deterministic sweep order.  Sources exactly at the antipode fall
    outside both windows, matching the K' = 0 corner convention.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nt = amps.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if nt == 0 or n == 0:
        return out_arr

    # circular sort order: input is a rotation of a sorted array
    cdef Py_ssize_t r0 = 0, t
    for t in range(1, n):
        if x[t] < x[r0]:
            r0 = t

    # unwrapped positions in sweep order: u[t] = x[(r0+t) % n] (+L past seam)
    cdef double* u = <double*> malloc(n * sizeof(double))
    cdef double* w_behind = <double*> malloc(n * sizeof(double))
    cdef double* w_ahead = <double*> malloc(n * sizeof(double))
    if not (u and w_behind and w_ahead):
        free(u); free(w_behind); free(w_ahead)
        raise MemoryError()

    cdef Py_ssize_t i, j, k
    cdef double prev, ci
    try:
        # walking the indices circularly from the minimum gives the sorted order
        prev = -1e308
        for t in range(n):
            j = r0 + t
            if j >= n:
                j -= n
            u[t] = x[j]
            if u[t] <= prev:
                free(u); free(w_behind); free(w_ahead)
                raise ValueError("positions must be a rotation of a sorted array")
            prev = u[t]

        for i in range(nt):
            ci = amps[i] * rates[i]
            _halfwindow_sweep(u, n, L, rates[i], w_behind)
            _halfwindow_sweep_reversed(u, n, L, rates[i], w_ahead)
            for t in range(n):
                k = r0 + t
                if k >= n:
                    k -= n
                out[k] += ci * (w_ahead[t] - w_behind[t])
    finally:
        free(u); free(w_behind); free(w_ahead)
    return out_arr


cdef void _halfwindow_sweep(const double* u, Py_ssize_t n, double L, double r,
                            double* w_out) noexcept nogil:
    """w_out[t] = sum over s with 0 < arc(s -> t) < L/2 of exp(-r * arc).

    ``u`` is strictly increasing with span < L; arcs are circular distances
    measured backwards from target t.  Two laps around the circle: the first
    warms the running window, the second emits.
    """
    cdef Py_ssize_t t, lo, tmod, smod
    cdef double w = 0.0
    cdef double half = 0.5 * L
    cdef double pt, ps, prev_p, arc, delta
    lo = 0
    prev_p = u[0]
    # lap positions: p_t = u[t mod n] + L*(t // n), t = 0 .. 2n-1
    for t in range(2 * n):
        tmod = t - n if t >= n else t
        pt = u[tmod] + (L if t >= n else 0.0)
        if t > 0:
            delta = pt - prev_p
            w = (w + 1.0) * exp(-r * delta)
        prev_p = pt
        while lo < t:
            smod = lo - n if lo >= n else lo
            ps = u[smod] + (L if lo >= n else 0.0)
            arc = pt - ps
            if arc < half:
                break
            w = w - exp(-r * arc)
            lo += 1
        if w < 0.0:
            w = 0.0
        if t >= n:
            w_out[tmod] = w


cdef void _halfwindow_sweep_reversed(const double* u, Py_ssize_t n, double L,
                                     double r, double* w_out) noexcept nogil:
    """Forward-arc analogue: w_out[t] = sum over 0 < arc(t -> s) < L/2."""
    cdef Py_ssize_t t, lo, tmod, smod
    cdef double w = 0.0
    cdef double half = 0.5 * L
    cdef double pt, ps, prev_p, arc, delta
    # mirror the circle: v[t] = -u[n-1-t] is increasing; forward arcs on u
    # are backward arcs on v
    lo = 0
    prev_p = -u[n - 1]
    for t in range(2 * n):
        tmod = t - n if t >= n else t
        pt = -u[n - 1 - tmod] + (L if t >= n else 0.0)
        if t > 0:
            delta = pt - prev_p
            w = (w + 1.0) * exp(-r * delta)
        prev_p = pt
        while lo < t:
            smod = lo - n if lo >= n else lo
            ps = -u[n - 1 - smod] + (L if lo >= n else 0.0)
            arc = pt - ps
            if arc < half:
                break
            w = w - exp(-r * arc)
            lo += 1
        if w < 0.0:
            w = 0.0
        if t >= n:
            w_out[n - 1 - tmod] = w


def interaction_sums_direct(double[::1] x, double L, double[::1] amps,
                            double[::1] rates, int num_threads=0):
    """Direct O(N^2) evaluation of interaction_sums (reference path)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nt = amps.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if nt == 0 or n == 0:
        return out_arr

    cdef double* coef = <double*> malloc(nt * sizeof(double))
    cdef double* erl = <double*> malloc(nt * sizeof(double))
    cdef double* em = <double*> malloc(nt * n * sizeof(double))
    cdef double* ep = <double*> malloc(nt * n * sizeof(double))
    if not (coef and erl and em and ep):
        free(coef); free(erl); free(em); free(ep)
        raise MemoryError()

    cdef Py_ssize_t i, j, k
    cdef double half = 0.5 * L
    cdef double d, acc, term
    cdef int nth = num_threads if num_threads > 0 else 2
    try:
        for i in range(nt):
            coef[i] = amps[i] * rates[i]
            erl[i] = exp(-rates[i] * L)
        _fill_exp_tables(em, ep, &x[0], n, &rates[0], nt)

        for k in prange(n, nogil=True, schedule='static', num_threads=nth):
            acc = 0.0
            for j in range(n):
                if j == k:
                    continue
                d = x[k] - x[j]
                if d == half or d == -half or d == 0.0:
                    continue
                term = 0.0
                if d > 0.0:
                    if d < half:
                        for i in range(nt):
                            term = term - coef[i] * em[i * n + k] * ep[i * n + j]
                    else:
                        for i in range(nt):
                            term = term + coef[i] * erl[i] * ep[i * n + k] * em[i * n + j]
                else:
                    if d > -half:
                        for i in range(nt):
                            term = term + coef[i] * ep[i * n + k] * em[i * n + j]
                    else:
                        for i in range(nt):
                            term = term - coef[i] * erl[i] * em[i * n + k] * ep[i * n + j]
                acc = acc + term
            out[k] = acc
    finally:
        free(coef); free(erl); free(em); free(ep)
    return out_arr


def convolve_kprime(double[::1] targets, double[::1] sources, double[::1] weights,
                    double L, double[::1] amps, double[::1] rates,
                    int num_threads=0):
    """out[t] = sum_j weights[j] * K'(wrap(targets[t] - sources[j]))."""
    cdef Py_ssize_t nq = targets.shape[0]
    cdef Py_ssize_t ns = sources.shape[0]
    cdef Py_ssize_t nt = amps.shape[0]
    out_arr = np.zeros(nq, dtype=np.float64)
    cdef double[::1] out = out_arr
    if nt == 0 or nq == 0 or ns == 0:
        return out_arr

    cdef double* coef = <double*> malloc(nt * sizeof(double))
    cdef double* erl = <double*> malloc(nt * sizeof(double))
    cdef double* ems = <double*> malloc(nt * ns * sizeof(double))
    cdef double* eps = <double*> malloc(nt * ns * sizeof(double))
    cdef double* emq = <double*> malloc(nt * nq * sizeof(double))
    cdef double* epq = <double*> malloc(nt * nq * sizeof(double))
    if not (coef and erl and ems and eps and emq and epq):
        free(coef); free(erl); free(ems); free(eps); free(emq); free(epq)
        raise MemoryError()

    cdef Py_ssize_t i, j, t
    cdef double half = 0.5 * L
    cdef double d, acc, term
    cdef int nth = num_threads if num_threads > 0 else 2
    try:
        for i in range(nt):
            coef[i] = amps[i] * rates[i]
            erl[i] = exp(-rates[i] * L)
        _fill_exp_tables(ems, eps, &sources[0], ns, &rates[0], nt)
        _fill_exp_tables(emq, epq, &targets[0], nq, &rates[0], nt)

        for t in prange(nq, nogil=True, schedule='static', num_threads=nth):
            acc = 0.0
            for j in range(ns):
                d = targets[t] - sources[j]
                if d == half or d == -half or d == 0.0:
                    continue
                term = 0.0
                if d > 0.0:
                    if d < half:
                        for i in range(nt):
                            term = term - coef[i] * emq[i * nq + t] * eps[i * ns + j]
                    else:
                        for i in range(nt):
                            term = term + coef[i] * erl[i] * epq[i * nq + t] * ems[i * ns + j]
                else:
                    if d > -half:
                        for i in range(nt):
                            term = term + coef[i] * epq[i * nq + t] * ems[i * ns + j]
                    else:
                        for i in range(nt):
                            term = term - coef[i] * erl[i] * emq[i * nq + t] * eps[i * ns + j]
                acc = acc + weights[j] * term
            out[t] = acc
    finally:
        free(coef); free(erl); free(ems); free(eps); free(emq); free(epq)
    return out_arr


def weighted_pair_sum(double[::1] points, double[::1] weights, double L,
                      double[::1] amps, double[::1] rates, int num_threads=0):
    """sum_{p,q} w_p w_q K(wrap(points[p] - points[q])), diagonal included."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t nt = amps.shape[0]
    if nt == 0 or n == 0:
        return 0.0

    cdef double* erl = <double*> malloc(nt * sizeof(double))
    cdef double* em = <double*> malloc(nt * n * sizeof(double))
    cdef double* ep = <double*> malloc(nt * n * sizeof(double))
    row_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] row = row_arr
    if not (erl and em and ep):
        free(erl); free(em); free(ep)
        raise MemoryError()

    cdef Py_ssize_t i, j, p
    cdef double half = 0.5 * L
    cdef double d, acc, term, k0
    cdef int nth = num_threads if num_threads > 0 else 2
    try:
        k0 = 0.0
        for i in range(nt):
            erl[i] = exp(-rates[i] * L)
            k0 += amps[i]
        _fill_exp_tables(em, ep, &points[0], n, &rates[0], nt)

        for p in prange(n, nogil=True, schedule='static', num_threads=nth):
            acc = 0.0
            for j in range(n):
                d = points[p] - points[j]
                if d == 0.0:
                    acc = acc + weights[j] * k0
                    continue
                term = 0.0
                if d > 0.0:
                    if d < half:
                        for i in range(nt):
                            term = term + amps[i] * em[i * n + p] * ep[i * n + j]
                    else:
                        for i in range(nt):
                            term = term + amps[i] * erl[i] * ep[i * n + p] * em[i * n + j]
                else:
                    if d >= -half:
                        for i in range(nt):
                            term = term + amps[i] * ep[i * n + p] * em[i * n + j]
                    else:
                        for i in range(nt):
                            term = term + amps[i] * erl[i] * em[i * n + p] * ep[i * n + j]
                acc = acc + weights[j] * term
            row[p] = weights[p] * acc
    finally:
        free(erl); free(em); free(ep)
    cdef double total = 0.0
    for p in range(n):
        total += row[p]
    return total
