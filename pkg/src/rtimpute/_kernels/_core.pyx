# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: Cox partial-likelihood quantities, Breslow baseline,
and concordance pair counting. Inputs must be sorted by ascending time;
semantics match the numpy fallback in ``pure.py`` exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

NAME = "cython"


def cox_quantities(object x_in, object time_in, object status_in, object beta_in):
    """Breslow partial log-likelihood, score and information at `beta`.

    Returns (loglik, score[p], info[p, p]); info is the negated Hessian.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] time = np.ascontiguousarray(time_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] status = np.ascontiguousarray(status_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] beta = np.ascontiguousarray(beta_in, dtype=np.float64)

    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t p = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] eta = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] score = np.zeros(p, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] info = np.zeros((p, p), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s1 = np.zeros(p, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s2 = np.zeros((p, p), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ev_x = np.zeros(p, dtype=np.float64)

    cdef double s0 = 0.0, loglik = 0.0, w, d_events = 0.0, ev_eta = 0.0, mj
    cdef Py_ssize_t i, j, k

    for i in range(n):
        w = 0.0
        for j in range(p):
            w += x[i, j] * beta[j]
        eta[i] = w

    # walk times descending; flush each tied-time group once fully accumulated
    i = n - 1
    while i >= 0:
        w = exp(eta[i])
        s0 += w
        for j in range(p):
            s1[j] += w * x[i, j]
            for k in range(p):
                s2[j, k] += w * x[i, j] * x[i, k]
        if status[i] == 1.0:
            d_events += 1.0
            ev_eta += eta[i]
            for j in range(p):
                ev_x[j] += x[i, j]
        if i == 0 or time[i - 1] != time[i]:
            if d_events > 0.0:
                loglik += ev_eta - d_events * log(s0)
                for j in range(p):
                    mj = s1[j] / s0
                    score[j] += ev_x[j] - d_events * mj
                    for k in range(p):
                        info[j, k] += d_events * (s2[j, k] / s0 - mj * (s1[k] / s0))
                d_events = 0.0
                ev_eta = 0.0
                for j in range(p):
                    ev_x[j] = 0.0
        i -= 1

    return loglik, score, info


def breslow_baseline(object eta_in, object time_in, object status_in):
    """Breslow cumulative baseline hazard at distinct event times."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] eta = np.ascontiguousarray(eta_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] time = np.ascontiguousarray(time_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] status = np.ascontiguousarray(status_in, dtype=np.float64)

    cdef Py_ssize_t n = eta.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t_out = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h_out = np.empty(n, dtype=np.float64)
    cdef double s0 = 0.0, d_events = 0.0
    cdef Py_ssize_t i, m = 0

    i = n - 1
    while i >= 0:
        s0 += exp(eta[i])
        if status[i] == 1.0:
            d_events += 1.0
        if i == 0 or time[i - 1] != time[i]:
            if d_events > 0.0:
                t_out[m] = time[i]
                h_out[m] = d_events / s0
                m += 1
                d_events = 0.0
        i -= 1

    times = t_out[:m][::-1].copy()
    return times, np.cumsum(h_out[:m][::-1])


def concordance_counts(object lp_in, object time_in, object status_in):
    """Count (concordant, tied_lp, comparable) pairs for Harrell's c."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lp = np.ascontiguousarray(lp_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] time = np.ascontiguousarray(time_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] status = np.ascontiguousarray(status_in, dtype=np.int64)

    cdef Py_ssize_t n = lp.shape[0]
    cdef long long concordant = 0, tied = 0, comparable = 0
    cdef Py_ssize_t i, j
    cdef double ev_lp, ce_lp

    for i in range(n - 1):
        for j in range(i + 1, n):
            if time[i] < time[j]:
                if status[i] != 1:
                    continue
                ev_lp = lp[i]
                ce_lp = lp[j]
            elif time[j] < time[i]:
                if status[j] != 1:
                    continue
                ev_lp = lp[j]
                ce_lp = lp[i]
            else:
                if status[i] + status[j] != 1:
                    continue
                if status[i] == 1:
                    ev_lp = lp[i]
                    ce_lp = lp[j]
                else:
                    ev_lp = lp[j]
                    ce_lp = lp[i]
            comparable += 1
            if ev_lp > ce_lp:
                concordant += 1
            elif ev_lp == ce_lp:
                tied += 1

    return int(concordant), int(tied), int(comparable)
