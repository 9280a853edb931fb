"""Pure-numpy fallback for the hot kernels.

Semantics identical to the compiled backend in ``_core.pyx``; inputs must be
sorted by ascending time. Suffix cumulative sums give each tied-time group's
risk-set aggregates in one vectorized pass.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _group_starts(time: np.ndarray) -> np.ndarray:
    # index of the first row sharing each row's time (times ascending)
    return np.searchsorted(time, time, side="left")


def cox_quantities(x, time, status, beta):
    """Breslow partial log-likelihood, score and information at `beta`.

    Returns (loglik, score[p], info[p, p]); info is the negated Hessian.
    """
    x = np.asarray(x, dtype=float)
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n, p = x.shape

    eta = x @ beta
    w = np.exp(eta)
    wx = w[:, None] * x
    wxx = wx[:, :, None] * x[:, None, :]

    s0 = np.cumsum(w[::-1])[::-1]
    s1 = np.cumsum(wx[::-1], axis=0)[::-1]
    s2 = np.cumsum(wxx[::-1], axis=0)[::-1]

    g = _group_starts(time)
    ev = status == 1.0
    ge = g[ev]

    s0e = s0[ge]
    mean = s1[ge] / s0e[:, None]
    loglik = float(np.sum(eta[ev] - np.log(s0e)))
    score = np.sum(x[ev] - mean, axis=0)
    info = np.sum(
        s2[ge] / s0e[:, None, None] - mean[:, :, None] * mean[:, None, :], axis=0
    )
    return loglik, score, info


def breslow_baseline(eta, time, status):
    """Breslow cumulative baseline hazard at distinct event times.

    Returns (times[k], H0[k]) with H0 the cumulative sum of d_k / S0_k.
    """
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=float)
    w = np.exp(np.asarray(eta, dtype=float))
    s0 = np.cumsum(w[::-1])[::-1]
    g = _group_starts(time)

    ev = status == 1.0
    ev_times = time[ev]
    ev_s0 = s0[g[ev]]
    uniq, first = np.unique(ev_times, return_index=True)
    d = np.add.reduceat(np.ones_like(ev_times), first)
    s0_at = ev_s0[first]
    return uniq, np.cumsum(d / s0_at)


def concordance_counts(lp, time, status):
    """Count (concordant, tied_lp, comparable) pairs for Harrell's c.

    A pair is comparable when the earlier time belongs to an event and the
    times differ, or the times are equal with exactly one event; the event
    subject is concordant when its lp is strictly higher.
    """
    lp = np.asarray(lp, dtype=float)
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=np.int64)
    n = lp.shape[0]

    concordant = 0
    tied = 0
    comparable = 0
    for i in range(n - 1):
        tj = time[i + 1 :]
        sj = status[i + 1 :]
        lj = lp[i + 1 :]
        earlier_i = (time[i] < tj) & (status[i] == 1)
        earlier_j = (tj < time[i]) & (sj == 1)
        same = (time[i] == tj) & (status[i] + sj == 1)

        # lp of the event-side subject for tied times
        ev_lp = np.where(sj == 1, lj, lp[i])
        ce_lp = np.where(sj == 1, lp[i], lj)

        comparable += int(earlier_i.sum() + earlier_j.sum() + same.sum())
        concordant += int(
            (earlier_i & (lp[i] > lj)).sum()
            + (earlier_j & (lj > lp[i])).sum()
            + (same & (ev_lp > ce_lp)).sum()
        )
        tied += int(
            (earlier_i & (lp[i] == lj)).sum()
            + (earlier_j & (lj == lp[i])).sum()
            + (same & (ev_lp == ce_lp)).sum()
        )
    return concordant, tied, comparable
