"""Prediction-model performance measures: MSE of the linear predictor,
concordance, Poisson-offset calibration (intercept and slope), E/O ratio,
Kaplan-Meier, grouped calibration, decision curves, and the membership
c-statistic for case-mix overlap."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from . import _kernels
from .errors import (
    AllZeroOutcomes,
    DegenerateLP,
    EmptyInput,
    EmptyThresholds,
    LengthMismatch,
    NoComparablePairs,
    NonConvergence,
    TooFewSubjects,
    ZeroExpected,
)
from .schema import Dataset

IRLS_MAX_ITER = 100
IRLS_DEVIANCE_RTOL = 1e-10
#: Offset regressions have O(1) coefficients; anything past this is separation.
IRLS_COEF_BOUND = 30.0

#: Decision-curve default grid (none is standard; 1%..50% by 1%).
DEFAULT_THRESHOLDS = tuple(np.round(np.arange(0.01, 0.501, 0.01), 2))


@dataclass(frozen=True)
class MetricsReport:
    """One row of a performance table (the eo field is E over O as computed)."""

    mse_lp: float
    c_index: float
    citl: float
    cal_slope: float
    eo: float
    n: int
    seq_eo: tuple | None = None

    def to_dict(self) -> dict:
        doc = {
            "mse_lp": self.mse_lp,
            "c_index": self.c_index,
            "citl": self.citl,
            "cal_slope": self.cal_slope,
            "eo": self.eo,
            "n": self.n,
        }
        if self.seq_eo is not None:
            doc["seq_eo"] = list(self.seq_eo)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class DecisionCurve:
    thresholds: tuple
    nb_model: tuple
    nb_all: tuple
    nb_none: tuple

    def to_csv_rows(self):
        yield ("threshold", "nb_model", "nb_all", "nb_none")
        for row in zip(self.thresholds, self.nb_model, self.nb_all, self.nb_none):
            yield tuple(repr(float(v)) for v in row)


@dataclass(frozen=True)
class GroupedCalibration:
    groups: tuple  # (mean_predicted_risk, km_observed_risk, n_group) per group
    horizon_days: float
    g: int

    def to_csv_rows(self):
        yield ("mean_predicted_risk", "km_observed_risk", "n_group")
        for pred, obs, n in self.groups:
            yield (repr(float(pred)), repr(float(obs)), str(int(n)))


def mse_lp(lp_ref: Sequence[float], lp_est: Sequence[float]) -> float:
    """Mean squared difference between reference and post-imputation lp."""
    a = np.asarray(lp_ref, dtype=float)
    b = np.asarray(lp_est, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"lp vectors differ in length: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise EmptyInput("mse_lp needs at least one pair")
    return float(np.mean((a - b) ** 2))


def concordance(lp, time, status) -> float:
    """Harrell's c over comparable pairs; lp ties count one half."""
    lp = np.asarray(lp, dtype=float)
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=np.int64)
    if not (lp.shape == time.shape == status.shape):
        raise LengthMismatch("lp, time, status must have equal lengths")
    conc, tied, comp = _kernels.concordance_counts(lp, time, status)
    if comp == 0:
        raise NoComparablePairs("no comparable pairs (no usable events)")
    return (conc + 0.5 * tied) / comp


def _irls(y, design, offset):
    """Poisson log-link IRLS with a fixed offset.

    Starts at intercept log(mean y + 1e-8), slopes 0; converges on relative
    deviance change below 1e-10. Steps are halved while the deviance
    worsens, so wide-ranging offsets cannot blow up the first iteration.
    """
    n, k = design.shape
    coef = np.zeros(k)
    coef[0] = np.log(np.mean(y) + 1e-8)

    def deviance(mu):
        # overflowed mu (inf) propagates to nan and the step gets rejected
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(y > 0, y * np.log(y / mu), 0.0)
            return 2.0 * float(np.sum(term - (y - mu)))

    mu = np.exp(design @ coef + offset)
    dev = deviance(mu)
    for _ in range(IRLS_MAX_ITER):
        w = mu
        z = design @ coef + (y - mu) / mu
        wd = design * w[:, None]
        try:
            target = np.linalg.solve(design.T @ wd, wd.T @ z)
        except np.linalg.LinAlgError:
            raise NonConvergence("singular IRLS system") from None
        delta = target - coef

        step = 1.0
        accepted = False
        for _ in range(40):
            cand = coef + step * delta
            with np.errstate(over="ignore"):
                mu_new = np.exp(design @ cand + offset)
            dev_new = deviance(mu_new)
            if np.isfinite(dev_new) and dev_new <= dev + 1e-12 * (abs(dev) + 1.0):
                accepted = True
                break
            step /= 2.0
        if not accepted:
            raise NonConvergence("IRLS found no descent step")
        if np.max(np.abs(cand)) > IRLS_COEF_BOUND:
            raise NonConvergence("IRLS diverged (separation or degenerate offset)")

        rel = abs(dev_new - dev) / (abs(dev) + 1.0)
        coef, dev, mu = cand, dev_new, mu_new
        if rel < IRLS_DEVIANCE_RTOL:
            # a flat deviance with a non-vanishing Newton step means the
            # optimum sits at infinity (separation), not convergence
            w = mu
            z = design @ coef + (y - mu) / mu
            wd = design * w[:, None]
            try:
                residual = np.linalg.solve(design.T @ wd, wd.T @ z) - coef
            except np.linalg.LinAlgError:
                raise NonConvergence("singular IRLS system at convergence") from None
            if np.max(np.abs(residual)) > 1e-2 * (1.0 + np.max(np.abs(coef))):
                raise NonConvergence("IRLS diverged (separation or degenerate offset)")
            # the residual is the next (tiny) Newton increment: applying it
            # polishes the estimate well past the deviance stopping rule
            return coef + residual
    raise NonConvergence(f"IRLS exhausted {IRLS_MAX_ITER} iterations")


def poisson_offset_glm(y, x, offset):
    """Poisson regression with log link and fixed offset.

    Returns (intercept, slope) where slope is None for an intercept-only
    fit (x is None).
    """
    y = np.asarray(y, dtype=float)
    offset = np.asarray(offset, dtype=float)
    if y.shape != offset.shape:
        raise LengthMismatch("y and offset must have equal lengths")
    if y.size == 0:
        raise EmptyInput("empty outcome vector")
    if not np.all(np.isfinite(offset)):
        raise ValueError("offset must be finite")
    if y.sum() == 0:
        raise AllZeroOutcomes("no events: Poisson intercept is -infinity")

    if x is None:
        design = np.ones((y.size, 1))
        coef = _irls(y, design, offset)
        return float(coef[0]), None
    x = np.asarray(x, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch("x and y must have equal lengths")
    # fit on the standardized regressor: the divergence bound then reads in
    # sd units, so a legitimately steep slope over a tiny lp spread (the
    # all-predictors-missing pathology) is not mistaken for separation
    scale = float(x.std())
    if scale == 0.0:
        raise ValueError("regressor has zero variance")
    design = np.column_stack([np.ones(y.size), x / scale])
    coef = _irls(y, design, offset)
    return float(coef[0]), float(coef[1] / scale)


def calibration_in_the_large(expected, status) -> float:
    """Intercept of the intercept-only Poisson regression of events with
    offset log(expected); equals log(sum status / sum expected), ideal 0."""
    expected = np.asarray(expected, dtype=float)
    status = np.asarray(status, dtype=float)
    if np.any(expected <= 0):
        raise ZeroExpected("expected event counts must be strictly positive")
    intercept, _ = poisson_offset_glm(status, None, np.log(expected))
    return intercept


def calibration_slope(lp, expected, status) -> float:
    """Coefficient of the centered lp in the Poisson-offset regression.

    The offset log(expected) - lp isolates the baseline part, so a slope of
    1 means predicted risks spread exactly as observed.
    """
    lp = np.asarray(lp, dtype=float)
    expected = np.asarray(expected, dtype=float)
    status = np.asarray(status, dtype=float)
    if np.any(expected <= 0):
        raise ZeroExpected("expected event counts must be strictly positive")
    if np.ptp(lp) == 0.0:
        raise DegenerateLP("linear predictor has zero variance; slope undefined")
    lp_c = lp - lp.mean()
    offset = np.log(expected) - lp
    _, slope = poisson_offset_glm(status, lp_c, offset)
    return float(slope)


def oe_ratio(expected, status) -> float:
    """Sum of expected over sum of observed events (E/O as coded)."""
    expected = np.asarray(expected, dtype=float)
    status = np.asarray(status, dtype=float)
    if status.sum() == 0:
        raise AllZeroOutcomes("no observed events")
    return float(expected.sum() / status.sum())


def grouped_eo(lp, expected, status, probs=(0.0, 1 / 3, 2 / 3, 1.0)) -> tuple:
    """E/O per centered-lp quantile group (optional report field)."""
    lp = np.asarray(lp, dtype=float)
    lp_c = lp - lp.mean()
    cuts = np.quantile(lp_c, probs)
    out = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        sel = (lp_c >= lo) & (lp_c <= hi) if hi == cuts[-1] else (lp_c >= lo) & (lp_c < hi)
        s = status[sel].sum()
        out.append(float(expected[sel].sum() / s) if s > 0 else float("nan"))
    return tuple(out)


def kaplan_meier(time, status, t_eval: float) -> float:
    """Product-limit survival estimate at t_eval."""
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=float)
    if time.size == 0:
        raise EmptyInput("no subjects")
    if t_eval < 0:
        raise ValueError("evaluation time must be nonnegative")
    order = np.argsort(time, kind="stable")
    time, status = time[order], status[order]
    surv = 1.0
    i = 0
    n = time.size
    while i < n and time[i] <= t_eval:
        t = time[i]
        at_risk = n - i
        d = 0
        while i < n and time[i] == t:
            d += int(status[i] == 1.0)
            i += 1
        if d:
            surv *= 1.0 - d / at_risk
    return float(surv)


def grouped_km_calibration(
    risk, time, status, g: int = 5, horizon_days: float = 3650.0
) -> GroupedCalibration:
    """Mean predicted risk vs 1 - KM(horizon) in g equal-size risk groups.

    Groups are formed by predicted risk with ties broken by input order, so
    the split is deterministic; group sizes differ by at most one.
    """
    risk = np.asarray(risk, dtype=float)
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=float)
    if g < 2:
        raise ValueError("need at least two groups")
    if risk.size < g:
        raise TooFewSubjects(f"{risk.size} subjects cannot fill {g} groups")
    order = np.argsort(risk, kind="stable")
    groups = []
    for chunk in np.array_split(order, g):
        pred = float(risk[chunk].mean())
        obs = 1.0 - kaplan_meier(time[chunk], status[chunk], horizon_days)
        groups.append((pred, float(obs), int(chunk.size)))
    return GroupedCalibration(tuple(groups), float(horizon_days), g)


def decision_curve(
    risk, time, status, thresholds=DEFAULT_THRESHOLDS, horizon_days: float = 3650.0
) -> DecisionCurve:
    """Net benefit of treat-by-risk vs treat-all vs treat-none.

    Observed event means an event on or before the horizon; subjects
    censored earlier count as non-events.
    """
    risk = np.asarray(risk, dtype=float)
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=float)
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds:
        raise EmptyThresholds("need at least one threshold")
    if any(not (0.0 < t < 1.0) for t in thresholds):
        raise ValueError("thresholds must lie strictly inside (0, 1)")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")

    event = (status == 1.0) & (time <= horizon_days)
    n = risk.size
    prevalence = event.sum() / n
    nb_model, nb_all = [], []
    for t in thresholds:
        odds = t / (1.0 - t)
        pos = risk >= t
        tp = np.count_nonzero(pos & event)
        fp = np.count_nonzero(pos & ~event)
        nb_model.append(tp / n - (fp / n) * odds)
        nb_all.append(prevalence - (1.0 - prevalence) * odds)
    return DecisionCurve(
        thresholds, tuple(nb_model), tuple(nb_all), tuple(0.0 for _ in thresholds)
    )


def _auc(score, label) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    ranks = rankdata(score)
    n1 = int(label.sum())
    n0 = label.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes")
    u = ranks[label == 1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


@dataclass(frozen=True)
class MembershipC:
    """Membership c-statistic: 0.5 = identical case-mix, 1 = disjoint."""

    c: float
    degenerate: bool = False


def membership_c(data_a: Dataset, data_b: Dataset, common_vars) -> MembershipC:
    """AUC of a logistic membership model over the stacked cohorts.

    Separation (non-overlapping case-mix) is reported as c = 1 with the
    degeneracy flag rather than an error.
    """
    common_vars = list(common_vars)
    xa = data_a.matrix(common_vars)
    xb = data_b.matrix(common_vars)
    if xa.shape[0] + xb.shape[0] < 20:
        raise ValueError("membership c needs a combined n of at least 20")
    x = np.vstack([xa, xb])
    y = np.concatenate([np.zeros(xa.shape[0]), np.ones(xb.shape[0])])
    design = np.column_stack([np.ones(x.shape[0]), x])

    # standardized copy keeps IRLS well-conditioned; AUC is scale-invariant
    scale = x.std(axis=0, ddof=0)
    scale[scale == 0] = 1.0
    design[:, 1:] = (x - x.mean(axis=0)) / scale

    coef = np.zeros(design.shape[1])
    coef[0] = np.log(np.mean(y) + 1e-8)
    dev = np.inf
    for _ in range(IRLS_MAX_ITER):
        eta = design @ coef
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        if np.max(np.abs(coef)) > IRLS_COEF_BOUND or np.any(w < 1e-12):
            return MembershipC(1.0, degenerate=True)
        z = eta + (y - mu) / w
        wd = design * w[:, None]
        try:
            coef_new = np.linalg.solve(design.T @ wd, wd.T @ z)
        except np.linalg.LinAlgError:
            return MembershipC(1.0, degenerate=True)
        if not np.all(np.isfinite(coef_new)):
            return MembershipC(1.0, degenerate=True)
        with np.errstate(divide="ignore"):
            eta_new = design @ coef_new
            mu_new = 1.0 / (1.0 + np.exp(-eta_new))
            dev_new = -2.0 * float(
                np.sum(y * np.log(np.clip(mu_new, 1e-300, 1.0)))
                + np.sum((1 - y) * np.log(np.clip(1 - mu_new, 1e-300, 1.0)))
            )
        rel = abs(dev_new - dev) / (abs(dev) + 1.0) if np.isfinite(dev) else 1.0
        coef, dev = coef_new, dev_new
        if rel < IRLS_DEVIANCE_RTOL:
            break
    eta = design @ coef
    if np.max(np.abs(coef[1:])) > IRLS_COEF_BOUND / 2:
        return MembershipC(1.0, degenerate=True)
    return MembershipC(_auc(eta, y), degenerate=False)
