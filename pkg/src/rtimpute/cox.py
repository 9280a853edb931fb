"""Cox proportional-hazards model: fitting, linear predictor, Breslow
baseline hazard, expected events, and absolute risk at a horizon."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import (
    EmptyBaseline,
    FormatError,
    MissingPredictor,
    MonotoneLikelihood,
    NoEvents,
    NonConvergence,
    PredictorMismatch,
)
from .population import _atomic_write_text
from .schema import Dataset, Schema

MAX_ITER = 50
SCORE_TOL = 1e-9
LOGLIK_RTOL = 1e-12
#: A coefficient wandering past this magnitude signals a monotone likelihood.
BETA_BOUND = 50.0
#: At convergence the residual Newton step must be negligible; a step that
#: stays O(1) means the likelihood is still rising along that coordinate.
RESIDUAL_STEP_TOL = 1e-2


@dataclass(frozen=True)
class CoxModel:
    """Coefficients plus the uncentered Breslow cumulative baseline hazard."""

    predictors: tuple
    beta: np.ndarray
    baseline_times: np.ndarray
    baseline_hazard: np.ndarray
    trained_on_n: int
    converged: bool

    def __post_init__(self):
        object.__setattr__(self, "predictors", tuple(self.predictors))
        beta = np.asarray(self.beta, dtype=float)
        times = np.asarray(self.baseline_times, dtype=float)
        h0 = np.asarray(self.baseline_hazard, dtype=float)
        if beta.shape != (len(self.predictors),):
            raise FormatError("beta length must equal the number of predictors")
        if times.shape != h0.shape or times.ndim != 1:
            raise FormatError("baseline must pair times with hazards")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise FormatError("baseline times must be strictly increasing")
            if np.any(h0 < 0) or np.any(np.diff(h0) < 0):
                raise FormatError("baseline hazard must be nonnegative and nondecreasing")
        for a in (beta, times, h0):
            a.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "baseline_times", times)
        object.__setattr__(self, "baseline_hazard", h0)

    def cumulative_hazard(self, t: float) -> float:
        """Right-continuous step lookup of H0; zero before the first event."""
        i = int(np.searchsorted(self.baseline_times, t, side="right"))
        return float(self.baseline_hazard[i - 1]) if i > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "predictors": list(self.predictors),
            "beta": [float(b) for b in self.beta],
            "baseline": [
                [float(t), float(h)]
                for t, h in zip(self.baseline_times, self.baseline_hazard)
            ],
            "trained_on_n": int(self.trained_on_n),
            "converged": bool(self.converged),
        }


@dataclass(frozen=True)
class RiskPrediction:
    lp: float
    expected_events: float
    risk_10y: float


def fit_cox(data: Dataset, predictors: Sequence[str]) -> CoxModel:
    """Maximize the Breslow partial likelihood by Newton-Raphson.

    Starts from beta = 0 with step-halving; converges when the score
    max-norm drops below 1e-9 or the relative log-likelihood change below
    1e-12. The baseline hazard is the uncentered Breslow estimator at the
    event times.
    """
    predictors = list(predictors)
    x = data.matrix(predictors)
    time = data.times
    status = data.statuses
    n, p = x.shape

    if status.sum() < 1:
        raise NoEvents("survival data contains no events")
    spans = np.ptp(x, axis=0)
    for j, span in enumerate(spans):
        if span == 0.0:
            raise NonConvergence(
                f"predictor {predictors[j]!r} has zero variance; no information to fit"
            )

    order = np.argsort(time, kind="stable")
    x = np.ascontiguousarray(x[order])
    time = np.ascontiguousarray(time[order])
    status = np.ascontiguousarray(status[order])

    beta = np.zeros(p)
    loglik, score, info = _kernels.cox_quantities(x, time, status, beta)

    converged = False
    for _ in range(MAX_ITER):
        if np.max(np.abs(score)) < SCORE_TOL:
            converged = True
            break
        try:
            delta = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise NonConvergence("singular information matrix") from None

        step = 1.0
        accepted = False
        for _ in range(60):
            cand = beta + step * delta
            ll_new, score_new, info_new = _kernels.cox_quantities(x, time, status, cand)
            if np.isfinite(ll_new) and ll_new >= loglik:
                accepted = True
                break
            step /= 2.0
        if not accepted:
            # no ascent direction left at double precision
            converged = np.max(np.abs(score)) < 1e-8
            break

        rel_change = abs(ll_new - loglik) / (abs(loglik) + 1.0)
        beta, loglik, score, info = cand, ll_new, score_new, info_new
        if np.any(np.abs(beta) > BETA_BOUND):
            raise MonotoneLikelihood(
                "a coefficient diverged past |beta| > 50; partial likelihood is monotone"
            )
        if rel_change < LOGLIK_RTOL:
            converged = True
            break

    if not converged:
        raise NonConvergence(f"Newton-Raphson exhausted {MAX_ITER} iterations")

    # A score below tolerance does not guarantee an interior optimum: with
    # separation the score and curvature decay together and the Newton
    # increment never shrinks. Flag that as a monotone likelihood too.
    try:
        residual = np.linalg.solve(info, score)
    except np.linalg.LinAlgError:
        residual = np.full(p, np.inf)
    if np.any(np.abs(residual) > RESIDUAL_STEP_TOL * (1.0 + np.abs(beta))):
        raise MonotoneLikelihood(
            "likelihood converged with a non-vanishing Newton step; "
            "a coefficient is diverging to infinity"
        )

    eta = x @ beta
    times, h0 = _kernels.breslow_baseline(eta, time, status)
    return CoxModel(tuple(predictors), beta, times, h0, trained_on_n=n, converged=True)


def linear_predictor(model: CoxModel, completed: Mapping) -> float:
    """Uncentered weighted sum of the model predictors."""
    total = 0.0
    for name, b in zip(model.predictors, model.beta):
        if name not in completed:
            raise MissingPredictor(f"completed record lacks predictor {name!r}")
        total += float(b) * float(completed[name])
    return total


def expected_events(model: CoxModel, completed: Mapping, followup_days: float) -> float:
    """Expected event count H0(followup) * exp(lp) at the patient's follow-up."""
    if followup_days < 0:
        raise ValueError("follow-up must be nonnegative")
    lp = linear_predictor(model, completed)
    return model.cumulative_hazard(followup_days) * float(np.exp(lp))


def absolute_risk(model: CoxModel, lp: float, horizon_days: float = 3650.0) -> float:
    """Absolute event risk by the baseline time nearest the horizon.

    Ties in |t - horizon| break toward the earlier time.
    """
    if model.baseline_times.size == 0:
        raise EmptyBaseline("model has no baseline hazard steps")
    i = int(np.argmin(np.abs(model.baseline_times - horizon_days)))
    h0 = float(model.baseline_hazard[i])
    return float(-np.expm1(-h0 * np.exp(lp)))


def ten_year_risk(model: CoxModel, lp: float) -> float:
    """1 - S0(t*)^exp(lp) with t* the baseline time nearest 3650 days."""
    return absolute_risk(model, lp, 3650.0)


def predict_risk(model: CoxModel, completed: Mapping,
                 followup_days: float = 3650.0) -> RiskPrediction:
    lp = linear_predictor(model, completed)
    return RiskPrediction(
        lp=lp,
        expected_events=expected_events(model, completed, followup_days),
        risk_10y=ten_year_risk(model, lp),
    )


def save_model(model: CoxModel, path) -> None:
    _atomic_write_text(path, json.dumps(model.to_dict(), indent=1))


def model_from_dict(doc, external: bool = False) -> CoxModel:
    try:
        predictors = tuple(str(p) for p in doc["predictors"])
        beta = np.asarray(doc["beta"], dtype=float)
        baseline = doc["baseline"]
        pairs = [(float(t), float(h)) for t, h in baseline]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model document: {exc}") from None
    if not np.all(np.isfinite(beta)):
        raise FormatError("model coefficients must be finite")
    times = np.array([t for t, _ in pairs])
    h0 = np.array([h for _, h in pairs])
    return CoxModel(
        predictors,
        beta,
        times,
        h0,
        trained_on_n=0 if external else int(doc.get("trained_on_n", 0)),
        converged=True if external else bool(doc.get("converged", True)),
    )


def load_model(path) -> CoxModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read model: {exc}") from None
    return model_from_dict(doc)


def load_external_model(path, schema: Schema | None = None) -> CoxModel:
    """Load a literature-style external model (trained_on_n marked 0).

    When a schema is supplied, every model predictor must be a
    predictor-role variable of that schema.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read model: {exc}") from None
    model = model_from_dict(doc, external=True)
    if schema is not None:
        allowed = set(schema.predictor_names)
        extra = [p for p in model.predictors if p not in allowed]
        if extra:
            raise PredictorMismatch(
                f"model predictors not in the active schema: {extra}"
            )
    return model
