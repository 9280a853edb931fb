"""Real-time substitution of missing predictor values in a single record.

Three strategies over stored population characteristics (mu, sigma, n):

* mean imputation: each missing variable gets its population mean;
* joint imputation: the conditional expectation of the missing block given
  the observed block under a multivariate normal model;
* joint imputation with auxiliaries: the same conditioning, but the working
  variable set also includes observed characteristics outside the
  prediction model.

Single imputation returns the conditional mean (the most likely value, so
model predictions stay reproducible); multiple imputation draws from the
conditional distribution and is only allowed with at least 1000 draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidImputationCount, UnknownVariable
from .linalg import checked_cholesky, cho_solve
from .population import PopulationCharacteristics
from .schema import PatientRecord


class Method(Enum):
    M_IMP = 1
    JMI = 2
    JMI_AUX = 3

    @property
    def code(self) -> str:
        return self.name.lower()

    @classmethod
    def from_code(cls, code: str) -> "Method":
        table = {
            "m_imp": cls.M_IMP,
            "m": cls.M_IMP,
            "jmi": cls.JMI,
            "jmi_aux": cls.JMI_AUX,
            "jmiaux": cls.JMI_AUX,
        }
        try:
            return table[code.lower()]
        except KeyError:
            raise ValueError(f"unknown imputation method {code!r}") from None


class VariableSet(Enum):
    PREDICTORS_ONLY = "predictors_only"
    WITH_AUXILIARY = "with_auxiliary"


@dataclass(frozen=True)
class ImputationResult:
    """Completed record plus which values were imputed and how uncertain."""

    completed: dict
    imputed_names: tuple
    conditional_sd: dict
    method: Method


def conditional_normal(mu, sigma, dep, given, x_given):
    """Conditional mean and covariance of the `dep` block given `x_given`.

    Schur complement: mean_d + S_dg S_gg^-1 (x_g - mean_g) and
    S_dd - S_dg S_gg^-1 S_gd. Raises SingularGivenBlock when S_gg is
    numerically singular.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    dep = np.asarray(dep, dtype=int)
    given = np.asarray(given, dtype=int)
    x_given = np.asarray(x_given, dtype=float)

    if given.size == 0:
        return mu[dep].copy(), sigma[np.ix_(dep, dep)].copy()

    s_gg = sigma[np.ix_(given, given)]
    s_dg = sigma[np.ix_(dep, given)]
    chol = checked_cholesky(s_gg)
    solved = cho_solve(chol, np.column_stack([(x_given - mu[given]), s_dg.T]))
    cond_mean = mu[dep] + s_dg @ solved[:, 0]
    cond_cov = sigma[np.ix_(dep, dep)] - s_dg @ solved[:, 1:]
    cond_cov = (cond_cov + cond_cov.T) / 2.0
    return cond_mean, cond_cov


def _sd_from_cov_diag(diag) -> np.ndarray:
    # conditioning can leave tiny negative rounding residue on the diagonal
    return np.sqrt(np.maximum(np.asarray(diag, dtype=float), 0.0))


def impute_mean(record: PatientRecord, pc: PopulationCharacteristics) -> ImputationResult:
    """Replace every missing variable with its population mean."""
    missing = record.missing_names
    for name in missing:
        if name not in pc.variables:
            raise UnknownVariable(f"variable {name!r} absent from population characteristics")
    completed = {n: v for n, v in record.values.items() if v is not None}
    sds = {}
    for name in missing:
        i = pc.index_of(name)
        completed[name] = float(pc.mu[i])
        sds[name] = float(np.sqrt(max(pc.sigma[i, i], 0.0)))
    return ImputationResult(completed, tuple(missing), sds, Method.M_IMP)


def _working_set(record: PatientRecord, pc: PopulationCharacteristics,
                 variable_set: VariableSet) -> list:
    schema = record.schema
    if variable_set is VariableSet.PREDICTORS_ONLY:
        wanted = schema.predictor_names
    else:
        wanted = schema.covariate_names
    # an external pc may lack some auxiliaries; the working set silently
    # shrinks to the intersection, but a missing *predictor* it cannot
    # impute is an error
    working = [n for n in wanted if n in pc.variables]
    for name in record.missing_names:
        if name in schema.predictor_names and name not in pc.variables:
            raise UnknownVariable(
                f"missing predictor {name!r} absent from population characteristics"
            )
    return working


def impute_joint(
    record: PatientRecord,
    pc: PopulationCharacteristics,
    variable_set: VariableSet = VariableSet.PREDICTORS_ONLY,
) -> ImputationResult:
    """Impute missing working-set variables by their conditional expectation.

    All missing working-set variables (including missing auxiliaries under
    WITH_AUXILIARY) are imputed jointly; observed values pass through
    untouched.
    """
    method = Method.JMI if variable_set is VariableSet.PREDICTORS_ONLY else Method.JMI_AUX
    working = _working_set(record, pc, variable_set)
    sub = pc.restrict(working)

    dep = [i for i, n in enumerate(working) if record.values[n] is None]
    given = [i for i, n in enumerate(working) if record.values[n] is not None]

    completed = {n: v for n, v in record.values.items() if v is not None}
    if not dep:
        return ImputationResult(completed, (), {}, method)

    x_given = np.array([record.values[working[i]] for i in given], dtype=float)
    cond_mean, cond_cov = conditional_normal(sub.mu, sub.sigma, dep, given, x_given)
    sd = _sd_from_cov_diag(np.diag(cond_cov))

    imputed = tuple(working[i] for i in dep)
    sds = {}
    for k, name in enumerate(imputed):
        completed[name] = float(cond_mean[k])
        sds[name] = float(sd[k])
    return ImputationResult(completed, imputed, sds, method)


def impute_joint_multiple(
    record: PatientRecord,
    pc: PopulationCharacteristics,
    variable_set: VariableSet,
    n_imp: int,
    seed: int,
) -> list:
    """Single conditional-mean imputation, or >= 1000 draws from the
    conditional distribution.

    Few random draws give an unreliable empirical covariance, so counts
    strictly between 1 and 1000 are rejected.
    """
    if n_imp != 1 and n_imp < 1000:
        raise InvalidImputationCount(
            "use n_imp=1 (conditional mean) or at least 1000 random draws"
        )
    if n_imp == 1:
        return [dict(impute_joint(record, pc, variable_set).completed)]

    working = _working_set(record, pc, variable_set)
    sub = pc.restrict(working)
    dep = [i for i, n in enumerate(working) if record.values[n] is None]
    given = [i for i, n in enumerate(working) if record.values[n] is not None]
    observed = {n: v for n, v in record.values.items() if v is not None}
    if not dep:
        return [dict(observed) for _ in range(n_imp)]

    x_given = np.array([record.values[working[i]] for i in given], dtype=float)
    cond_mean, cond_cov = conditional_normal(sub.mu, sub.sigma, dep, given, x_given)

    rng = np.random.default_rng(seed)
    draws = rng.multivariate_normal(cond_mean, cond_cov, size=n_imp, method="eigh")
    out = []
    names = [working[i] for i in dep]
    for row in draws:
        completed = dict(observed)
        completed.update({n: float(v) for n, v in zip(names, row)})
        out.append(completed)
    return out
