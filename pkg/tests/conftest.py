import numpy as np
import pytest

from rtimpute.schema import Dataset, Schema, Variable


def make_schema(n_predictors=2, n_aux=0, binary=()):
    """Schema with x1..xk predictors, a1..am auxiliaries, plus outcomes."""
    vars_ = []
    for i in range(1, n_predictors + 1):
        name = f"x{i}"
        kind = "binary" if name in binary else "continuous"
        vars_.append(Variable(name, kind, "predictor"))
    for i in range(1, n_aux + 1):
        name = f"a{i}"
        kind = "binary" if name in binary else "continuous"
        vars_.append(Variable(name, kind, "auxiliary"))
    vars_.append(Variable("time", "continuous", "outcome_time"))
    vars_.append(Variable("status", "binary", "outcome_status"))
    return Schema(vars_)


def make_dataset(columns: dict, row_prefix="r"):
    """Dataset from name -> values columns; time/status filled if absent."""
    names = list(columns)
    n = len(next(iter(columns.values())))
    if "time" not in columns:
        columns = dict(columns)
        columns["time"] = np.arange(1.0, n + 1.0)
        names.append("time")
    if "status" not in columns:
        columns["status"] = np.zeros(n)
        names.append("status")
    vars_ = []
    for name in names:
        vals = np.asarray(columns[name], dtype=float)
        if name == "time":
            vars_.append(Variable(name, "continuous", "outcome_time"))
        elif name == "status":
            vars_.append(Variable(name, "binary", "outcome_status"))
        else:
            kind = "binary" if set(np.unique(vals)) <= {0.0, 1.0} else "continuous"
            role = "auxiliary" if name.startswith("a") else "predictor"
            vars_.append(Variable(name, kind, role))
    schema = Schema(vars_)
    values = np.column_stack([np.asarray(columns[v.name], dtype=float) for v in vars_])
    return Dataset(schema, values, [f"{row_prefix}{i}" for i in range(n)])


def random_psd(rng, p, jitter=0.1):
    """Random PSD covariance AA^T + jitter * I."""
    a = rng.normal(size=(p, p))
    return a @ a.T + jitter * np.eye(p)


def survival_dataset(rng, n, beta, censor_max=2.0):
    """Exponential PH data over continuous predictors x1..xp."""
    p = len(beta)
    x = rng.normal(size=(n, p))
    t = rng.exponential(1.0 / np.exp(x @ np.asarray(beta)))
    c = rng.uniform(0.0, censor_max, n)
    time = np.maximum(np.minimum(t, c), 1e-9)
    status = (t <= c).astype(float)
    cols = {f"x{i + 1}": x[:, i] for i in range(p)}
    cols["time"] = time
    cols["status"] = status
    return make_dataset(cols)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
