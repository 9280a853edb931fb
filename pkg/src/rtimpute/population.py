"""Estimation, pooling, and persistence of population characteristics.

A PopulationCharacteristics bundle (variable names, mean vector, covariance
matrix, source sample size) is the entire knowledge an imputer needs.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    FormatError,
    MissingCell,
    OutcomeIncluded,
    ParseError,
    SampleTooLarge,
    SchemaMismatch,
    UnknownColumn,
    ZeroVariance,
)
from .linalg import min_semidefinite_pivot
from .schema import (
    KIND_BINARY,
    ROLE_OUTCOME_STATUS,
    ROLE_OUTCOME_TIME,
    Dataset,
    Schema,
)

PERSISTENCE_VERSION = 1

#: Covariance must be symmetric to this absolute tolerance after estimation.
SYMMETRY_ATOL = 1e-12
#: Elimination pivots may not fall below this (PSD up to rounding).
PSD_PIVOT_FLOOR = -1e-10


@dataclass(frozen=True)
class PopulationCharacteristics:
    """Means and covariances of a variable set, with the source sample size."""

    variables: tuple
    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        p = len(self.variables)
        if mu.shape != (p,) or sigma.shape != (p, p):
            raise DimensionMismatch(
                f"mu {mu.shape} / sigma {sigma.shape} do not match {p} variables"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise FormatError("population characteristics must be finite")
        if np.max(np.abs(sigma - sigma.T), initial=0.0) > SYMMETRY_ATOL:
            raise FormatError(f"sigma must be symmetric within {SYMMETRY_ATOL:g}")
        if p and min_semidefinite_pivot(sigma) < PSD_PIVOT_FLOOR:
            raise FormatError("sigma is not positive semidefinite")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    def index_of(self, name: str) -> int:
        return self.variables.index(name)

    def restrict(self, names: Sequence[str]) -> "PopulationCharacteristics":
        # principal submatrices inherit symmetry and PSD: skip re-validation
        idx = [self.variables.index(n) for n in names]
        sub = object.__new__(PopulationCharacteristics)
        object.__setattr__(sub, "variables", tuple(names))
        object.__setattr__(sub, "mu", self.mu[idx])
        object.__setattr__(sub, "sigma", self.sigma[np.ix_(idx, idx)])
        object.__setattr__(sub, "n", self.n)
        return sub

    def to_dict(self) -> dict:
        return {
            "version": PERSISTENCE_VERSION,
            "variables": list(self.variables),
            "mu": [float(v) for v in self.mu],
            "sigma": [float(v) for v in self.sigma.ravel(order="C")],
            "n": int(self.n),
        }

    @classmethod
    def from_dict(cls, doc) -> "PopulationCharacteristics":
        try:
            variables = tuple(str(v) for v in doc["variables"])
            mu = np.asarray(doc["mu"], dtype=float)
            flat = np.asarray(doc["sigma"], dtype=float)
            n = int(doc["n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed population characteristics: {exc}") from None
        p = len(variables)
        if flat.ndim == 2:
            sigma = flat
        else:
            if flat.size != p * p:
                raise DimensionMismatch(
                    f"sigma has {flat.size} entries; expected {p}x{p}"
                )
            sigma = flat.reshape(p, p)
        if mu.shape != (p,) or sigma.shape != (p, p):
            raise DimensionMismatch(
                f"mu {mu.shape} / sigma {sigma.shape} do not match {p} variables"
            )
        return cls(variables, mu, sigma, n)


def estimate_characteristics(
    data: Dataset, variables: Sequence[str]
) -> PopulationCharacteristics:
    """Column means and unbiased (n-1 divisor) covariance of `variables`."""
    variables = list(variables)
    for name in variables:
        role = data.schema[name].role
        if role in (ROLE_OUTCOME_TIME, ROLE_OUTCOME_STATUS):
            raise OutcomeIncluded(
                f"outcome variable {name!r} may not enter population characteristics"
            )
    if data.n < 2:
        raise ValueError("need at least two rows for an unbiased covariance")
    x = data.matrix(variables)
    spans = np.ptp(x, axis=0)
    for j, span in enumerate(spans):
        if span == 0.0:
            raise ZeroVariance(f"column {variables[j]!r} is constant")
    mu = x.mean(axis=0)
    sigma = np.cov(x, rowvar=False, ddof=1)
    sigma = np.atleast_2d(sigma)
    sigma = (sigma + sigma.T) / 2.0
    return PopulationCharacteristics(tuple(variables), mu, sigma, data.n)


def pool_datasets(external: Dataset, local_sample: Dataset) -> Dataset:
    """Stack two datasets over their common columns, external rows first."""
    common = [n for n in external.schema.names if n in local_sample.schema]
    predictors = [n for n in common if external.schema[n].role == "predictor"]
    if not predictors:
        raise SchemaMismatch("datasets share no predictor columns")
    for name in common:
        a, b = external.schema[name], local_sample.schema[name]
        if (a.kind, a.role) != (b.kind, b.role):
            raise SchemaMismatch(f"column {name!r} has conflicting kind/role")
    schema = external.schema.restrict(common)
    values = np.vstack([external.matrix(schema.names), local_sample.matrix(schema.names)])
    return Dataset(schema, values, list(external.row_ids) + list(local_sample.row_ids))


def draw_local_sample(data: Dataset, m: int, seed: int) -> tuple[Dataset, Dataset]:
    """Draw m rows without replacement; returns (sample, remainder).

    Both parts keep the original row order, so the split is deterministic
    for a fixed seed.
    """
    if m <= 0:
        raise ValueError("sample size must be positive")
    if m >= data.n:
        raise SampleTooLarge(f"sample size {m} >= dataset size {data.n}")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(data.n, size=m, replace=False))
    mask = np.zeros(data.n, dtype=bool)
    mask[chosen] = True
    return data.take(np.flatnonzero(mask)), data.take(np.flatnonzero(~mask))


def _atomic_write_text(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_characteristics(pc: PopulationCharacteristics, path) -> None:
    _atomic_write_text(path, json.dumps(pc.to_dict(), indent=1))


def load_characteristics(path) -> PopulationCharacteristics:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read population characteristics: {exc}") from None
    if not isinstance(doc, dict):
        raise FormatError("population characteristics document must be an object")
    return PopulationCharacteristics.from_dict(doc)


def _parse_cell(raw: str, name: str, kind: str, row: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"row {row}, column {name!r}: cannot parse {raw!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"row {row}, column {name!r}: non-finite value")
    if kind == KIND_BINARY and value not in (0.0, 1.0):
        raise ParseError(f"row {row}, column {name!r}: binary value must be 0/1, got {raw!r}")
    return value


def ingest_csv(path, schema: Schema) -> Dataset:
    """Read a complete reference dataset from an RFC-4180 CSV with header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: header row required") from None
        known = set(schema.names)
        for col in header:
            if col not in known:
                raise UnknownColumn(f"column {col!r} not in schema")
        missing_cols = [n for n in schema.names if n not in header]
        if missing_cols:
            raise ParseError(f"header lacks schema columns: {missing_cols}")
        order = [header.index(n) for n in schema.names]
        kinds = [schema[n].kind for n in schema.names]

        rows = []
        for i, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise ParseError(f"row {i}: expected {len(header)} cells, got {len(rec)}")
            vals = []
            for j, name, kind in zip(order, schema.names, kinds):
                raw = rec[j].strip()
                if raw == "":
                    raise MissingCell(f"row {i}, column {name!r} is empty")
                vals.append(_parse_cell(raw, name, kind, i))
            rows.append(vals)
    values = np.asarray(rows, dtype=float).reshape(len(rows), len(schema.names))
    try:
        return Dataset(schema, values, [f"row-{i}" for i in range(1, len(rows) + 1)])
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def write_csv(data: Dataset, path) -> None:
    """Write a dataset as CSV (column order = schema order, full precision)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.schema.names)
        kinds = [v.kind for v in data.schema.variables]
        for i in range(data.n):
            writer.writerow(
                [
                    int(v) if kind == KIND_BINARY else repr(float(v))
                    for v, kind in zip(data.values[i], kinds)
                ]
            )
