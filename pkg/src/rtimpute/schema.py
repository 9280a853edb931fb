"""Variable schemas, complete reference datasets, and single-patient records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UnknownVariable

KIND_CONTINUOUS = "continuous"
KIND_BINARY = "binary"
ROLE_PREDICTOR = "predictor"
ROLE_AUXILIARY = "auxiliary"
ROLE_OUTCOME_TIME = "outcome_time"
ROLE_OUTCOME_STATUS = "outcome_status"

_KINDS = (KIND_CONTINUOUS, KIND_BINARY)
_ROLES = (ROLE_PREDICTOR, ROLE_AUXILIARY, ROLE_OUTCOME_TIME, ROLE_OUTCOME_STATUS)

#: Marker for an unobserved value in a patient record.
MISSING = None


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    role: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.role not in _ROLES:
            raise ValueError(f"unknown variable role {self.role!r}")


class Schema:
    """Ordered variable list with exactly one outcome-time and one outcome-status."""

    def __init__(self, variables: Iterable[Variable]):
        self.variables = tuple(variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique within a schema")
        times = [v for v in self.variables if v.role == ROLE_OUTCOME_TIME]
        stats = [v for v in self.variables if v.role == ROLE_OUTCOME_STATUS]
        if len(times) != 1 or len(stats) != 1:
            raise ValueError("schema needs exactly one outcome_time and one outcome_status")
        self._by_name = {v.name: v for v in self.variables}
        self.time_name = times[0].name
        self.status_name = stats[0].name

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def predictor_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role == ROLE_PREDICTOR)

    @property
    def auxiliary_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role == ROLE_AUXILIARY)

    @property
    def covariate_names(self) -> tuple[str, ...]:
        """Predictors and auxiliaries, in schema order (never outcomes)."""
        return tuple(
            v.name
            for v in self.variables
            if v.role in (ROLE_PREDICTOR, ROLE_AUXILIARY)
        )

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownVariable(f"variable {name!r} not in schema") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, Schema) and self.variables == other.variables

    def __hash__(self):
        return hash(self.variables)

    def restrict(self, names: Sequence[str]) -> "Schema":
        """Sub-schema keeping only `names` (must keep the outcome pair)."""
        keep = set(names)
        return Schema(v for v in self.variables if v.name in keep)

    def to_dict(self) -> dict:
        return {
            "variables": [
                {"name": v.name, "kind": v.kind, "role": v.role}
                for v in self.variables
            ]
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Schema":
        return cls(
            Variable(v["name"], v["kind"], v["role"]) for v in doc["variables"]
        )


class Dataset:
    """Complete (no missing cells) rectangular data over a schema.

    Values are stored as an immutable float matrix in schema column order;
    binary variables are coded 0/1.
    """

    def __init__(self, schema: Schema, values, row_ids: Sequence[str]):
        self.schema = schema
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(schema.variables):
            raise ValueError("values must be an n x p matrix matching the schema")
        if arr.shape[0] != len(row_ids):
            raise ValueError("row_ids length must match row count")
        ids = tuple(str(r) for r in row_ids)
        if len(set(ids)) != len(ids):
            raise ValueError("row_ids must be unique")
        if not np.all(np.isfinite(arr)):
            raise ValueError("reference datasets must be complete and finite")
        self._col = {name: j for j, name in enumerate(schema.names)}
        if arr.shape[0]:
            t = arr[:, self._col[schema.time_name]]
            s = arr[:, self._col[schema.status_name]]
            if np.any(t <= 0):
                raise ValueError("outcome_time values must be > 0")
            if not np.all(np.isin(s, (0.0, 1.0))):
                raise ValueError("outcome_status values must be 0 or 1")
            for v in schema.variables:
                if v.kind == KIND_BINARY and not np.all(
                    np.isin(arr[:, self._col[v.name]], (0.0, 1.0))
                ):
                    raise ValueError(f"binary column {v.name!r} must contain only 0/1")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.values = arr
        self.row_ids = ids

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name not in self._col:
            raise UnknownVariable(f"no column {name!r} in dataset")
        return self.values[:, self._col[name]]

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names]) if names else np.empty((self.n, 0))

    @property
    def times(self) -> np.ndarray:
        return self.column(self.schema.time_name)

    @property
    def statuses(self) -> np.ndarray:
        return self.column(self.schema.status_name)

    def record(self, i: int) -> "PatientRecord":
        """Fully observed patient record (covariates only) for row i."""
        vals = {name: float(self.values[i, self._col[name]]) for name in self.schema.covariate_names}
        return PatientRecord(self.schema, vals)

    @classmethod
    def _subset_of_validated(cls, parent: "Dataset", values, row_ids) -> "Dataset":
        # row subsets of a validated dataset satisfy every row-wise invariant
        ds = cls.__new__(cls)
        ds.schema = parent.schema
        ds._col = parent._col
        arr = np.ascontiguousarray(values)
        arr.setflags(write=False)
        ds.values = arr
        ds.row_ids = tuple(row_ids)
        return ds

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset._subset_of_validated(
            self, self.values[idx], [self.row_ids[i] for i in idx]
        )

    def drop_row(self, i: int) -> "Dataset":
        keep = np.concatenate([np.arange(0, i), np.arange(i + 1, self.n)])
        return self.take(keep)

    def restrict_columns(self, names: Sequence[str]) -> "Dataset":
        sub = self.schema.restrict(names)
        return Dataset(sub, self.matrix(sub.names), self.row_ids)


@dataclass
class PatientRecord:
    """Per-variable observed value or MISSING for one patient.

    Covers every predictor and auxiliary of the schema; outcome variables are
    deliberately not representable (imputation never consults them).
    """

    schema: Schema
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        cov = self.schema.covariate_names
        unknown = set(self.values) - set(cov)
        if unknown:
            raise UnknownVariable(f"record keys not in schema: {sorted(unknown)}")
        full = {}
        for name in cov:
            v = self.values.get(name, MISSING)
            if v is not None:
                v = float(v)
                if not math.isfinite(v):
                    raise ValueError(f"non-finite value for {name!r}")
            full[name] = v
        self.values = full

    @classmethod
    def from_partial(cls, schema: Schema, mapping: Mapping) -> "PatientRecord":
        """Build a record treating absent keys as MISSING."""
        return cls(schema, dict(mapping))

    @property
    def missing_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.schema.covariate_names if self.values[n] is None)

    @property
    def observed_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.schema.covariate_names if self.values[n] is not None)

    def with_missing(self, names: Sequence[str]) -> "PatientRecord":
        vals = dict(self.values)
        for n in names:
            if n not in vals:
                raise UnknownVariable(f"variable {n!r} not in schema covariates")
            vals[n] = MISSING
        return PatientRecord(self.schema, vals)
