"""HTTP JSON service for real-time imputation and risk prediction.

Stateless compute over a file-backed document store (schemas, population
characteristics, models, and one active binding). Patient records are never
persisted: requests carry the record, responses carry the completed values,
and only aggregate characteristics live on disk.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import cox as cox_mod
from .errors import (
    DimensionMismatch,
    FormatError,
    MissingPredictor,
    PredictorMismatch,
    RtImputeError,
    SingularGivenBlock,
    UnknownVariable,
)
from .imputation import Method, VariableSet, impute_joint, impute_mean
from .population import PopulationCharacteristics, _atomic_write_text
from .schema import PatientRecord, Schema

ENTITY_KINDS = ("schemas", "popchars", "models")


def _error_body(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


class DeploymentStore:
    """One JSON document per entity, atomic replace-on-write.

    Concurrent reads are unrestricted; writes are serialized per entity id.
    """

    def __init__(self, data_dir):
        self.root = Path(data_dir)
        for kind in ENTITY_KINDS:
            (self.root / kind).mkdir(parents=True, exist_ok=True)
        self._locks: dict = {}
        self._locks_guard = threading.Lock()

    def _lock(self, kind, entity_id):
        with self._locks_guard:
            return self._locks.setdefault((kind, entity_id), threading.Lock())

    def _path(self, kind, entity_id) -> Path:
        safe = str(entity_id)
        if not safe or any(ch in safe for ch in "/\\") or safe.startswith("."):
            raise FormatError(f"invalid entity id {safe!r}")
        return self.root / kind / f"{safe}.json"

    def put(self, kind, entity_id, doc: dict):
        with self._lock(kind, entity_id):
            _atomic_write_text(self._path(kind, entity_id), json.dumps(doc, indent=1))

    def get(self, kind, entity_id) -> Optional[dict]:
        path = self._path(kind, entity_id)
        if not path.exists():
            return None
        with open(path) as fh:
            return json.load(fh)

    def delete(self, kind, entity_id) -> bool:
        with self._lock(kind, entity_id):
            path = self._path(kind, entity_id)
            if not path.exists():
                return False
            os.unlink(path)
            return True

    def ids(self, kind) -> list:
        return sorted(p.stem for p in (self.root / kind).glob("*.json"))

    def get_binding(self) -> Optional[dict]:
        path = self.root / "binding.json"
        if not path.exists():
            return None
        with open(path) as fh:
            return json.load(fh)

    def put_binding(self, doc: dict):
        _atomic_write_text(self.root / "binding.json", json.dumps(doc, indent=1))


class ImputeRequest(BaseModel):
    schema_id: str
    popchar_id: str
    method: str
    record: dict


class PredictRequest(BaseModel):
    model_id: str
    popchar_id: str
    method: str
    record: dict
    horizon_days: float = 3650.0
    schema_id: Optional[str] = None


class BindingRequest(BaseModel):
    schema_id: str
    popchar_id: str
    model_id: str


def _load_schema(store, schema_id):
    doc = store.get("schemas", schema_id)
    if doc is None:
        return None
    return Schema.from_dict(doc)


def _run_imputation(schema: Schema, pc: PopulationCharacteristics, method: Method,
                    record_map: dict):
    record = PatientRecord.from_partial(schema, record_map)
    if method is Method.M_IMP:
        return impute_mean(record, pc)
    if method is Method.JMI:
        return impute_joint(record, pc, VariableSet.PREDICTORS_ONLY)
    return impute_joint(record, pc, VariableSet.WITH_AUXILIARY)


def create_app(data_dir) -> FastAPI:
    store = DeploymentStore(data_dir)
    app = FastAPI(title="rtimpute service")
    app.state.store = store
    # browser clients live on other origins; the service carries no
    # credentials or patient storage, so permissive CORS is safe here
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RtImputeError)
    async def _domain_error(request: Request, exc: RtImputeError):
        code = {
            UnknownVariable: "unknown_variable",
            SingularGivenBlock: "singular_given_block",
            MissingPredictor: "missing_predictor",
            PredictorMismatch: "predictor_mismatch",
            FormatError: "format_error",
            DimensionMismatch: "dimension_mismatch",
        }.get(type(exc), "domain_error")
        return JSONResponse(status_code=422, content=_error_body(code, str(exc)))

    def _not_found(kind, entity_id):
        return JSONResponse(
            status_code=404,
            content=_error_body("not_found", f"no {kind} entity {entity_id!r}"),
        )

    @app.get("/v1/healthz")
    def healthz():
        return {
            "status": "ok",
            "entities": {kind: len(store.ids(kind)) for kind in ENTITY_KINDS},
        }

    # --- entity CRUD -----------------------------------------------------

    def _validate_entity(kind, doc):
        if kind == "schemas":
            Schema.from_dict(doc)
        elif kind == "popchars":
            PopulationCharacteristics.from_dict(doc)
        else:
            cox_mod.model_from_dict(doc)

    def _bound_ids(kind):
        binding = store.get_binding()
        if not binding:
            return set()
        key = {"schemas": "schema_id", "popchars": "popchar_id", "models": "model_id"}[kind]
        return {binding.get(key)}

    for kind in ENTITY_KINDS:

        def make_routes(kind=kind):
            @app.put(f"/v1/{kind}/{{entity_id}}")
            async def put_entity(entity_id: str, request: Request):
                doc = await request.json()
                try:
                    _validate_entity(kind, doc)
                except (RtImputeError, ValueError, KeyError, TypeError) as exc:
                    return JSONResponse(
                        status_code=400,
                        content=_error_body("invalid_document", str(exc)),
                    )
                store.put(kind, entity_id, doc)
                return {"stored": entity_id}

            @app.get(f"/v1/{kind}/{{entity_id}}")
            def get_entity(entity_id: str):
                doc = store.get(kind, entity_id)
                if doc is None:
                    return _not_found(kind, entity_id)
                return doc

            @app.delete(f"/v1/{kind}/{{entity_id}}")
            def delete_entity(entity_id: str):
                if entity_id in _bound_ids(kind):
                    return JSONResponse(
                        status_code=409,
                        content=_error_body(
                            "bound_entity",
                            f"{kind} entity {entity_id!r} is referenced by the active binding",
                        ),
                    )
                if not store.delete(kind, entity_id):
                    return _not_found(kind, entity_id)
                return {"deleted": entity_id}

        make_routes()

    # --- binding ----------------------------------------------------------

    @app.put("/v1/binding")
    def put_binding(body: BindingRequest):
        schema = _load_schema(store, body.schema_id)
        if schema is None:
            return _not_found("schemas", body.schema_id)
        pc_doc = store.get("popchars", body.popchar_id)
        if pc_doc is None:
            return _not_found("popchars", body.popchar_id)
        model_doc = store.get("models", body.model_id)
        if model_doc is None:
            return _not_found("models", body.model_id)
        pc = PopulationCharacteristics.from_dict(pc_doc)
        model = cox_mod.model_from_dict(model_doc)
        uncovered = [p for p in model.predictors if p not in pc.variables]
        if uncovered:
            return JSONResponse(
                status_code=400,
                content=_error_body(
                    "binding_uncovered",
                    f"bound popchar lacks model predictors: {uncovered}",
                ),
            )
        store.put_binding(body.model_dump())
        return body.model_dump()

    @app.get("/v1/binding")
    def get_binding():
        binding = store.get_binding()
        if binding is None:
            return _not_found("binding", "active")
        return binding

    # --- compute ----------------------------------------------------------

    def _resolve_method(code: str) -> Method:
        try:
            return Method.from_code(code)
        except ValueError as exc:
            raise UnknownVariable(str(exc))  # mapped to 422 below

    @app.post("/v1/impute")
    def impute(body: ImputeRequest):
        schema = _load_schema(store, body.schema_id)
        if schema is None:
            return _not_found("schemas", body.schema_id)
        pc_doc = store.get("popchars", body.popchar_id)
        if pc_doc is None:
            return _not_found("popchars", body.popchar_id)
        try:
            method = Method.from_code(body.method)
        except ValueError as exc:
            return JSONResponse(status_code=422, content=_error_body("invalid_method", str(exc)))
        pc = PopulationCharacteristics.from_dict(pc_doc)
        result = _run_imputation(schema, pc, method, body.record)
        return {
            "completed": result.completed,
            "imputed_names": list(result.imputed_names),
            "conditional_sd": result.conditional_sd,
        }

    @app.post("/v1/predict")
    def predict(body: PredictRequest):
        schema_id = body.schema_id
        if schema_id is None:
            binding = store.get_binding()
            if binding is None:
                return JSONResponse(
                    status_code=422,
                    content=_error_body(
                        "no_schema", "no schema_id given and no active binding"
                    ),
                )
            schema_id = binding["schema_id"]
        schema = _load_schema(store, schema_id)
        if schema is None:
            return _not_found("schemas", schema_id)
        pc_doc = store.get("popchars", body.popchar_id)
        if pc_doc is None:
            return _not_found("popchars", body.popchar_id)
        model_doc = store.get("models", body.model_id)
        if model_doc is None:
            return _not_found("models", body.model_id)
        try:
            method = Method.from_code(body.method)
        except ValueError as exc:
            return JSONResponse(status_code=422, content=_error_body("invalid_method", str(exc)))

        pc = PopulationCharacteristics.from_dict(pc_doc)
        model = cox_mod.model_from_dict(model_doc)
        missing_preds = [p for p in model.predictors if p not in schema.predictor_names]
        if missing_preds:
            raise PredictorMismatch(
                f"model predictors not in schema: {missing_preds}"
            )
        result = _run_imputation(schema, pc, method, body.record)
        lp = cox_mod.linear_predictor(model, result.completed)
        risk = cox_mod.absolute_risk(model, lp, body.horizon_days)
        return {
            "lp": lp,
            "risk": risk,
            "imputed_names": list(result.imputed_names),
            "conditional_sd": result.conditional_sd,
            "completed": result.completed,
            "provenance": {"popchar_id": body.popchar_id, "popchar_n": pc.n},
        }

    return app
