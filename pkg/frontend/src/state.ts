/**
 * Form state: one entry per predictor/auxiliary with a raw input string and
 * a missing toggle, plus the method and binding selections and the last
 * service response. Any edit marks the response stale until resubmitted.
 */

import type { MethodCode, PredictResponse, RecordMap, SchemaDoc, VariableDoc } from './api.js';

export interface FieldState {
  raw: string;
  missing: boolean;
}

export interface FormState {
  schema: SchemaDoc;
  fields: Map<string, FieldState>;
  method: MethodCode;
  modelId: string;
  popcharId: string;
  schemaId: string;
  lastResponse: PredictResponse | null;
  stale: boolean;
}

export function covariates(schema: SchemaDoc): VariableDoc[] {
  return schema.variables.filter((v) => v.role === 'predictor' || v.role === 'auxiliary');
}

export function predictors(schema: SchemaDoc): VariableDoc[] {
  return schema.variables.filter((v) => v.role === 'predictor');
}

export function auxiliaries(schema: SchemaDoc): VariableDoc[] {
  return schema.variables.filter((v) => v.role === 'auxiliary');
}

export function initialState(
  schema: SchemaDoc,
  ids: { modelId: string; popcharId: string; schemaId: string },
): FormState {
  const fields = new Map<string, FieldState>();
  for (const v of covariates(schema)) {
    fields.set(v.name, { raw: '', missing: true });
  }
  return {
    schema,
    fields,
    method: 'jmi_aux',
    ...ids,
    lastResponse: null,
    stale: false,
  };
}

function field(state: FormState, name: string): FieldState {
  const f = state.fields.get(name);
  if (!f) {
    throw new Error(`unknown field ${name}`);
  }
  return f;
}

/** Any edit invalidates the previous response until the next submit. */
export function setFieldValue(state: FormState, name: string, raw: string): void {
  const f = field(state, name);
  f.raw = raw;
  f.missing = raw.trim() === '';
  state.stale = true;
}

export function setMissing(state: FormState, name: string, missing: boolean): void {
  const f = field(state, name);
  f.missing = missing;
  if (missing) {
    f.raw = '';
  }
  state.stale = true;
}

export function setMethod(state: FormState, method: MethodCode): void {
  state.method = method;
  state.stale = true;
}

export class FieldParseError extends Error {
  constructor(
    public fieldName: string,
    message: string,
  ) {
    super(message);
    this.name = 'FieldParseError';
  }
}

function parseField(v: VariableDoc, raw: string): number {
  if (v.kind === 'binary') {
    const t = raw.trim().toLowerCase();
    if (t === 'yes' || t === '1') return 1;
    if (t === 'no' || t === '0') return 0;
    throw new FieldParseError(v.name, `${v.name}: binary fields accept only yes/no`);
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new FieldParseError(v.name, `${v.name}: not a number`);
  }
  return value;
}

/** Record for the service: observed values parsed, missing fields null. */
export function buildRecord(state: FormState): RecordMap {
  const record: RecordMap = {};
  for (const v of covariates(state.schema)) {
    const f = field(state, v.name);
    record[v.name] = f.missing ? null : parseField(v, f.raw);
  }
  return record;
}

export function acceptResponse(state: FormState, response: PredictResponse): void {
  state.lastResponse = response;
  state.stale = false;
}
