/**
 * Typed client for the rtimpute service's /v1 endpoints.
 * The base URL is the single configuration point of the app.
 */

export type VariableKind = 'continuous' | 'binary';
export type VariableRole = 'predictor' | 'auxiliary' | 'outcome_time' | 'outcome_status';
export type MethodCode = 'm_imp' | 'jmi' | 'jmi_aux';

export interface VariableDoc {
  name: string;
  kind: VariableKind;
  role: VariableRole;
}

export interface SchemaDoc {
  variables: VariableDoc[];
}

/** Record values: number = observed, null = missing. */
export type RecordMap = Record<string, number | null>;

export interface PredictRequest {
  model_id: string;
  popchar_id: string;
  schema_id: string;
  method: MethodCode;
  record: RecordMap;
  horizon_days?: number;
}

export interface PredictResponse {
  lp: number;
  risk: number;
  imputed_names: string[];
  conditional_sd: Record<string, number>;
  completed: Record<string, number>;
  provenance: { popchar_id: string; popchar_n: number };
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ServiceError';
  }
}

async function parseError(resp: Response): Promise<ServiceError> {
  let code = 'http_error';
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = (await resp.json()) as { error?: { code?: string; message?: string } };
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the HTTP status text
  }
  return new ServiceError(resp.status, code, message);
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { 'content-type': 'application/json' },
      ...init,
    });
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  getSchema(id: string, signal?: AbortSignal): Promise<SchemaDoc> {
    return this.request<SchemaDoc>(`/v1/schemas/${encodeURIComponent(id)}`, { signal });
  }

  predict(req: PredictRequest, signal?: AbortSignal): Promise<PredictResponse> {
    return this.request<PredictResponse>('/v1/predict', {
      method: 'POST',
      body: JSON.stringify(req),
      signal,
    });
  }

  healthz(): Promise<{ status: string }> {
    return this.request<{ status: string }>('/v1/healthz');
  }
}
