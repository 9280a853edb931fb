/**
 * What-if exploration: a trial value for one field triggers a second
 * prediction rendered beside the baseline. The baseline form is never
 * touched until "apply". Calls are debounced (150 ms) and cancellable, and
 * a response that raced a newer baseline is dropped.
 */

import type { ApiClient, PredictResponse } from './api.js';
import { deltaPointsText, paintNumber, riskPercentText } from './format.js';
import { buildRecord, FormState } from './state.js';

export const WHAT_IF_DEBOUNCE_MS = 150;

export interface WhatIfOutcome {
  field: string;
  trialRaw: string;
  trialValue: number;
  baseline: PredictResponse;
  trial: PredictResponse;
  /** trial risk minus baseline risk, both straight from responses */
  delta: number;
}

export class WhatIfController {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;
  private baselineGeneration = 0;

  constructor(
    private client: ApiClient,
    private state: FormState,
    private onRender: (outcome: WhatIfOutcome) => void,
    private onError: (err: unknown) => void,
  ) {}

  /** Call when a new baseline response lands: stale what-ifs must not render. */
  baselineChanged(): void {
    this.baselineGeneration += 1;
    this.cancel();
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.inflight) {
      this.inflight.abort();
      this.inflight = null;
    }
  }

  /** Debounced trial prediction for one field. */
  propose(field: string, trialRaw: string): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(field, trialRaw);
    }, WHAT_IF_DEBOUNCE_MS);
  }

  private async fire(field: string, trialRaw: string): Promise<void> {
    const baseline = this.state.lastResponse;
    if (!baseline) {
      this.onError(new Error('no baseline prediction yet'));
      return;
    }
    const trialValue = Number(trialRaw);
    if (!Number.isFinite(trialValue)) {
      this.onError(new Error(`${field}: trial value is not a number`));
      return;
    }

    // trial record = baseline inputs with the one field observed at the
    // trial value; an imputed field is overridden for this call only
    const record = buildRecord(this.state);
    record[field] = trialValue;

    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const generation = this.baselineGeneration;
    try {
      const trial = await this.client.predict(
        {
          model_id: this.state.modelId,
          popchar_id: this.state.popcharId,
          schema_id: this.state.schemaId,
          method: this.state.method,
          record,
        },
        controller.signal,
      );
      if (generation !== this.baselineGeneration) {
        return; // baseline moved on while we were in flight
      }
      this.onRender({
        field,
        trialRaw,
        trialValue,
        baseline,
        trial,
        delta: trial.risk - baseline.risk,
      });
    } catch (err) {
      if ((err as Error).name === 'AbortError') {
        return;
      }
      this.onError(err); // baseline stays intact
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
      }
    }
  }
}

/** Side-by-side baseline vs trial risks with the delta in points. */
export function renderWhatIf(panel: HTMLElement, outcome: WhatIfOutcome): void {
  const doc = panel.ownerDocument;
  panel.textContent = '';
  panel.appendChild(
    Object.assign(doc.createElement('h3'), {
      textContent: `What if ${outcome.field} = ${outcome.trialRaw}?`,
    }),
  );

  const row = doc.createElement('div');
  row.className = 'whatif-row';

  const base = doc.createElement('span');
  base.className = 'whatif-baseline';
  paintNumber(base, 'risk', outcome.baseline.risk, riskPercentText(outcome.baseline.risk));
  const trial = doc.createElement('span');
  trial.className = 'whatif-trial';
  paintNumber(trial, 'risk', outcome.trial.risk, riskPercentText(outcome.trial.risk));
  const delta = doc.createElement('span');
  delta.className = 'whatif-delta';
  paintNumber(delta, 'risk-delta', outcome.delta, deltaPointsText(outcome.delta));

  row.append('baseline ', base, ' → trial ', trial, ' (', delta, ')');
  panel.appendChild(row);
}
