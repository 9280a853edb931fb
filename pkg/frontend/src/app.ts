/**
 * Application controller: loads the schema, renders the form, submits
 * predictions (at most one in flight), and hosts the what-if panel.
 */

import { ApiClient, MethodCode, ServiceError } from './api.js';
import {
  acceptResponse,
  buildRecord,
  FieldParseError,
  FormState,
  initialState,
  setFieldValue,
} from './state.js';
import {
  renderBlockingError,
  renderFieldErrors,
  renderForm,
  renderResult,
} from './view.js';
import { renderWhatIf, WhatIfController, WhatIfOutcome } from './whatif.js';

export interface AppConfig {
  schemaId: string;
  popcharId: string;
  modelId: string;
}

export class App {
  state!: FormState;
  whatIf!: WhatIfController;
  private formRoot!: HTMLElement;
  private resultRoot!: HTMLElement;
  private whatIfRoot!: HTMLElement;
  private errorRoot!: HTMLElement;
  private inflight: AbortController | null = null;

  constructor(
    private client: ApiClient,
    private config: AppConfig,
  ) {}

  async mount(root: HTMLElement): Promise<void> {
    const doc = root.ownerDocument;
    root.textContent = '';
    this.formRoot = doc.createElement('div');
    this.formRoot.id = 'form-root';
    this.errorRoot = doc.createElement('div');
    this.errorRoot.id = 'error-root';
    this.resultRoot = doc.createElement('div');
    this.resultRoot.id = 'result-root';
    this.whatIfRoot = doc.createElement('div');
    this.whatIfRoot.id = 'whatif-root';
    const submit = doc.createElement('button');
    submit.id = 'submit';
    submit.textContent = 'Predict';
    submit.addEventListener('click', () => void this.submit());
    root.append(this.formRoot, submit, this.errorRoot, this.resultRoot, this.whatIfRoot);

    await this.loadSchema(root);
  }

  private async loadSchema(root: HTMLElement): Promise<void> {
    try {
      const schema = await this.client.getSchema(this.config.schemaId);
      this.state = initialState(schema, {
        schemaId: this.config.schemaId,
        popcharId: this.config.popcharId,
        modelId: this.config.modelId,
      });
      this.whatIf = new WhatIfController(
        this.client,
        this.state,
        (outcome) => this.renderWhatIfOutcome(outcome),
        (err) => this.showError(err),
      );
      renderForm(this.formRoot, schema, this.state, () => this.onEdit());
      renderResult(this.resultRoot, this.state);
    } catch (err) {
      renderBlockingError(root, (err as Error).message, () => void this.mount(root));
    }
  }

  private onEdit(): void {
    // edits invalidate the last response until refreshed
    renderResult(this.resultRoot, this.state);
  }

  async submit(): Promise<void> {
    this.errorRoot.textContent = '';
    let record;
    try {
      record = buildRecord(this.state);
    } catch (err) {
      if (err instanceof FieldParseError) {
        renderFieldErrors(this.formRoot, `'${err.fieldName}' ${err.message}`);
        return;
      }
      throw err;
    }

    this.inflight?.abort(); // at most one in-flight baseline request
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await this.client.predict(
        {
          model_id: this.state.modelId,
          popchar_id: this.state.popcharId,
          schema_id: this.state.schemaId,
          method: this.state.method,
          record,
        },
        controller.signal,
      );
      acceptResponse(this.state, response);
      this.whatIf.baselineChanged();
      this.whatIfRoot.textContent = '';
      renderResult(this.resultRoot, this.state);
    } catch (err) {
      if ((err as Error).name === 'AbortError') {
        return;
      }
      this.showError(err);
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
      }
    }
  }

  private renderWhatIfOutcome(outcome: WhatIfOutcome): void {
    renderWhatIf(this.whatIfRoot, outcome);
    const apply = this.whatIfRoot.ownerDocument.createElement('button');
    apply.className = 'whatif-apply';
    apply.textContent = 'Apply';
    apply.addEventListener('click', () => {
      // only now does the trial value enter the baseline form
      setFieldValue(this.state, outcome.field, outcome.trialRaw);
      const input = this.formRoot.querySelector<HTMLInputElement>(`#in-${outcome.field}`);
      if (input) {
        input.value = outcome.trialRaw;
      }
      const toggle = this.formRoot.querySelector<HTMLInputElement>(
        `.field[data-field="${outcome.field}"] .missing-toggle`,
      );
      if (toggle) {
        toggle.checked = false;
      }
      renderResult(this.resultRoot, this.state);
    });
    this.whatIfRoot.appendChild(apply);
  }

  private showError(err: unknown): void {
    if (err instanceof ServiceError && err.status === 422) {
      if (renderFieldErrors(this.formRoot, err.message)) {
        return;
      }
    }
    this.errorRoot.textContent = `error: ${(err as Error).message}`;
  }

  setMethodCode(method: MethodCode): void {
    this.state.method = method;
    this.state.stale = true;
    renderResult(this.resultRoot, this.state);
  }
}
