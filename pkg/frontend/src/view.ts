/**
 * DOM rendering: the entry form (one control per predictor, each with a
 * missing switch; auxiliaries collapsible) and the result panel (risk, lp,
 * and per-imputed-field value +/- conditional SD with an "imputed" badge).
 */

import type { PredictResponse, SchemaDoc, VariableDoc } from './api.js';
import {
  lpText,
  paintNumber,
  riskPercentText,
  valueText,
  valueWithSdText,
} from './format.js';
import {
  auxiliaries,
  FormState,
  predictors,
  setFieldValue,
  setMethod,
  setMissing,
} from './state.js';

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function fieldControl(doc: Document, v: VariableDoc, state: FormState, onEdit: () => void) {
  const wrap = el(doc, 'div', 'field');
  wrap.dataset.field = v.name;

  const label = el(doc, 'label', 'field-name', v.name);
  label.htmlFor = `in-${v.name}`;
  wrap.appendChild(label);

  let input: HTMLInputElement | HTMLSelectElement;
  if (v.kind === 'binary') {
    const select = el(doc, 'select', 'field-input');
    for (const opt of ['yes', 'no']) {
      const o = el(doc, 'option', undefined, opt);
      o.value = opt;
      select.appendChild(o);
    }
    select.addEventListener('change', () => {
      setFieldValue(state, v.name, select.value);
      missing.checked = false;
      onEdit();
    });
    input = select;
  } else {
    const num = el(doc, 'input', 'field-input');
    num.type = 'number';
    num.step = 'any';
    num.addEventListener('input', () => {
      setFieldValue(state, v.name, num.value);
      missing.checked = num.value.trim() === '';
      onEdit();
    });
    input = num;
  }
  input.id = `in-${v.name}`;
  wrap.appendChild(input);

  const missingLabel = el(doc, 'label', 'missing-switch', 'missing');
  const missing = el(doc, 'input');
  missing.type = 'checkbox';
  missing.checked = state.fields.get(v.name)?.missing ?? true;
  missing.className = 'missing-toggle';
  missing.addEventListener('change', () => {
    setMissing(state, v.name, missing.checked);
    if (missing.checked) input.value = '';
    onEdit();
  });
  missingLabel.prepend(missing);
  wrap.appendChild(missingLabel);

  const error = el(doc, 'div', 'field-error');
  error.hidden = true;
  wrap.appendChild(error);
  return wrap;
}

/** One control per predictor plus a collapsible auxiliary section. */
export function renderForm(
  root: HTMLElement,
  schema: SchemaDoc,
  state: FormState,
  onEdit: () => void,
): void {
  const doc = root.ownerDocument;
  root.textContent = '';

  const form = el(doc, 'div', 'entry-form');

  const predSection = el(doc, 'section', 'predictors');
  predSection.appendChild(el(doc, 'h2', undefined, 'Predictors'));
  for (const v of predictors(schema)) {
    predSection.appendChild(fieldControl(doc, v, state, onEdit));
  }
  form.appendChild(predSection);

  const auxVars = auxiliaries(schema);
  if (auxVars.length) {
    const auxSection = el(doc, 'details', 'auxiliaries');
    auxSection.appendChild(el(doc, 'summary', undefined, 'Auxiliary variables'));
    for (const v of auxVars) {
      auxSection.appendChild(fieldControl(doc, v, state, onEdit));
    }
    form.appendChild(auxSection);
  }

  const methodRow = el(doc, 'div', 'method-row');
  const method = el(doc, 'select', 'method-select');
  for (const code of ['m_imp', 'jmi', 'jmi_aux'] as const) {
    const o = el(doc, 'option', undefined, code);
    o.value = code;
    method.appendChild(o);
  }
  method.value = state.method;
  method.addEventListener('change', () => {
    setMethod(state, method.value as FormState['method']);
    onEdit();
  });
  methodRow.appendChild(el(doc, 'label', undefined, 'imputation method'));
  methodRow.appendChild(method);
  form.appendChild(methodRow);

  root.appendChild(form);
}

/** Blocking panel for a failed schema fetch, with a retry button. */
export function renderBlockingError(root: HTMLElement, message: string, onRetry: () => void): void {
  const doc = root.ownerDocument;
  root.textContent = '';
  const panel = el(doc, 'div', 'blocking-error');
  panel.appendChild(el(doc, 'p', undefined, `Cannot load the schema: ${message}`));
  const retry = el(doc, 'button', 'retry', 'Retry');
  retry.addEventListener('click', onRetry);
  panel.appendChild(retry);
  root.appendChild(panel);
}

/**
 * Result panel. Every number is painted through paintNumber with the
 * response field it came from; no risk math happens here.
 */
export function renderResult(panel: HTMLElement, state: FormState): void {
  const doc = panel.ownerDocument;
  panel.textContent = '';
  const response = state.lastResponse;
  if (!response) {
    panel.appendChild(el(doc, 'p', 'no-result', 'No prediction yet.'));
    return;
  }

  if (state.stale) {
    panel.appendChild(
      el(doc, 'p', 'stale-notice', 'Inputs changed since this prediction; resubmit to refresh.'),
    );
  }

  const riskRow = el(doc, 'div', 'risk-row');
  riskRow.appendChild(el(doc, 'span', undefined, '10-year risk: '));
  const riskEl = el(doc, 'strong', 'risk-value');
  paintNumber(riskEl, 'risk', response.risk, riskPercentText(response.risk));
  riskRow.appendChild(riskEl);
  panel.appendChild(riskRow);

  const lpRow = el(doc, 'div', 'lp-row');
  lpRow.appendChild(el(doc, 'span', undefined, 'linear predictor: '));
  const lpEl = el(doc, 'span', 'lp-value');
  paintNumber(lpEl, 'lp', response.lp, lpText(response.lp));
  lpRow.appendChild(lpEl);
  panel.appendChild(lpRow);

  const list = el(doc, 'ul', 'completed-list');
  const imputed = new Set(response.imputed_names);
  for (const [name, value] of Object.entries(response.completed)) {
    const item = el(doc, 'li', 'completed-item');
    item.dataset.field = name;
    item.appendChild(el(doc, 'span', 'completed-name', `${name}: `));
    const valueEl = el(doc, 'span', 'completed-value');
    if (imputed.has(name)) {
      const sd = response.conditional_sd[name] ?? 0;
      paintNumber(valueEl, `completed.${name}`, value, valueWithSdText(value, sd));
      const badge = el(doc, 'span', 'imputed-badge', 'imputed');
      item.appendChild(valueEl);
      item.appendChild(badge);
    } else {
      paintNumber(valueEl, `completed.${name}`, value, valueText(value));
      item.appendChild(valueEl);
    }
    list.appendChild(item);
  }
  panel.appendChild(list);

  const prov = el(
    doc,
    'p',
    'provenance',
    `imputation basis: ${response.provenance.popchar_id} (n=${response.provenance.popchar_n})`,
  );
  panel.appendChild(prov);
}

/** Per-field service-error display (422s name the offending variable). */
export function renderFieldErrors(root: HTMLElement, message: string): boolean {
  let placed = false;
  for (const wrap of Array.from(root.querySelectorAll<HTMLElement>('.field'))) {
    const name = wrap.dataset.field;
    const slot = wrap.querySelector<HTMLElement>('.field-error');
    if (!name || !slot) continue;
    if (message.includes(`'${name}'`)) {
      slot.textContent = message;
      slot.hidden = false;
      placed = true;
    } else {
      slot.textContent = '';
      slot.hidden = true;
    }
  }
  return placed;
}
