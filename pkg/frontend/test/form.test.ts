import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { App } from '../src/app.js';
import { makeMockService, MOCK_SCHEMA } from './mockService.js';

const CONFIG = { schemaId: 'main', popcharId: 'main', modelId: 'main' };

async function mountApp(handle = makeMockService()) {
  const root = document.createElement('div');
  document.body.appendChild(root);
  const app = new App(new ApiClient('http://svc', handle.fetch), CONFIG);
  await app.mount(root);
  return { app, root, handle };
}

describe('form rendering', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
  });

  it('renders one control per predictor plus a collapsible auxiliary section', async () => {
    const { root } = await mountApp();
    const predictorFields = root.querySelectorAll('.predictors .field');
    expect(predictorFields.length).toBe(8);
    const aux = root.querySelector('details.auxiliaries');
    expect(aux).not.toBeNull();
    expect(aux!.querySelectorAll('.field').length).toBe(2);
  });

  it('gives every field a missing switch, on by default', async () => {
    const { root } = await mountApp();
    const toggles = root.querySelectorAll<HTMLInputElement>('.missing-toggle');
    expect(toggles.length).toBe(10);
    for (const t of Array.from(toggles)) {
      expect(t.checked).toBe(true);
    }
  });

  it('binary fields render as yes/no selects', async () => {
    const { root } = await mountApp();
    const gender = root.querySelector<HTMLSelectElement>('#in-gender');
    expect(gender).toBeInstanceOf(HTMLSelectElement);
    const options = Array.from(gender!.options).map((o) => o.value);
    expect(options).toEqual(['yes', 'no']);
    const sbp = root.querySelector<HTMLInputElement>('#in-sbp');
    expect(sbp!.type).toBe('number');
  });

  it('typing a value clears the missing switch; blanking restores it', async () => {
    const { app, root } = await mountApp();
    const sbp = root.querySelector<HTMLInputElement>('#in-sbp')!;
    sbp.value = '150';
    sbp.dispatchEvent(new Event('input'));
    const toggle = root.querySelector<HTMLInputElement>(
      '.field[data-field="sbp"] .missing-toggle',
    )!;
    expect(toggle.checked).toBe(false);
    expect(app.state.fields.get('sbp')).toEqual({ raw: '150', missing: false });

    sbp.value = '';
    sbp.dispatchEvent(new Event('input'));
    expect(app.state.fields.get('sbp')!.missing).toBe(true);
  });

  it('schema fetch failure shows a blocking panel whose retry refetches', async () => {
    const handle = makeMockService({ failSchema: true });
    const { root } = await mountApp(handle);
    expect(root.querySelector('.blocking-error')).not.toBeNull();

    handle.options.failSchema = false;
    root.querySelector<HTMLButtonElement>('button.retry')!.click();
    await new Promise((r) => setTimeout(r, 0));
    expect(root.querySelector('.blocking-error')).toBeNull();
    expect(root.querySelectorAll('.predictors .field').length).toBe(8);
  });

  it('uses the schema exactly as served', async () => {
    const { handle } = await mountApp();
    expect(handle.calls[0].path).toBe('/v1/schemas/main');
    expect(MOCK_SCHEMA.variables.filter((v) => v.role === 'predictor').length).toBe(8);
  });
});
