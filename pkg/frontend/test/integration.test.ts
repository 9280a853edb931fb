/**
 * Optional end-to-end check against a running rtimpute service
 * (set RTIMPUTE_SERVICE_URL, after seeding entities under ids "main";
 * see ../run_e2e.sh). Skipped when the variable is unset.
 */

import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { App } from '../src/app.js';

const SERVICE_URL = process.env.RTIMPUTE_SERVICE_URL;

describe.skipIf(!SERVICE_URL)('against a local service', () => {
  const CONFIG = { schemaId: 'main', popcharId: 'main', modelId: 'main' };

  it('mounts, predicts, and renders within 200 ms per interaction', async () => {
    const root = document.createElement('div');
    document.body.appendChild(root);
    const app = new App(new ApiClient(SERVICE_URL!), CONFIG);
    await app.mount(root);
    expect(root.querySelectorAll('.predictors .field').length).toBeGreaterThan(0);

    const age = root.querySelector<HTMLInputElement>('#in-age')!;
    age.value = '61';
    age.dispatchEvent(new Event('input'));

    const t0 = performance.now();
    await app.submit();
    const elapsed = performance.now() - t0;
    expect(elapsed).toBeLessThan(200);

    const response = app.state.lastResponse!;
    expect(response.risk).toBeGreaterThan(0);
    expect(response.risk).toBeLessThan(1);
    const riskEl = root.querySelector<HTMLElement>('.risk-value')!;
    expect(riskEl.textContent).toBe(`${(response.risk * 100).toFixed(1)}%`);

    // trial == baseline -> exact zero delta
    const trial = await new ApiClient(SERVICE_URL!).predict({
      model_id: 'main',
      popchar_id: 'main',
      schema_id: 'main',
      method: app.state.method,
      record: { age: 61 },
    });
    expect(trial.risk - response.risk).toBe(0);
  });
});
