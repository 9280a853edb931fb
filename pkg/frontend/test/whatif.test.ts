import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiClient } from '../src/api.js';
import { App } from '../src/app.js';
import { WHAT_IF_DEBOUNCE_MS } from '../src/whatif.js';
import { makeMockService } from './mockService.js';

const CONFIG = { schemaId: 'main', popcharId: 'main', modelId: 'main' };

async function mountApp(handle = makeMockService()) {
  const root = document.createElement('div');
  document.body.appendChild(root);
  const app = new App(new ApiClient('http://svc', handle.fetch), CONFIG);
  await app.mount(root);
  return { app, root, handle };
}

function setField(root: HTMLElement, name: string, value: string) {
  const input = root.querySelector<HTMLInputElement>(`#in-${name}`)!;
  input.value = value;
  input.dispatchEvent(new Event(input.tagName === 'SELECT' ? 'change' : 'input'));
}

async function flushDebounce() {
  await vi.advanceTimersByTimeAsync(WHAT_IF_DEBOUNCE_MS + 5);
  await vi.runOnlyPendingTimersAsync();
}

describe('what-if exploration', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it('trial equal to baseline renders a zero delta', async () => {
    const { app, root } = await mountApp();
    setField(root, 'age', '61');
    await app.submit();
    vi.useFakeTimers();
    app.whatIf.propose('age', '61');
    await flushDebounce();
    const delta = root.querySelector<HTMLElement>('.whatif-delta')!;
    expect(delta.textContent).toBe('±0.0 pp');
    // identical records give identical responses; the difference is exactly 0
    const baseline = root.querySelector<HTMLElement>('.whatif-baseline')!;
    const trial = root.querySelector<HTMLElement>('.whatif-trial')!;
    expect(trial.textContent).toBe(baseline.textContent);
  });

  it('lowering a positive-coefficient predictor gives a non-positive delta', async () => {
    const { app, root } = await mountApp();
    setField(root, 'age', '61');
    await app.submit();
    vi.useFakeTimers();
    app.whatIf.propose('sbp', '120'); // below the population mean used as baseline
    await flushDebounce();
    const delta = root.querySelector<HTMLElement>('.whatif-delta')!;
    expect(delta.textContent!.startsWith('−') || delta.textContent === '±0.0 pp').toBe(
      true,
    );
  });

  it('what-if never mutates the baseline form until apply', async () => {
    const { app, root } = await mountApp();
    setField(root, 'age', '61');
    await app.submit();
    const baselineResponse = app.state.lastResponse;
    vi.useFakeTimers();
    app.whatIf.propose('age', '75');
    await flushDebounce();

    expect(app.state.fields.get('age')).toEqual({ raw: '61', missing: false });
    expect(app.state.lastResponse).toBe(baselineResponse);

    root.querySelector<HTMLButtonElement>('.whatif-apply')!.click();
    expect(app.state.fields.get('age')).toEqual({ raw: '75', missing: false });
    expect(app.state.stale).toBe(true);
  });

  it('a what-if on an imputed field overrides the imputation for the trial call only', async () => {
    const { app, handle, root } = await mountApp();
    setField(root, 'age', '61');
    await app.submit(); // tc left missing -> imputed in the baseline
    expect(app.state.lastResponse!.imputed_names).toContain('tc');
    vi.useFakeTimers();
    app.whatIf.propose('tc', '6.5');
    await flushDebounce();
    const trialCall = handle.calls.at(-1)!;
    expect(trialCall.path).toBe('/v1/predict');
    expect((trialCall.body as { record: Record<string, unknown> }).record.tc).toBe(6.5);
    // baseline record still reports tc as missing
    expect(app.state.fields.get('tc')!.missing).toBe(true);
  });

  it('debounces rapid proposals into one request', async () => {
    const { app, handle, root } = await mountApp();
    setField(root, 'age', '61');
    await app.submit();
    const before = handle.calls.length;
    vi.useFakeTimers();
    app.whatIf.propose('sbp', '130');
    app.whatIf.propose('sbp', '131');
    app.whatIf.propose('sbp', '132');
    await flushDebounce();
    const predicts = handle.calls.slice(before).filter((c) => c.path === '/v1/predict');
    expect(predicts.length).toBe(1);
    expect((predicts[0].body as { record: Record<string, unknown> }).record.sbp).toBe(132);
  });

  it('an in-flight what-if is aborted by the next proposal', async () => {
    const handle = makeMockService({ latencyMs: 50 });
    const { app, root } = await mountApp(handle);
    handle.options.latencyMs = 0;
    setField(root, 'age', '61');
    await app.submit();

    vi.useFakeTimers();
    handle.options.latencyMs = 1000;
    app.whatIf.propose('sbp', '130');
    await vi.advanceTimersByTimeAsync(WHAT_IF_DEBOUNCE_MS + 5); // request 1 in flight
    app.whatIf.propose('sbp', '140');
    await vi.advanceTimersByTimeAsync(WHAT_IF_DEBOUNCE_MS + 5); // request 2 fired, 1 aborted
    expect(handle.aborted).toBe(1);
    await vi.advanceTimersByTimeAsync(2000);
    const delta = root.querySelector('.whatif-delta');
    expect(delta).not.toBeNull();
  });

  it('a failed what-if leaves the baseline view intact', async () => {
    const handle = makeMockService();
    const { app, root } = await mountApp(handle);
    setField(root, 'age', '61');
    await app.submit();
    const baselineHtml = root.querySelector('#result-root')!.innerHTML;

    handle.options.predictError = { status: 500, code: 'boom', message: 'kaput' };
    vi.useFakeTimers();
    app.whatIf.propose('sbp', '130');
    await flushDebounce();
    expect(root.querySelector('#result-root')!.innerHTML).toBe(baselineHtml);
    expect(root.querySelector('#error-root')!.textContent).toContain('kaput');
  });

  it('a new baseline drops stale in-flight what-ifs', async () => {
    const handle = makeMockService();
    const { app, root } = await mountApp(handle);
    setField(root, 'age', '61');
    await app.submit();
    vi.useFakeTimers();
    handle.options.latencyMs = 1000;
    app.whatIf.propose('sbp', '130');
    await vi.advanceTimersByTimeAsync(WHAT_IF_DEBOUNCE_MS + 5);
    handle.options.latencyMs = 0;
    await app.submit(); // new baseline while the what-if is in flight
    await vi.advanceTimersByTimeAsync(2000);
    expect(root.querySelector('#whatif-root')!.textContent).toBe('');
  });
});
