/**
 * Display formatting. Nothing here computes risk: these helpers round and
 * label numbers that came out of service responses, and every painted
 * number is recorded so tests can trace it back to a response field.
 */

export interface PaintRecord {
  /** response field the number came from, e.g. "risk" or "completed.tc" */
  source: string;
  raw: number;
  text: string;
}

type Interceptor = (rec: PaintRecord) => void;

let interceptor: Interceptor | null = null;

/** Test hook: receive every (source, raw, text) triple that gets painted. */
export function setPaintInterceptor(fn: Interceptor | null): void {
  interceptor = fn;
}

/** The one gate through which numeric text reaches the DOM. */
export function paintNumber(el: HTMLElement, source: string, raw: number, text: string): void {
  el.textContent = text;
  el.dataset.source = source;
  if (interceptor) {
    interceptor({ source, raw, text });
  }
}

export function riskPercentText(risk: number): string {
  return `${(risk * 100).toFixed(1)}%`;
}

export function lpText(lp: number): string {
  return lp.toFixed(4);
}

export function valueText(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

export function valueWithSdText(v: number, sd: number): string {
  return `${v.toFixed(2)} ± ${sd.toFixed(2)}`;
}

/** Risk difference in percentage points; sign always shown. */
export function deltaPointsText(delta: number): string {
  const pts = delta * 100;
  const sign = pts > 0 ? '+' : pts < 0 ? '−' : '±';
  return `${sign}${Math.abs(pts).toFixed(1)} pp`;
}
