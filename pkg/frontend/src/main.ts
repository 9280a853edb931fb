/**
 * Browser entry point. Configuration is a single base URL (persisted in
 * localStorage) plus the entity ids to bind against.
 */

import { ApiClient } from './api.js';
import { App } from './app.js';

const BASE_URL_KEY = 'rtimpute.baseUrl';

function baseUrl(): string {
  return localStorage.getItem(BASE_URL_KEY) ?? 'http://127.0.0.1:8000';
}

function idFromQuery(name: string, fallback: string): string {
  return new URLSearchParams(location.search).get(name) ?? fallback;
}

async function boot(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app mount point');

  const settings = document.getElementById('base-url') as HTMLInputElement | null;
  if (settings) {
    settings.value = baseUrl();
    settings.addEventListener('change', () => {
      localStorage.setItem(BASE_URL_KEY, settings.value);
      location.reload();
    });
  }

  const app = new App(new ApiClient(baseUrl()), {
    schemaId: idFromQuery('schema', 'main'),
    popcharId: idFromQuery('popchar', 'main'),
    modelId: idFromQuery('model', 'main'),
  });
  await app.mount(root);
}

void boot();
