/** Browser bootstrap: trace picker, session restore from the URL hash. */
import { ReplayApi } from './api.js';
import { ReplayApp } from './app.js';

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

export async function bootstrap(): Promise<ReplayApp> {
  const api = new ReplayApi('');
  const app = new ReplayApp(byId('app'), api, (sessionId) => {
    window.location.hash = sessionId ?? '';
  });

  const picker = byId<HTMLSelectElement>('trace-picker');
  try {
    const { traces } = await api.listTraces();
    for (const name of traces) {
      const option = document.createElement('option');
      option.value = name;
      option.textContent = name;
      picker.appendChild(option);
    }
  } catch {
    // no trace dir configured; uploads still work
  }

  byId<HTMLButtonElement>('load-button').addEventListener('click', () => {
    if (picker.value) {
      void app.loadTraceByPath(picker.value);
    }
  });
  byId<HTMLInputElement>('upload-input').addEventListener('change', (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) {
      void app.loadTraceUpload(file.name, file);
    }
  });
  byId<HTMLButtonElement>('reset-button').addEventListener('click', () => app.reset());
  byId<HTMLButtonElement>('download-button').addEventListener('click', () => {
    void app.downloadReplays().then((body) => {
      if (!body) {
        return;
      }
      const blob = new Blob([JSON.stringify(body, null, 2)], { type: 'application/json' });
      const link = document.createElement('a');
      link.href = URL.createObjectURL(blob);
      link.download = 'replays.json';
      link.click();
      URL.revokeObjectURL(link.href);
    });
  });

  document.addEventListener('keydown', (event) => {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLSelectElement) {
      return;
    }
    app.handleKey(event.key);
  });

  const fromHash = window.location.hash.replace(/^#/, '');
  if (fromHash) {
    await app.attachSession(fromHash);
  }
  return app;
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  void bootstrap();
}
