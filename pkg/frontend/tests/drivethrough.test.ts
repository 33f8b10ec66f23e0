/** End-to-end walkthrough against the real replay service.
 *
 * No browser binary ships in this environment, so the "scripted browser
 * session" runs the production client modules under jsdom with real HTTP:
 * the walkthrough trace loads, ArrowRight advances the ten forced steps,
 * the three-way frontier is drained by digit keys 0, 2, 1, and an
 * out-of-range digit produces a visible hint without any service call.
 */
import { spawn, type ChildProcess } from 'node:child_process';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ReplayApi } from '../src/api.js';
import { ReplayApp } from '../src/app.js';

const PORT = 8791;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

async function waitForHealthy(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error('replay service did not come up');
}

beforeAll(async () => {
  service = spawn(
    'python3',
    [
      '-c',
      [
        'import uvicorn',
        'from repcl.service import create_app',
        `uvicorn.run(create_app(trace_dir='../sample_traces'), host='127.0.0.1', port=${PORT}, log_level='warning')`,
      ].join('; '),
    ],
    // vitest runs from the frontend root; the sample traces sit one level up
    { cwd: process.cwd(), stdio: 'ignore' },
  );
  await waitForHealthy();
});

afterAll(() => {
  service.kill();
});

function pressKey(key: string): void {
  document.dispatchEvent(new KeyboardEvent('keydown', { key, bubbles: true }));
}

describe('walkthrough trace drive-through', () => {
  it('ArrowRight to the three-way frontier, digits 0/2/1, matching the listing order', async () => {
    document.body.innerHTML = '<main id="app"></main>';
    const app = new ReplayApp(document.getElementById('app') as HTMLElement, new ReplayApi(BASE));
    document.addEventListener('keydown', (e) => app.handleKey(e.key));

    await app.loadTraceByPath('userview.jsonl');
    expect(app.view.sessionState?.descriptor.total_events).toBe(13);
    expect(app.view.sessionState?.replayed).toHaveLength(0);

    // forced prefix: every frontier is a singleton
    const forced: string[] = [];
    for (let step = 0; step < 10; step += 1) {
      const frontier = app.view.sessionState!.descriptor.frontier;
      expect(frontier).toHaveLength(1);
      forced.push(frontier[0].event_key);
      pressKey('ArrowRight');
      await app.idle();
    }
    expect(forced).toEqual([
      '1:SEND', '1:RECV', '2:SEND', '2:RECV', '3:SEND',
      '3:RECV', '4:SEND', '4:RECV', '5:SEND', '5:RECV',
    ]);

    // the three-way frontier: ArrowRight must refuse and hint
    const menu = app.view.sessionState!.descriptor.frontier.map((e) => e.event_key);
    expect(menu).toEqual(['6:LOCAL', '7:LOCAL', '8:LOCAL']);
    const callsBefore = app.mutationCount;
    pressKey('ArrowRight');
    await app.idle();
    expect(app.mutationCount).toBe(callsBefore);
    expect(document.querySelector('[data-testid="hint"]')?.textContent).toContain('3 concurrent');

    // out-of-range digit: visible hint, no service call
    pressKey('9');
    await app.idle();
    expect(app.mutationCount).toBe(callsBefore);
    expect(document.querySelector('[data-testid="hint"]')?.textContent).toContain(
      'No event numbered 9',
    );

    // drain the pool out of listing order: 0, then 2, then 1
    for (const digit of ['0', '2', '1']) {
      pressKey(digit);
      await app.idle();
    }
    const state = app.view.sessionState!;
    expect(state.descriptor.done).toBe(true);
    expect(state.replayed.map((e) => e.event_key)).toEqual([
      ...forced,
      '6:LOCAL',
      '8:LOCAL',
      '7:LOCAL',
    ]);

    // lanes reflect per-node replay order
    const lane2 = state.lanes.find((l) => l.node === '10.1.1.2');
    expect(lane2?.events.map((e) => e.event_key)).toEqual(['1:RECV', '2:SEND', '6:LOCAL']);
  });

  it('rejected choices surface the violated constraint from the service', async () => {
    document.body.innerHTML = '<main id="app"></main>';
    const api = new ReplayApi(BASE);
    const app = new ReplayApp(document.getElementById('app') as HTMLElement, api);
    await app.loadTraceByPath('replay_figure_eps5.jsonl');

    // bypass the client guard and fire an invalid choose straight at the
    // service; the app-level handler must render the constraint
    const sid = app.view.sessionState!.descriptor.session_id;
    let constraint = '';
    try {
      await api.choose(sid, '2:RECV');
    } catch (error) {
      constraint = (error as { body: { violated_constraint?: string } }).body
        .violated_constraint ?? '';
    }
    expect(constraint).toContain('must replay first');
  });

  it('session id survives re-attachment (URL reload path)', async () => {
    document.body.innerHTML = '<main id="app"></main>';
    const api = new ReplayApi(BASE);
    const first = new ReplayApp(document.getElementById('app') as HTMLElement, api);
    await first.loadTraceByPath('userview.jsonl');
    const sid = first.view.sessionState!.descriptor.session_id;
    first.handleKey('ArrowRight');
    await first.idle();

    const second = new ReplayApp(document.getElementById('app') as HTMLElement, api);
    await second.attachSession(sid);
    expect(second.view.sessionState?.descriptor.replayed_count).toBe(1);
  });

  it('exhaustive download is refused for the 13-event walkthrough but works for small traces', async () => {
    document.body.innerHTML = '<main id="app"></main>';
    const api = new ReplayApi(BASE);
    const big = new ReplayApp(document.getElementById('app') as HTMLElement, api);
    await big.loadTraceByPath('userview.jsonl');
    expect(await big.downloadReplays()).toBeNull();
    expect(document.querySelector('[data-testid="hint"]')?.textContent).toContain('limited');

    const small = new ReplayApp(document.getElementById('app') as HTMLElement, api);
    await small.loadTraceByPath('replay_figure_eps20.jsonl');
    const replays = await small.downloadReplays();
    expect(replays?.sequences).toHaveLength(3);
  });
});
