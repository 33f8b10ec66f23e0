/** Application shell: session lifecycle, keyboard handling, rendering.
 *
 * All view output is a function of the last service response (plus the
 * stable pool numbering); every mutation goes through a single client-side
 * queue so at most one choose/reset is in flight.
 */
import { ApiError, ReplayApi, type EventSummary } from './api.js';
import { applyState, freshViewState, numberedChoices, type ViewState } from './state.js';
import { renderEventDetail, renderFrontierPanel, renderTimeline } from './view.js';

const ENUMERATION_LIMIT = 12;

export class ReplayApp {
  view: ViewState = freshViewState();
  sessionId: string | null = null;
  private queue: Promise<void> = Promise.resolve();
  private callCount = 0;

  constructor(
    private readonly root: HTMLElement,
    readonly api: ReplayApi,
    private readonly onSessionChange: (sessionId: string | null) => void = () => {},
  ) {}

  /** Number of mutation requests issued (tests watch this). */
  get mutationCount(): number {
    return this.callCount;
  }

  /** Resolves when every queued mutation has settled. */
  idle(): Promise<void> {
    return this.queue;
  }

  async loadTraceByPath(path: string): Promise<void> {
    await this.startSession(() => this.api.createFromPath(path));
  }

  async loadTraceUpload(name: string, blob: Blob): Promise<void> {
    await this.startSession(() => this.api.createFromUpload(name, blob));
  }

  async attachSession(sessionId: string): Promise<void> {
    try {
      const state = await this.api.getState(sessionId);
      this.sessionId = sessionId;
      this.view = applyState(freshViewState(), state);
      this.onSessionChange(sessionId);
    } catch (error) {
      this.sessionId = null;
      this.view = { ...freshViewState(), error: describe(error) };
      this.onSessionChange(null);
    }
    this.render();
  }

  private async startSession(create: () => Promise<{ session_id: string }>): Promise<void> {
    try {
      const descriptor = await create();
      await this.attachSession(descriptor.session_id);
    } catch (error) {
      this.view = { ...this.view, error: describe(error) };
      this.render();
    }
  }

  private async refresh(): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    const state = await this.api.getState(this.sessionId);
    this.view = applyState(this.view, state);
  }

  /** Queue a choose; rejections surface as hints, never as unhandled. */
  private enqueueChoose(eventKey: string): void {
    const sessionId = this.sessionId;
    if (!sessionId) {
      return;
    }
    this.queue = this.queue.then(async () => {
      try {
        this.callCount += 1;
        await this.api.choose(sessionId, eventKey);
        await this.refresh();
        this.view = { ...this.view, hint: null };
      } catch (error) {
        if (error instanceof ApiError && error.body.violated_constraint) {
          this.view = { ...this.view, hint: `Not replayable: ${error.body.violated_constraint}` };
        } else {
          this.view = { ...this.view, error: describe(error) };
        }
      }
      this.render();
    });
  }

  reset(): void {
    const sessionId = this.sessionId;
    if (!sessionId) {
      return;
    }
    this.queue = this.queue.then(async () => {
      try {
        this.callCount += 1;
        await this.api.reset(sessionId);
        this.view = { ...freshViewState() };
        await this.refresh();
      } catch (error) {
        this.view = { ...this.view, error: describe(error) };
      }
      this.render();
    });
  }

  /** Keyboard contract: ArrowRight advances a singleton frontier (hint
   * otherwise); a digit picks from the numbered pool; anything invalid is
   * a visible hint and never a service call. */
  handleKey(key: string): void {
    const sessionState = this.view.sessionState;
    if (!sessionState || sessionState.descriptor.done) {
      return;
    }
    if (key === 'ArrowRight') {
      const frontier = sessionState.descriptor.frontier;
      if (frontier.length === 1) {
        this.enqueueChoose(frontier[0].event_key);
      } else {
        this.setHint(
          `${frontier.length} concurrent events — press 0..${numberedChoices(this.view).length - 1} to pick one`,
        );
      }
      return;
    }
    if (/^[0-9]$/.test(key)) {
      const choices = numberedChoices(this.view);
      const index = Number(key);
      if (index >= choices.length) {
        this.setHint(`No event numbered ${index}; choices run 0..${choices.length - 1}`);
        return;
      }
      const choice = choices[index];
      if (!choice.pending) {
        this.setHint(`Event ${index} was already replayed; pick another`);
        return;
      }
      this.enqueueChoose(choice.event.event_key);
    }
  }

  private setHint(hint: string): void {
    this.view = { ...this.view, hint };
    this.render();
  }

  selectEvent(event: EventSummary): void {
    this.view = { ...this.view, selectedKey: event.event_key };
    this.render();
  }

  async downloadReplays(): Promise<{ sequences: string[][]; truncated: boolean } | null> {
    if (!this.sessionId || !this.view.sessionState) {
      return null;
    }
    if (this.view.sessionState.descriptor.total_events > ENUMERATION_LIMIT) {
      this.setHint(`Exhaustive replay listing is limited to ${ENUMERATION_LIMIT} events`);
      return null;
    }
    return this.api.replays(this.sessionId);
  }

  render(): void {
    this.root.replaceChildren();
    const banner = document.createElement('div');
    banner.className = 'banner';
    if (this.view.error) {
      const error = document.createElement('p');
      error.className = 'error-banner';
      error.setAttribute('data-testid', 'error');
      error.textContent = this.view.error;
      banner.appendChild(error);
    }
    if (this.view.hint) {
      const hint = document.createElement('p');
      hint.className = 'hint-banner';
      hint.setAttribute('data-testid', 'hint');
      hint.textContent = this.view.hint;
      banner.appendChild(hint);
    }
    this.root.appendChild(banner);

    const sessionState = this.view.sessionState;
    if (!sessionState) {
      return;
    }
    const status = document.createElement('p');
    status.className = 'status-line';
    status.setAttribute('data-testid', 'status');
    const d = sessionState.descriptor;
    status.textContent =
      `${d.trace_name}: ${d.replayed_count}/${d.total_events} replayed` +
      ` (n=${d.n}, epsilon=${d.epsilon})`;
    this.root.appendChild(status);

    this.root.appendChild(
      renderTimeline(sessionState, this.view.selectedKey, {
        onSelect: (event) => this.selectEvent(event),
      }),
    );
    this.root.appendChild(renderFrontierPanel(this.view));

    const inspector = document.createElement('div');
    inspector.className = 'inspector';
    inspector.setAttribute('data-testid', 'inspector');
    const selected =
      sessionState.replayed.find((e) => e.event_key === this.view.selectedKey) ??
      sessionState.descriptor.frontier.find((e) => e.event_key === this.view.selectedKey);
    if (selected) {
      inspector.appendChild(renderEventDetail(selected, d.nodes));
    }
    this.root.appendChild(inspector);
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.body.code}: ${error.body.message}`;
  }
  return error instanceof Error ? `service unreachable: ${error.message}` : String(error);
}
