/** Client-side view state, fully derivable from the last service response.
 *
 * The only extra structure kept across responses is the concurrent pool:
 * when several events are replayable at once they get stable numbers, which
 * survive while the pool drains (so a user can pick 0, then 2, then 1
 * against one printed menu). A choice that unlocks new frontier events
 * rebuilds the pool.
 */
import type { EventSummary, SessionState } from './api.js';

export interface PoolEntry {
  index: number;
  event: EventSummary;
  pending: boolean;
}

export interface ViewState {
  sessionState: SessionState | null;
  pool: PoolEntry[] | null;
  hint: string | null;
  error: string | null;
  selectedKey: string | null;
}

export function freshViewState(): ViewState {
  return { sessionState: null, pool: null, hint: null, error: null, selectedKey: null };
}

/** Update the stable pool after a new state snapshot.

 * An active pool survives as long as the frontier is a subset of it, even
 * down to its last pending member, so menu numbers stay valid until the
 * pool is exhausted or a choice unlocks events outside it.
 */
export function reconcilePool(pool: PoolEntry[] | null, frontier: EventSummary[]): PoolEntry[] | null {
  const frontierKeys = new Set(frontier.map((e) => e.event_key));
  if (pool !== null) {
    const poolKeys = new Set(pool.map((p) => p.event.event_key));
    if (frontier.every((e) => poolKeys.has(e.event_key))) {
      const remnant = pool.map((p) => ({ ...p, pending: frontierKeys.has(p.event.event_key) }));
      if (remnant.some((p) => p.pending)) {
        return remnant;
      }
      return null; // pool exhausted
    }
  }
  if (frontier.length <= 1) {
    return null;
  }
  return frontier.map((event, index) => ({ index, event, pending: true }));
}

export function applyState(view: ViewState, sessionState: SessionState): ViewState {
  return {
    ...view,
    sessionState,
    pool: reconcilePool(view.pool, sessionState.descriptor.frontier),
    error: null,
  };
}

/** The numbered list the frontier panel shows (and digits index into). */
export function numberedChoices(view: ViewState): PoolEntry[] {
  if (view.pool !== null) {
    return view.pool;
  }
  const frontier = view.sessionState?.descriptor.frontier ?? [];
  return frontier.map((event, index) => ({ index, event, pending: true }));
}

export interface ArrowSpec {
  eventId: number;
  from: string; // SEND event key
  to: string; // RECV event key
}

/** SEND -> RECV arrows among replayed events. */
export function arrows(sessionState: SessionState): ArrowSpec[] {
  const sends = new Map<number, string>();
  const out: ArrowSpec[] = [];
  for (const event of sessionState.replayed) {
    if (event.event_type === 'SEND') {
      sends.set(event.event_id, event.event_key);
    }
  }
  for (const event of sessionState.replayed) {
    if (event.event_type === 'RECV') {
      const from = sends.get(event.event_id);
      if (from !== undefined) {
        out.push({ eventId: event.event_id, from, to: event.event_key });
      }
    }
  }
  return out;
}
