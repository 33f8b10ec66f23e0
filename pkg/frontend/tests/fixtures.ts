import type { EventSummary, SessionDescriptor, SessionState } from '../src/api.js';

export function event(partial: Partial<EventSummary> & { event_key: string }): EventSummary {
  const [id, type] = partial.event_key.split(':');
  return {
    event_id: Number(id),
    event_type: (type as EventSummary['event_type']) ?? 'LOCAL',
    node: 'n0',
    mx: 1,
    offsets: {},
    counters: {},
    counter_sum: null,
    sender: partial.node ?? 'n0',
    receiver: null,
    ...partial,
  };
}

export function sessionState(
  replayed: EventSummary[],
  frontier: EventSummary[],
  nodes: string[] = ['n0', 'n1', 'n2'],
  total?: number,
): SessionState {
  const descriptor: SessionDescriptor = {
    session_id: 's1',
    trace_name: 'fixture',
    total_events: total ?? replayed.length + frontier.length,
    replayed_count: replayed.length,
    frontier,
    done: frontier.length === 0 && replayed.length > 0,
    n: nodes.length,
    epsilon: 15,
    interval_us: 1,
    counter_mode: 'full',
    nodes,
  };
  const lanes = [...nodes].sort().map((node) => ({
    node,
    events: replayed.filter((e) => e.node === node),
  }));
  return { descriptor, replayed, lanes };
}
