/** Typed client for the replay session service. */

export interface EventSummary {
  event_key: string;
  event_id: number;
  event_type: 'SEND' | 'RECV' | 'LOCAL';
  node: string;
  mx: number;
  offsets: Record<string, number>;
  counters: Record<string, number> | null;
  counter_sum: number | null;
  sender: string;
  receiver: string | null;
}

export interface SessionDescriptor {
  session_id: string;
  trace_name: string;
  total_events: number;
  replayed_count: number;
  frontier: EventSummary[];
  done: boolean;
  n: number;
  epsilon: number;
  interval_us: number;
  counter_mode: 'full' | 'sum';
  nodes: string[];
}

export interface LaneState {
  node: string;
  events: EventSummary[];
}

export interface SessionState {
  descriptor: SessionDescriptor;
  replayed: EventSummary[];
  lanes: LaneState[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  violated_constraint?: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiErrorBody,
  ) {
    super(body.message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, init);
  const text = await response.text();
  const payload = text ? JSON.parse(text) : {};
  if (!response.ok) {
    throw new ApiError(response.status, payload as ApiErrorBody);
  }
  return payload as T;
}

export class ReplayApi {
  constructor(private readonly base: string = '') {}

  listTraces(): Promise<{ traces: string[] }> {
    return request(this.base, '/traces');
  }

  createFromPath(path: string): Promise<SessionDescriptor> {
    return request(this.base, '/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ path }),
    });
  }

  createFromUpload(name: string, contents: Blob): Promise<SessionDescriptor> {
    const form = new FormData();
    form.append('trace', contents, name);
    return request(this.base, '/sessions', { method: 'POST', body: form });
  }

  getState(sessionId: string): Promise<SessionState> {
    return request(this.base, `/sessions/${sessionId}/state`);
  }

  choose(sessionId: string, eventKey: string): Promise<SessionDescriptor> {
    return request(this.base, `/sessions/${sessionId}/choose`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ event_key: eventKey }),
    });
  }

  reset(sessionId: string): Promise<SessionDescriptor> {
    return request(this.base, `/sessions/${sessionId}/reset`, { method: 'POST' });
  }

  replays(sessionId: string, limit?: number): Promise<{ sequences: string[][]; truncated: boolean }> {
    const query = limit === undefined ? '' : `?limit=${limit}`;
    return request(this.base, `/sessions/${sessionId}/replays${query}`);
  }
}
