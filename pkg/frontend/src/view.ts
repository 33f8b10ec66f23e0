/** DOM rendering: timeline lanes, arrows, frontier panel, inspector.
 *
 * The x axis is the replay index, not physical time — reordering concurrent
 * events is the whole point, and epoch ties would overlap anyway. The epoch
 * (mx) shows up in the inspector instead.
 */
import type { EventSummary, SessionState } from './api.js';
import { arrows, numberedChoices, type ViewState } from './state.js';

const LANE_HEIGHT = 44;
const STEP_WIDTH = 34;
const GLYPH_RADIUS = 9;
const MARGIN_LEFT = 110;
const MARGIN_TOP = 26;

const SVG_NS = 'http://www.w3.org/2000/svg';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

export function offsetLabel(event: EventSummary, processIndex: number): string {
  const value = event.offsets[String(processIndex)];
  return value === undefined ? 'ε' : String(value);
}

/** Inspector panel contents for one event. */
export function renderEventDetail(event: EventSummary, nodes: string[]): HTMLElement {
  const panel = el('div', { class: 'inspector-body' });
  panel.appendChild(el('h3', {}, `${event.event_type} #${event.event_id} on ${event.node}`));
  const rows: Array<[string, string]> = [
    ['epoch (mx)', String(event.mx)],
    ['sender', event.sender],
    ['receiver', event.receiver ?? '—'],
  ];
  if (event.counter_sum !== null) {
    rows.push(['counter sum', String(event.counter_sum)]);
  }
  const table = el('table', { class: 'detail-table' });
  for (const [label, value] of rows) {
    const tr = el('tr');
    tr.appendChild(el('th', {}, label));
    tr.appendChild(el('td', {}, value));
    table.appendChild(tr);
  }
  panel.appendChild(table);

  const offsets = el('table', { class: 'offsets-table' });
  const head = el('tr');
  head.appendChild(el('th', {}, 'process'));
  head.appendChild(el('th', {}, 'offset'));
  if (event.counters !== null) {
    head.appendChild(el('th', {}, 'counter'));
  }
  offsets.appendChild(head);
  nodes.forEach((node, index) => {
    const tr = el('tr');
    tr.appendChild(el('td', {}, node));
    const td = el('td', { 'data-offset-for': String(index) }, offsetLabel(event, index));
    tr.appendChild(td);
    if (event.counters !== null) {
      tr.appendChild(el('td', {}, String(event.counters[String(index)] ?? 0)));
    }
    offsets.appendChild(tr);
  });
  panel.appendChild(offsets);
  return panel;
}

function glyphPosition(
  sessionState: SessionState,
  laneOrder: Map<string, number>,
  key: string,
): { x: number; y: number } | null {
  const index = sessionState.replayed.findIndex((e) => e.event_key === key);
  if (index < 0) {
    return null;
  }
  const lane = laneOrder.get(sessionState.replayed[index].node);
  if (lane === undefined) {
    return null;
  }
  return {
    x: MARGIN_LEFT + index * STEP_WIDTH,
    y: MARGIN_TOP + lane * LANE_HEIGHT + LANE_HEIGHT / 2,
  };
}

export interface RenderCallbacks {
  onSelect: (event: EventSummary) => void;
}

/** Build the SVG timeline: one lane per node (sorted), glyphs by replay
 * index, arrows connecting each replayed SEND to its RECV. */
export function renderTimeline(
  sessionState: SessionState,
  selectedKey: string | null,
  callbacks: RenderCallbacks,
): SVGElement {
  const nodes = [...sessionState.descriptor.nodes].sort();
  const laneOrder = new Map(nodes.map((node, index) => [node, index]));
  const width = MARGIN_LEFT + Math.max(sessionState.descriptor.total_events, 1) * STEP_WIDTH + 40;
  const height = MARGIN_TOP + nodes.length * LANE_HEIGHT + 10;
  const svg = svgEl('svg', {
    class: 'timeline',
    width: String(width),
    height: String(height),
    'data-testid': 'timeline',
  });

  nodes.forEach((node, index) => {
    const y = MARGIN_TOP + index * LANE_HEIGHT + LANE_HEIGHT / 2;
    const line = svgEl('line', {
      x1: String(MARGIN_LEFT - 16),
      y1: String(y),
      x2: String(width - 10),
      y2: String(y),
      class: 'lane-line',
    });
    svg.appendChild(line);
    const label = svgEl('text', {
      x: '8',
      y: String(y + 4),
      class: 'lane-label',
      'data-lane': node,
    });
    label.textContent = node;
    svg.appendChild(label);
  });

  const glyphByKey = new Map<string, SVGElement>();
  sessionState.replayed.forEach((event, index) => {
    const lane = laneOrder.get(event.node);
    if (lane === undefined) {
      return;
    }
    const x = MARGIN_LEFT + index * STEP_WIDTH;
    const y = MARGIN_TOP + lane * LANE_HEIGHT + LANE_HEIGHT / 2;
    const group = svgEl('g', {
      class: `glyph glyph-${event.event_type.toLowerCase()}`
        + (event.event_key === selectedKey ? ' selected' : ''),
      'data-event-key': event.event_key,
      'data-node': event.node,
      'data-replay-index': String(index),
    });
    const circle = svgEl('circle', { cx: String(x), cy: String(y), r: String(GLYPH_RADIUS) });
    group.appendChild(circle);
    const label = svgEl('text', { x: String(x), y: String(y + 3), class: 'glyph-label' });
    label.textContent = String(event.event_id);
    group.appendChild(label);
    group.addEventListener('click', () => callbacks.onSelect(event));
    svg.appendChild(group);
    glyphByKey.set(event.event_key, group);
  });

  for (const arrow of arrows(sessionState)) {
    const from = glyphPosition(sessionState, laneOrder, arrow.from);
    const to = glyphPosition(sessionState, laneOrder, arrow.to);
    if (!from || !to) {
      continue;
    }
    const line = svgEl('line', {
      x1: String(from.x),
      y1: String(from.y),
      x2: String(to.x),
      y2: String(to.y),
      class: 'message-arrow',
      'data-arrow-from': arrow.from,
      'data-arrow-to': arrow.to,
      'marker-end': 'url(#arrowhead)',
    });
    const endpoints = [glyphByKey.get(arrow.from), glyphByKey.get(arrow.to)];
    line.addEventListener('mouseenter', () => {
      for (const endpoint of endpoints) {
        endpoint?.classList.add('highlight');
      }
    });
    line.addEventListener('mouseleave', () => {
      for (const endpoint of endpoints) {
        endpoint?.classList.remove('highlight');
      }
    });
    svg.appendChild(line);
  }

  const defs = svgEl('defs');
  const marker = svgEl('marker', {
    id: 'arrowhead',
    markerWidth: '8',
    markerHeight: '8',
    refX: '7',
    refY: '3',
    orient: 'auto',
  });
  marker.appendChild(svgEl('path', { d: 'M0,0 L7,3 L0,6 z' }));
  defs.appendChild(marker);
  svg.appendChild(defs);
  return svg;
}

/** Numbered frontier panel; digits index into exactly this listing. */
export function renderFrontierPanel(view: ViewState): HTMLElement {
  const panel = el('div', { class: 'frontier-panel', 'data-testid': 'frontier' });
  const sessionState = view.sessionState;
  if (!sessionState) {
    return panel;
  }
  if (sessionState.descriptor.done) {
    panel.appendChild(el('p', { class: 'frontier-done' }, 'Replay complete.'));
    return panel;
  }
  const choices = numberedChoices(view);
  const live = choices.filter((c) => c.pending);
  if (live.length > 1) {
    panel.appendChild(el('p', { class: 'frontier-title' }, 'Concurrent events detected!'));
  } else {
    panel.appendChild(
      el('p', { class: 'frontier-title' }, 'Next event (press ArrowRight):'),
    );
  }
  const list = el('ol', { class: 'frontier-list', start: '0' });
  for (const choice of choices) {
    const event = choice.event;
    const item = el(
      'li',
      {
        class: 'frontier-item' + (choice.pending ? '' : ' spent'),
        'data-choice-index': String(choice.index),
        'data-event-key': event.event_key,
        value: String(choice.index),
      },
      `${choice.index}. ${event.event_type} #${event.event_id} on ${event.node} (mx ${event.mx})`,
    );
    list.appendChild(item);
  }
  panel.appendChild(list);
  return panel;
}
