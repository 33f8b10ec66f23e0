"""Canonical demo traces built straight from the clock operations.

These are used by tests, the sample-trace directory, and the UI walkthrough.
"""
from __future__ import annotations

from .clock import (
    ClockConfig,
    RepClTimestamp,
    advance_receive,
    advance_send_local,
)
from .trace import EventRecord, EventType, ParsedTrace


def figure_replay_trace(epsilon: int) -> ParsedTrace:
    """The four-event replay scenario: A = send on P1 at epoch 50 received
    by P2 at 48 (event B), C = send on P3 at epoch 40 received by P2 at 52
    (event D).

    At epsilon 5 the only valid replay is C A B D; at epsilon 20 events B
    and C (and A and C) become reorderable.
    """
    config = ClockConfig(n=3, epsilon=epsilon, interval_us=1)
    a = advance_send_local(RepClTimestamp.initial(0), 50, config)
    b = advance_receive(RepClTimestamp.initial(1), a, 48, config)
    c = advance_send_local(RepClTimestamp.initial(2), 40, config)
    d = advance_receive(b, c, 52, config)
    nodes = ["P1", "P2", "P3"]
    events = [
        EventRecord(1, EventType.SEND, "P1", a, "P1", "P2"),
        EventRecord(1, EventType.RECV, "P2", b, "P1", "P2"),
        EventRecord(2, EventType.SEND, "P3", c, "P3", "P2"),
        EventRecord(2, EventType.RECV, "P2", d, "P3", "P2"),
    ]
    return ParsedTrace(config=config, nodes=nodes, events=events)


def userview_trace() -> ParsedTrace:
    """A 13-event walkthrough trace: a ten-step forced relay chain (every
    frontier a singleton, so a viewer advances with the right arrow alone),
    then three mutually concurrent tail events that force a numbered choice.

    The relay passes a message around the ring 0 -> 1 -> 2 -> 3 -> 4 -> 0;
    afterwards processes 1, 2, and 4 each log a quiet-period local event in
    the same late epoch.
    """
    config = ClockConfig(n=5, epsilon=15, interval_us=1)
    nodes = [f"10.1.1.{i + 1}" for i in range(5)]
    state = {i: RepClTimestamp.initial(i) for i in range(5)}
    events: list[EventRecord] = []

    hop_epochs = [100, 101, 102, 103, 104, 105, 106, 107, 108, 109]
    ring = [0, 1, 2, 3, 4, 0]
    for hop in range(5):
        src, dst = ring[hop], ring[hop + 1]
        send_epoch, recv_epoch = hop_epochs[2 * hop], hop_epochs[2 * hop + 1]
        state[src] = advance_send_local(state[src], send_epoch, config)
        events.append(
            EventRecord(hop + 1, EventType.SEND, nodes[src], state[src], nodes[src], nodes[dst])
        )
        msg = state[src]
        state[dst] = advance_receive(state[dst], msg, recv_epoch, config)
        events.append(
            EventRecord(hop + 1, EventType.RECV, nodes[dst], state[dst], nodes[src], nodes[dst])
        )

    # quiet gap, then three concurrent locals: far enough that everything
    # earlier is dominated, close enough to each other to stay unordered
    tail_epoch = 125
    for event_id, pid in ((6, 1), (7, 2), (8, 4)):
        state[pid] = advance_send_local(state[pid], tail_epoch, config)
        events.append(
            EventRecord(event_id, EventType.LOCAL, nodes[pid], state[pid], nodes[pid], None)
        )
    return ParsedTrace(config=config, nodes=nodes, events=events)
