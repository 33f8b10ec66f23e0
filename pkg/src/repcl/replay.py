"""Replay of timestamped traces.

The engine materializes the order constraints of a trace as a DAG and
replays against it: events whose predecessors have all been replayed form
the frontier, and any frontier event may go next.  Constraints come from two
sources:

* the clock relation (BEFORE between timestamps), and
* hard edges: per-node log order and SEND -> RECV pairing.  These keep every
  replay causally valid even in sum counter mode, where the scalar
  comparison can miss an ordering.

Timestamp comparisons are only needed between events whose mx values are
within epsilon of each other; pairs further apart are ordered by mx alone,
which the frontier accounts for without materializing edges.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .clock import ClockConfig, CompareResult, compare
from .errors import ReplayBoundError, ReplayChoiceError, TraceCycleError
from .trace import EventRecord, EventType, ParsedTrace

DEFAULT_ENUMERATION_BOUND = 12


@dataclass
class HardEdge:
    src: str
    dst: str
    kind: str  # "node-order" or "message"


def _sort_key(record: EventRecord) -> tuple[int, str, int, str]:
    return (record.ts.mx, record.node, record.event_id, record.event_type.value)


def hard_edges(events: list[EventRecord]) -> list[HardEdge]:
    """Per-node log order plus SEND -> RECV for each message id."""
    edges: list[HardEdge] = []
    last_on_node: dict[str, str] = {}
    sends: dict[int, str] = {}
    recvs: dict[int, list[str]] = {}
    for record in events:
        prev = last_on_node.get(record.node)
        if prev is not None:
            edges.append(HardEdge(prev, record.key, "node-order"))
        last_on_node[record.node] = record.key
        if record.event_type is EventType.SEND:
            sends[record.event_id] = record.key
        elif record.event_type is EventType.RECV:
            recvs.setdefault(record.event_id, []).append(record.key)
    for event_id, keys in recvs.items():
        send_key = sends.get(event_id)
        if send_key is not None:
            for k in keys:
                edges.append(HardEdge(send_key, k, "message"))
    return edges


class ReplaySession:
    """Mutable replay state over one parsed trace.

    Construction is O(m * w) in the number of events m and the mx-window
    width w; each step is proportional to the removed event's out-degree.
    """

    def __init__(self, trace: ParsedTrace):
        self.trace = trace
        self.config: ClockConfig = trace.config
        self.events: dict[str, EventRecord] = {}
        for record in trace.events:
            if record.key in self.events:
                raise TraceCycleError(f"duplicate event key {record.key}")
            self.events[record.key] = record
        self._build_edges()
        self.reset()

    # -- construction -------------------------------------------------

    def _build_edges(self) -> None:
        records = list(self.events.values())
        eps = self.config.epsilon
        self.preds: dict[str, set[str]] = {r.key: set() for r in records}
        self.succs: dict[str, set[str]] = {r.key: set() for r in records}
        self.edge_kind: dict[tuple[str, str], str] = {}

        by_mx = sorted(records, key=lambda r: r.ts.mx)
        lo = 0
        for j, rj in enumerate(by_mx):
            while rj.ts.mx - by_mx[lo].ts.mx > eps:
                lo += 1
            for i in range(lo, j):
                ri = by_mx[i]
                # mx ties are scanned once per unordered pair
                verdict = compare(ri.ts, rj.ts, self.config)
                if verdict is CompareResult.BEFORE:
                    self._add_edge(ri.key, rj.key, "clock")
                elif verdict is CompareResult.AFTER:
                    self._add_edge(rj.key, ri.key, "clock")
        for edge in hard_edges(self.trace.events):
            self._add_edge(edge.src, edge.dst, edge.kind)

    def _add_edge(self, src: str, dst: str, kind: str) -> None:
        if dst not in self.preds[src] and src != dst:
            if src not in self.preds[dst]:
                self.preds[dst].add(src)
                self.succs[src].add(dst)
                self.edge_kind[(src, dst)] = kind
        elif kind != "clock":
            # a hard edge opposing a clock edge is a corrupt trace
            raise TraceCycleError(
                f"hard edge {src} -> {dst} contradicts the clock order",
                pair=(src, dst),
            )

    # -- state --------------------------------------------------------

    def reset(self) -> None:
        self.remaining: set[str] = set(self.events)
        self.replayed: list[str] = []
        self._pending: dict[str, int] = {
            key: len(preds) for key, preds in self.preds.items()
        }
        self._mx_left: dict[int, int] = {}
        for record in self.events.values():
            self._mx_left[record.ts.mx] = self._mx_left.get(record.ts.mx, 0) + 1
        self._recompute_frontier()

    def _min_mx_remaining(self) -> int | None:
        return min(self._mx_left) if self._mx_left else None

    def _eligible(self, key: str, min_mx: int | None) -> bool:
        if self._pending[key]:
            return False
        if min_mx is None:
            return True
        # a far-past remaining event orders before this one by mx alone
        return self.events[key].ts.mx <= min_mx + self.config.epsilon

    def _recompute_frontier(self) -> None:
        min_mx = self._min_mx_remaining()
        self.frontier: set[str] = {
            key for key in self.remaining if self._eligible(key, min_mx)
        }
        if self.remaining and not self.frontier:
            raise TraceCycleError(
                "order constraints contain a cycle", pair=self._find_cycle_pair()
            )

    def _find_cycle_pair(self) -> tuple[str, str] | None:
        # walk predecessor links inside the remaining set until one repeats
        start = min(self.remaining)
        seen: list[str] = []
        cur = start
        while cur not in seen:
            seen.append(cur)
            nxt = [p for p in self.preds[cur] if p in self.remaining]
            if not nxt:
                return None
            cur = min(nxt)
        idx = seen.index(cur)
        cycle = seen[idx:]
        return (cycle[-1], cycle[0]) if len(cycle) > 1 else (cur, cur)

    def sorted_frontier(self) -> list[EventRecord]:
        return sorted((self.events[k] for k in self.frontier), key=_sort_key)

    @property
    def done(self) -> bool:
        return not self.remaining

    # -- stepping -----------------------------------------------------

    def explain_block(self, key: str) -> str:
        """Human-readable reason why ``key`` is not replayable now."""
        record = self.events[key]
        for pred in sorted(self.preds[key]):
            if pred in self.remaining:
                kind = self.edge_kind.get((pred, key), "clock")
                if kind == "message":
                    return f"{pred} is the send of message {record.event_id} and must replay first"
                if kind == "node-order":
                    return f"{pred} precedes {key} in the log of node {record.node}"
                return f"{pred} has a smaller timestamp and must replay first"
        min_mx = self._min_mx_remaining()
        if min_mx is not None and record.ts.mx > min_mx + self.config.epsilon:
            return (
                f"an event at epoch {min_mx} is still pending and {key} is more than "
                f"epsilon={self.config.epsilon} epochs later"
            )
        return "event already replayed" if key not in self.remaining else "unknown"

    def choose(self, key: str) -> None:
        """Replay one frontier event.

        Frontier maintenance is incremental: only the removed event's
        successors are re-examined, unless the minimum remaining mx moved,
        which can unblock far-future events wholesale and forces a rescan.
        """
        if key not in self.events:
            raise ReplayChoiceError(f"unknown event {key}", violated_constraint="unknown event")
        if key not in self.frontier:
            reason = self.explain_block(key)
            raise ReplayChoiceError(f"{key} is not replayable yet: {reason}", reason)
        old_min = self._min_mx_remaining()
        self.remaining.discard(key)
        self.frontier.discard(key)
        self.replayed.append(key)
        mx = self.events[key].ts.mx
        self._mx_left[mx] -= 1
        if not self._mx_left[mx]:
            del self._mx_left[mx]
        for succ in self.succs[key]:
            self._pending[succ] -= 1
        min_mx = self._min_mx_remaining()
        if min_mx != old_min:
            self.frontier = {k for k in self.remaining if self._eligible(k, min_mx)}
        else:
            for succ in self.succs[key]:
                if succ in self.remaining and self._eligible(succ, min_mx):
                    self.frontier.add(succ)
        if self.remaining and not self.frontier:
            raise TraceCycleError(
                "order constraints contain a cycle", pair=self._find_cycle_pair()
            )


def brute_force_frontier(session: ReplaySession) -> set[str]:
    """Quadratic reference frontier: remaining events with no remaining
    predecessor under the clock relation or a hard edge."""
    config = session.config
    hard = {(e.src, e.dst) for e in hard_edges(session.trace.events)}
    out = set()
    for key in session.remaining:
        rec = session.events[key]
        blocked = False
        for other in session.remaining:
            if other == key:
                continue
            orec = session.events[other]
            if (other, key) in hard:
                blocked = True
                break
            if compare(orec.ts, rec.ts, config) is CompareResult.BEFORE:
                blocked = True
                break
        if not blocked:
            out.add(key)
    return out


def compute_frontier(session: ReplaySession) -> set[str]:
    return set(session.frontier)


def replay_choose(session: ReplaySession, key: str) -> ReplaySession:
    session.choose(key)
    return session


def sort_events(trace: ParsedTrace) -> list[EventRecord]:
    """Deterministic order consistent with the clock relation.

    BEFORE pairs keep their order; ties break on (mx, node, event id).
    """
    session = ReplaySession(trace)
    out: list[EventRecord] = []
    while not session.done:
        head = session.sorted_frontier()[0]
        session.choose(head.key)
        out.append(head)
    return out


def auto_replay(session: ReplaySession, seed: int = 0) -> list[str]:
    """Complete the session choosing uniformly among frontier events."""
    rng = random.Random(seed)
    while not session.done:
        choicepool = sorted(session.frontier)
        session.choose(rng.choice(choicepool))
    return list(session.replayed)


def enumerate_replays(
    trace: ParsedTrace,
    limit: int | None = None,
    max_events: int = DEFAULT_ENUMERATION_BOUND,
) -> list[tuple[str, ...]]:
    """All distinct valid replay sequences, by backtracking over frontiers.

    Refuses traces larger than ``max_events`` unless ``limit`` bounds the
    output; random sampling (:func:`auto_replay`) is the alternative at
    scale.
    """
    m = len(trace.events)
    if limit is None and m > max_events:
        raise ReplayBoundError(
            f"trace has {m} events (> {max_events}); pass a limit or use "
            "random sampling instead"
        )
    session = ReplaySession(trace)
    sequences: list[tuple[str, ...]] = []
    prefix: list[str] = []

    def backtrack() -> bool:
        if session.done:
            sequences.append(tuple(prefix))
            return limit is not None and len(sequences) >= limit
        for key in sorted(session.frontier):
            saved_pending = dict(session._pending)
            saved_remaining = set(session.remaining)
            saved_frontier = set(session.frontier)
            saved_mx = dict(session._mx_left)
            session.choose(key)
            prefix.append(key)
            stop = backtrack()
            prefix.pop()
            session._pending = saved_pending
            session.remaining = saved_remaining
            session.frontier = saved_frontier
            session._mx_left = saved_mx
            session.replayed.pop()
            if stop:
                return True
        return False

    backtrack()
    return sequences


@dataclass
class Verdict:
    ok: bool
    violation: str | None = None
    pair: tuple[str, str] | None = None


def validate_sequence(trace: ParsedTrace, sequence: list[str]) -> Verdict:
    """Check that a permutation of the trace respects every constraint."""
    keys = [r.key for r in trace.events]
    if sorted(sequence) != sorted(keys):
        raise ValueError("sequence is not a permutation of the trace events")
    by_key = {r.key: r for r in trace.events}
    position = {key: i for i, key in enumerate(sequence)}
    for edge in hard_edges(trace.events):
        if position[edge.src] > position[edge.dst]:
            return Verdict(
                False,
                f"hard edge violated: {edge.src} must replay before {edge.dst} ({edge.kind})",
                (edge.src, edge.dst),
            )
    config = trace.config
    for i, key_i in enumerate(sequence):
        for key_j in sequence[i + 1 :]:
            if compare(by_key[key_j].ts, by_key[key_i].ts, config) is CompareResult.BEFORE:
                return Verdict(
                    False,
                    f"clock order violated: {key_j} has a smaller timestamp than {key_i}",
                    (key_j, key_i),
                )
    return Verdict(True)
