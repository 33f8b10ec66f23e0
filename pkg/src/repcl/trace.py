"""Trace records and file formats.

The canonical interchange format is JSONL: a config header line followed by
one event per line.  Two other formats are supported: the bracketed ASCII
listing produced by older tracer prototypes (read-only; negative printed
offsets mean "absent", i.e. offset = epsilon) and a binary format embedding
the packed word layout.
"""
from __future__ import annotations

import enum
import json
import re
import struct
from dataclasses import dataclass, field
from typing import IO, Iterable

from .clock import ClockConfig, CounterMode, RepClTimestamp, validate_timestamp
from .errors import TraceFormatError
from .packed import PackedTimestamp, decode_timestamp, encode_timestamp, encoded_words

BINARY_MAGIC = b"RPCLTR01"
_NO_PEER = 0xFFFF


class EventType(str, enum.Enum):
    SEND = "SEND"
    RECV = "RECV"
    LOCAL = "LOCAL"


@dataclass(frozen=True)
class EventRecord:
    """One logged event.

    ``event_id`` is the message id: a RECV shares it with its SEND.  ``node``
    is where the event happened (the sender for SEND/LOCAL, the receiver for
    RECV).
    """

    event_id: int
    event_type: EventType
    node: str
    ts: RepClTimestamp
    sender: str
    receiver: str | None = None

    @property
    def key(self) -> str:
        return f"{self.event_id}:{self.event_type.value}"


@dataclass
class ParsedTrace:
    config: ClockConfig
    nodes: list[str]
    events: list[EventRecord] = field(default_factory=list)

    def node_index(self, node: str) -> int:
        return self.nodes.index(node)


def _check_record(record: EventRecord, trace: ParsedTrace, line: int | None = None) -> None:
    if record.node not in trace.nodes:
        raise TraceFormatError(f"unknown node {record.node!r}", line)
    try:
        validate_timestamp(record.ts, trace.config)
    except Exception as exc:
        raise TraceFormatError(str(exc), line) from exc
    if record.ts.owner != trace.nodes.index(record.node):
        raise TraceFormatError(
            f"timestamp owner {record.ts.owner} does not match node {record.node!r}", line
        )
    if record.event_type is EventType.RECV:
        if record.receiver != record.node:
            raise TraceFormatError("RECV events must happen on the receiver", line)
    elif record.sender != record.node:
        raise TraceFormatError(f"{record.event_type.value} events must happen on the sender", line)


# ---------------------------------------------------------------------------
# JSONL

def config_to_json(config: ClockConfig, nodes: list[str]) -> dict:
    return {
        "format": "repcl-trace",
        "version": 1,
        "n": config.n,
        "epsilon": config.epsilon,
        "interval_us": config.interval_us,
        "offset_bits": config.offset_bits,
        "counter_bits": config.counter_bits,
        "counter_mode": config.counter_mode.value,
        "nodes": nodes,
    }


def config_from_json(head: dict) -> tuple[ClockConfig, list[str]]:
    config = ClockConfig(
        n=head["n"],
        epsilon=head["epsilon"],
        interval_us=head["interval_us"],
        offset_bits=head.get("offset_bits", 0),
        counter_bits=head.get("counter_bits", 8),
        counter_mode=CounterMode(head.get("counter_mode", "full")),
    )
    nodes = list(head.get("nodes") or (str(i) for i in range(config.n)))
    return config, nodes


def _sorted_intkey(d: dict[int, int]) -> dict[str, int]:
    return {str(k): d[k] for k in sorted(d)}


def event_to_json(record: EventRecord, config: ClockConfig) -> dict:
    out: dict = {
        "event_id": record.event_id,
        "event_type": record.event_type.value,
        "node": record.node,
        "mx": record.ts.mx,
        "offsets": _sorted_intkey(record.ts.offsets),
    }
    if config.counter_mode is CounterMode.SUM:
        out["counter_sum"] = record.ts.counter_sum
    else:
        out["counters"] = _sorted_intkey(record.ts.counters)
    out["sender"] = record.sender
    out["receiver"] = record.receiver
    return out


def event_from_json(obj: dict, trace: ParsedTrace, line: int | None = None) -> EventRecord:
    try:
        node = obj["node"]
        ts = RepClTimestamp(
            mx=obj["mx"],
            owner=trace.nodes.index(node) if node in trace.nodes else -1,
            offsets={int(k): v for k, v in obj.get("offsets", {}).items()},
            counters={int(k): v for k, v in obj.get("counters", {}).items() if v},
            counter_sum=obj.get("counter_sum", 0),
        )
        record = EventRecord(
            event_id=obj["event_id"],
            event_type=EventType(obj["event_type"]),
            node=node,
            ts=ts,
            sender=obj["sender"],
            receiver=obj.get("receiver"),
        )
    except TraceFormatError:
        raise
    except Exception as exc:
        raise TraceFormatError(f"bad event record: {exc}", line) from exc
    _check_record(record, trace, line)
    return record


def write_jsonl(trace: ParsedTrace, fh: IO[str]) -> None:
    fh.write(json.dumps(config_to_json(trace.config, trace.nodes)) + "\n")
    for record in trace.events:
        fh.write(json.dumps(event_to_json(record, trace.config)) + "\n")


def parse_jsonl(lines: Iterable[str]) -> ParsedTrace:
    trace: ParsedTrace | None = None
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"invalid JSON: {exc.msg}", lineno) from exc
        if trace is None:
            if obj.get("format") != "repcl-trace":
                raise TraceFormatError("first line must be the repcl-trace config header", 1)
            try:
                config, nodes = config_from_json(obj)
            except Exception as exc:
                raise TraceFormatError(f"bad config header: {exc}", lineno) from exc
            trace = ParsedTrace(config=config, nodes=nodes)
            continue
        trace.events.append(event_from_json(obj, trace, lineno))
    if trace is None:
        raise TraceFormatError("empty trace: missing config header", 1)
    return trace


# ---------------------------------------------------------------------------
# Legacy bracketed ASCII listing (read + print)

_ASCII_RE = re.compile(
    r"\[\(EventID=(?P<id>\d+),\s*EventType=(?P<type>\w+),\s*"
    r"EventTime=\[\(NodeId=(?P<node>[\w.:-]+),\s*HLC=(?P<mx>\d+),\s*"
    r"Offsets=\[(?P<offsets>[^\]]*)\],\s*Counters=(?P<counters>[^)]+)\)\],\s*"
    r"Sender=(?P<sender>[\w.:-]+),\s*Receiver=(?P<receiver>[\w.:-]+)\)\]"
)


def _natural_node_key(name: str) -> tuple:
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", name))


def parse_ascii(lines: Iterable[str], interval_us: int = 1) -> ParsedTrace:
    """Parse the bracketed listing format.

    The listing prints a dense offsets array using ``-epsilon`` for absent
    entries; epsilon is recovered from those negatives.  Scalar counters mean
    sum counter mode; a bracketed list means full mode.
    """
    rows = []
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        m = _ASCII_RE.match(raw)
        if m is None:
            raise TraceFormatError("unrecognized listing line", lineno)
        offsets = [int(tok) for tok in m["offsets"].split(",") if tok.strip()]
        ctr_text = m["counters"].strip()
        if ctr_text.startswith("["):
            counters = [int(tok) for tok in ctr_text.strip("[]").split(",") if tok.strip()]
        else:
            counters = None  # scalar sum
        rows.append((lineno, m, offsets, counters, ctr_text))

    if not rows:
        raise TraceFormatError("empty trace", 1)

    n = len(rows[0][2])
    negatives = {-v for _, _, offs, _, _ in rows for v in offs if v < 0}
    if not negatives:
        # nothing absent anywhere: pick the smallest skew that fits
        epsilon = max((v for _, _, offs, _, _ in rows for v in offs), default=0) + 1
    elif len(negatives) > 1:
        raise TraceFormatError(f"inconsistent absent markers {sorted(negatives)}")
    else:
        epsilon = negatives.pop()

    names = sorted({m["node"] for _, m, _, _, _ in rows}, key=_natural_node_key)
    if len(names) > n:
        raise TraceFormatError(f"{len(names)} nodes seen but offsets arrays have length {n}")
    # a line with a single stored offset anchors its node to that array index
    anchors: dict[str, int] = {}
    for lineno, m, offsets, _, _ in rows:
        present = [k for k, v in enumerate(offsets) if v >= 0]
        if len(present) == 1:
            node, idx = m["node"], present[0]
            if anchors.setdefault(node, idx) != idx:
                raise TraceFormatError(
                    f"node {node} appears at conflicting offset positions", lineno
                )
    taken = set(anchors.values())
    if len(taken) != len(anchors):
        raise TraceFormatError("two nodes anchored to the same offset position")
    free_idx = (i for i in range(n) if i not in taken)
    roster: dict[int, str] = {idx: node for node, idx in anchors.items()}
    for name in names:
        if name not in anchors:
            roster[next(free_idx)] = name
    nodes = [roster.get(i, f"node{i}") for i in range(n)]

    mode = CounterMode.FULL if rows[0][3] is not None else CounterMode.SUM
    config = ClockConfig(
        n=n, epsilon=epsilon, interval_us=interval_us, counter_mode=mode
    )
    trace = ParsedTrace(config=config, nodes=nodes)
    for lineno, m, offsets, counters, _ in rows:
        if len(offsets) != n:
            raise TraceFormatError(f"offsets array has length {len(offsets)}, expected {n}", lineno)
        if (counters is None) != (mode is CounterMode.SUM):
            raise TraceFormatError("mixed counter styles in one trace", lineno)
        node = m["node"]
        event_type = EventType(m["type"])
        # listing convention: the pair is (this node, peer)
        peer = m["receiver"]
        if event_type is EventType.RECV:
            sender, receiver = peer, node
        else:
            sender, receiver = node, (None if peer == node else peer)
        ts = RepClTimestamp(
            mx=int(m["mx"]),
            owner=nodes.index(node),
            offsets={k: v for k, v in enumerate(offsets) if v >= 0},
            counters={k: v for k, v in enumerate(counters or []) if v},
            counter_sum=int(m["counters"]) if counters is None else 0,
        )
        record = EventRecord(
            event_id=int(m["id"]),
            event_type=event_type,
            node=node,
            ts=ts,
            sender=sender,
            receiver=receiver,
        )
        _check_record(record, trace, lineno)
        trace.events.append(record)
    return trace


def format_ascii_event(record: EventRecord, trace: ParsedTrace) -> str:
    """Render one event in the bracketed listing style."""
    config = trace.config
    eps = config.epsilon
    ts = record.ts
    offsets = ", ".join(str(ts.offsets.get(k, -eps)) for k in range(config.n))
    if config.counter_mode is CounterMode.SUM:
        counters = str(ts.counter_sum)
    else:
        counters = "[" + ", ".join(str(ts.counters.get(k, 0)) for k in range(config.n)) + "]"
    if record.event_type is EventType.RECV:
        pair = f"Sender={record.node}, Receiver={record.sender}"
    else:
        pair = f"Sender={record.sender}, Receiver={record.receiver or record.node}"
    return (
        f"[(EventID={record.event_id}, EventType={record.event_type.value}, "
        f"EventTime=[(NodeId={record.node}, HLC={ts.mx}, Offsets=[{offsets}], "
        f"Counters={counters})], {pair})]"
    )


# ---------------------------------------------------------------------------
# Binary format: magic, JSON header line, fixed-size records with packed words

def _saturate_counters(ts: RepClTimestamp, config: ClockConfig) -> RepClTimestamp:
    cap = (1 << config.counter_bits) - 1
    if ts.counter_sum <= cap and all(c <= cap for c in ts.counters.values()):
        return ts
    return RepClTimestamp(
        mx=ts.mx,
        owner=ts.owner,
        offsets=dict(ts.offsets),
        counters={k: min(c, cap) for k, c in ts.counters.items()},
        counter_sum=min(ts.counter_sum, cap),
    )


def write_binary(
    trace: ParsedTrace, fh: IO[bytes], sum_placement: str = "mx_word", saturate: bool = True
) -> None:
    """Emit the packed binary format.

    Counters beyond the configured lane width are clamped by default; the
    packed encoding itself refuses overflow.
    """
    head = config_to_json(trace.config, trace.nodes)
    head["sum_placement"] = sum_placement
    fh.write(BINARY_MAGIC)
    fh.write(json.dumps(head).encode() + b"\n")
    nwords = encoded_words(trace.config, sum_placement)
    idx = {name: i for i, name in enumerate(trace.nodes)}
    for record in trace.events:
        ts = _saturate_counters(record.ts, trace.config) if saturate else record.ts
        packed = encode_timestamp(ts, trace.config, sum_placement)
        receiver = _NO_PEER if record.receiver is None else idx[record.receiver]
        fh.write(
            struct.pack(
                "<IBHHH",
                record.event_id,
                list(EventType).index(record.event_type),
                idx[record.node],
                idx[record.sender],
                receiver,
            )
        )
        fh.write(struct.pack(f"<{nwords}I", *packed.words))


def parse_binary(fh: IO[bytes]) -> ParsedTrace:
    magic = fh.read(len(BINARY_MAGIC))
    if magic != BINARY_MAGIC:
        raise TraceFormatError("not a repcl binary trace (bad magic)")
    header = fh.readline()
    try:
        head = json.loads(header.decode())
        config, nodes = config_from_json(head)
    except Exception as exc:
        raise TraceFormatError(f"bad binary header: {exc}") from exc
    sum_placement = head.get("sum_placement", "mx_word")
    trace = ParsedTrace(config=config, nodes=nodes)
    nwords = encoded_words(config, sum_placement)
    rec_head = struct.Struct("<IBHHH")
    rec_words = struct.Struct(f"<{nwords}I")
    index = 0
    while True:
        blob = fh.read(rec_head.size)
        if not blob:
            break
        index += 1
        if len(blob) < rec_head.size:
            raise TraceFormatError(f"truncated record {index}")
        event_id, type_idx, node_i, sender_i, receiver_i = rec_head.unpack(blob)
        wblob = fh.read(rec_words.size)
        if len(wblob) < rec_words.size:
            raise TraceFormatError(f"truncated record {index}")
        packed = PackedTimestamp(rec_words.unpack(wblob))
        ts = decode_timestamp(packed, config, owner=node_i, sum_placement=sum_placement)
        record = EventRecord(
            event_id=event_id,
            event_type=list(EventType)[type_idx],
            node=nodes[node_i],
            ts=ts,
            sender=nodes[sender_i],
            receiver=None if receiver_i == _NO_PEER else nodes[receiver_i],
        )
        trace.events.append(record)
    return trace


# ---------------------------------------------------------------------------

def load_trace(path: str) -> ParsedTrace:
    """Read a trace file, sniffing binary / JSONL / ASCII listing."""
    with open(path, "rb") as fh:
        start = fh.read(len(BINARY_MAGIC))
    if start == BINARY_MAGIC:
        with open(path, "rb") as fh:
            return parse_binary(fh)
    with open(path, encoding="utf-8") as fh:
        body = fh.read()
    if not body.strip():
        return ParsedTrace(config=ClockConfig(n=1, epsilon=1), nodes=["node0"])
    lines = body.splitlines()
    if lines[0].lstrip().startswith("{"):
        return parse_jsonl(lines)
    return parse_ascii(lines)


def save_trace(trace: ParsedTrace, path: str, binary: bool = False) -> None:
    if binary:
        with open(path, "wb") as fh:
            write_binary(trace, fh)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            write_jsonl(trace, fh)
