from __future__ import annotations

import io

import pytest

from repcl.clock import CounterMode
from repcl.errors import TraceFormatError
from repcl.fixtures import figure_replay_trace, userview_trace
from repcl.trace import (
    EventType,
    format_ascii_event,
    load_trace,
    parse_ascii,
    parse_binary,
    parse_jsonl,
    save_trace,
    write_binary,
    write_jsonl,
)

PAPER_LINE = (
    "[(EventID=1, EventType=SEND, EventTime=[(NodeId=10.1.1.3, HLC=21, "
    "Offsets=[-15, -15, 0, -15, -15], Counters=0)], "
    "Sender=10.1.1.3, Receiver=10.1.1.4)]"
)

PAPER_LISTING = [
    PAPER_LINE,
    "[(EventID=2, EventType=SEND, EventTime=[(NodeId=10.1.1.1, HLC=42, Offsets=[0, -15, -15, -15, -15], Counters=0)], Sender=10.1.1.1, Receiver=10.1.1.2)]",
    "[(EventID=3, EventType=SEND, EventTime=[(NodeId=10.1.1.4, HLC=44, Offsets=[-15, -15, -15, 0, -15], Counters=0)], Sender=10.1.1.4, Receiver=10.1.1.5)]",
    "[(EventID=4, EventType=SEND, EventTime=[(NodeId=10.1.1.2, HLC=55, Offsets=[-15, 0, -15, -15, -15], Counters=0)], Sender=10.1.1.2, Receiver=10.1.1.3)]",
    "[(EventID=4, EventType=RECV, EventTime=[(NodeId=10.1.1.3, HLC=55, Offsets=[-15, 0, 0, -15, -15], Counters=1)], Sender=10.1.1.3, Receiver=10.1.1.2)]",
    "[(EventID=7, EventType=SEND, EventTime=[(NodeId=10.1.1.5, HLC=61, Offsets=[-15, -15, -15, -15, 0], Counters=0)], Sender=10.1.1.5, Receiver=10.1.1.1)]",
]


class TestAsciiFormat:
    def test_paper_line(self):
        trace = parse_ascii([PAPER_LINE])
        record = trace.events[0]
        assert record.event_id == 1
        assert record.event_type is EventType.SEND
        assert record.ts.mx == 21
        assert record.ts.offsets == {2: 0}
        assert record.ts.owner == 2
        assert trace.config.epsilon == 15
        assert trace.config.counter_mode is CounterMode.SUM

    def test_listing_node_roster(self):
        trace = parse_ascii(PAPER_LISTING)
        assert trace.nodes == [f"10.1.1.{i}" for i in range(1, 6)]
        recv = [r for r in trace.events if r.event_type is EventType.RECV][0]
        # listing pairs are (this node, peer): the message went 2 -> 3
        assert recv.node == "10.1.1.3"
        assert recv.sender == "10.1.1.2"
        assert recv.receiver == "10.1.1.3"

    def test_print_reproduces_listing(self):
        trace = parse_ascii(PAPER_LISTING)
        for raw, record in zip(PAPER_LISTING, trace.events):
            assert format_ascii_event(record, trace) == raw

    def test_garbage_line_number(self):
        with pytest.raises(TraceFormatError) as err:
            parse_ascii([PAPER_LINE, "not a listing line"])
        assert err.value.line == 2


class TestJsonl:
    def test_round_trip(self):
        trace = figure_replay_trace(5)
        buf = io.StringIO()
        write_jsonl(trace, buf)
        back = parse_jsonl(buf.getvalue().splitlines())
        assert back.config == trace.config
        assert back.nodes == trace.nodes
        assert back.events == trace.events

    def test_sum_mode_round_trip(self):
        trace = parse_ascii(PAPER_LISTING)
        buf = io.StringIO()
        write_jsonl(trace, buf)
        back = parse_jsonl(buf.getvalue().splitlines())
        assert back.events == trace.events
        assert "counter_sum" in buf.getvalue().splitlines()[1]

    def test_missing_header(self):
        line = '{"event_id": 1}'
        with pytest.raises(TraceFormatError):
            parse_jsonl([line])

    def test_malformed_line_is_numbered(self):
        trace = figure_replay_trace(5)
        buf = io.StringIO()
        write_jsonl(trace, buf)
        lines = buf.getvalue().splitlines()
        lines[2] = "{broken"
        with pytest.raises(TraceFormatError) as err:
            parse_jsonl(lines)
        assert err.value.line == 3

    def test_owner_mismatch_rejected(self):
        trace = figure_replay_trace(5)
        buf = io.StringIO()
        write_jsonl(trace, buf)
        lines = buf.getvalue().splitlines()
        lines[1] = lines[1].replace('"node": "P1"', '"node": "P2"')
        with pytest.raises(TraceFormatError):
            parse_jsonl(lines)


class TestBinary:
    def test_round_trip(self):
        trace = userview_trace()
        buf = io.BytesIO()
        write_binary(trace, buf)
        buf.seek(0)
        back = parse_binary(buf)
        assert back.config == trace.config
        assert back.events == trace.events

    def test_bad_magic(self):
        with pytest.raises(TraceFormatError):
            parse_binary(io.BytesIO(b"JUNK...."))

    def test_truncated(self):
        trace = userview_trace()
        buf = io.BytesIO()
        write_binary(trace, buf)
        blob = buf.getvalue()[:-3]
        with pytest.raises(TraceFormatError):
            parse_binary(io.BytesIO(blob))


class TestLoadSave:
    def test_sniffs_formats(self, tmp_path):
        trace = figure_replay_trace(20)
        j = tmp_path / "t.jsonl"
        b = tmp_path / "t.bin"
        a = tmp_path / "t.txt"
        save_trace(trace, str(j))
        save_trace(trace, str(b), binary=True)
        a.write_text("\n".join(PAPER_LISTING) + "\n", encoding="utf-8")
        assert load_trace(str(j)).events == trace.events
        assert load_trace(str(b)).events == trace.events
        assert len(load_trace(str(a)).events) == len(PAPER_LISTING)

    def test_empty_file_is_empty_trace(self, tmp_path):
        p = tmp_path / "empty.jsonl"
        p.write_text("", encoding="utf-8")
        assert load_trace(str(p)).events == []
