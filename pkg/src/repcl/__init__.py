"""Replay clock toolkit.

Timestamps that order what must be ordered and leave genuinely concurrent
events reorderable, plus the machinery around them: a packed wire encoding,
a deterministic network simulator, overhead metrics and feasibility sweeps,
trace replay (random, exhaustive, interactive), and an HTTP replay service.
"""
from .clock import (
    ClockConfig,
    CompareResult,
    CounterMode,
    RepClTimestamp,
    advance_receive,
    advance_send_local,
    compare,
    epoch_of,
    equal_offset,
    knowledge_of,
    knowledge_vector,
    merge_same_epoch,
    shift,
)
from .errors import RepClError
from .packed import PackedTimestamp, decode_timestamp, encode_timestamp
from .replay import (
    ReplaySession,
    auto_replay,
    compute_frontier,
    enumerate_replays,
    sort_events,
    validate_sequence,
)
from .sim import SimParams, SimResult, run
from .trace import EventRecord, EventType, ParsedTrace, load_trace, save_trace

__all__ = [
    "ClockConfig",
    "CompareResult",
    "CounterMode",
    "EventRecord",
    "EventType",
    "PackedTimestamp",
    "ParsedTrace",
    "RepClError",
    "RepClTimestamp",
    "ReplaySession",
    "SimParams",
    "SimResult",
    "advance_receive",
    "advance_send_local",
    "auto_replay",
    "compare",
    "compute_frontier",
    "decode_timestamp",
    "encode_timestamp",
    "enumerate_replays",
    "epoch_of",
    "equal_offset",
    "knowledge_of",
    "knowledge_vector",
    "load_trace",
    "merge_same_epoch",
    "run",
    "save_trace",
    "shift",
    "sort_events",
    "validate_sequence",
]
__version__ = "0.1.0"
