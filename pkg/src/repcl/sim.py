"""Deterministic discrete-event simulator for replay-clock studies.

Every process carries a noisy node-local clock bounded within the configured
skew of simulator time, a replay clock, and (as a test oracle, never
serialized) a dense vector clock plus the maximum physical clock reading it
is transitively aware of.  Per tick, each process first delivers due
messages, then fires with probability alpha percent, splitting between a
send to a uniformly random peer and a local event.

Each process draws from its own seeded RNG substream, so its behaviour is
stable when unrelated parameters change.
"""
from __future__ import annotations

import enum
import heapq
import random
import warnings
from dataclasses import dataclass, field, replace

from .clock import (
    ClockConfig,
    CompareResult,
    CounterMode,
    RepClTimestamp,
    advance_receive,
    advance_send_local,
    compare,
    epoch_of,
)
from .errors import SimulationInvariantError
from .trace import EventRecord, EventType, ParsedTrace


class Topology(str, enum.Enum):
    UNIFORM_RANDOM_PEER = "uniform-random-peer"


@dataclass(frozen=True)
class SimParams:
    config: ClockConfig
    delta_us: int = 2
    alpha_pct: float = 10.0
    ticks: int = 10_000
    tick_us: int = 1
    seed: int = 0
    local_ratio: float = 0.5
    topology: Topology = Topology.UNIFORM_RANDOM_PEER
    skew_epsilon: int | None = None      # noise bound in epochs; default config.epsilon
    reference_epsilon: int | None = None  # second clock for partial-replay studies
    allow_delta_over_skew: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.alpha_pct <= 100:
            raise ValueError("alpha_pct must be within 0..100")
        if self.ticks < 0 or self.tick_us < 1 or self.delta_us < 0:
            raise ValueError("ticks, tick_us, delta_us must be sane")
        if not 0 <= self.local_ratio <= 1:
            raise ValueError("local_ratio must be within 0..1")
        if self.delta_us > self.skew_us and not self.allow_delta_over_skew:
            warnings.warn(
                f"delta {self.delta_us}us exceeds the clock skew {self.skew_us}us; "
                "offsets will rarely be stored (pass allow_delta_over_skew to silence)",
                stacklevel=2,
            )

    @property
    def skew_us(self) -> int:
        eps = self.skew_epsilon if self.skew_epsilon is not None else self.config.epsilon
        return eps * self.config.interval_us


@dataclass
class _Message:
    event_id: int
    sender: int
    receiver: int
    ts: RepClTimestamp
    vc: tuple[int, ...]
    mxph: int
    deliver_at: int
    seq: int
    ref_ts: RepClTimestamp | None = None

    def __lt__(self, other: "_Message") -> bool:
        return (self.deliver_at, self.seq) < (other.deliver_at, other.seq)


@dataclass
class ProcessState:
    pid: int
    rng: random.Random
    repcl: RepClTimestamp
    nt_us: int = 0
    ref_repcl: RepClTimestamp | None = None
    vc: list[int] = field(default_factory=list)
    mxph: int = 0
    inbox: list[_Message] = field(default_factory=list)


@dataclass
class EventOracle:
    """Ground-truth bookkeeping for one logged event (test oracle only)."""

    vc: tuple[int, ...]
    mxph: int
    ref_ts: RepClTimestamp | None = None


@dataclass
class SimMetrics:
    run_id: str
    n: int
    epsilon: int
    interval_us: int
    delta_us: int
    alpha: float
    events: int = 0
    sends: int = 0
    recvs: int = 0
    locals: int = 0
    avg_offsets_stored: float = 0.0
    p99_offsets_stored: int = 0
    pct_events_with_counters: float = 0.0
    max_counter: int = 0
    max_observed_skew_us: int = 0
    avg_offsets_remote: float = 0.0

    CSV_HEADER = (
        "run_id,n,epsilon,interval_us,delta_us,alpha,events,sends,recvs,locals,"
        "avg_offsets_stored,p99_offsets_stored,pct_events_with_counters,"
        "max_counter,max_observed_skew_us,avg_offsets_remote"
    )

    def csv_row(self) -> str:
        return (
            f"{self.run_id},{self.n},{self.epsilon},{self.interval_us},"
            f"{self.delta_us},{self.alpha:g},{self.events},{self.sends},"
            f"{self.recvs},{self.locals},{self.avg_offsets_stored:.6f},"
            f"{self.p99_offsets_stored},{self.pct_events_with_counters:.6f},"
            f"{self.max_counter},{self.max_observed_skew_us},"
            f"{self.avg_offsets_remote:.6f}"
        )


@dataclass
class SimResult:
    params: SimParams
    trace: ParsedTrace
    oracle: list[EventOracle]
    metrics: SimMetrics


def process_rng(seed: int, pid: int) -> random.Random:
    """Independent, reproducible substream for one process."""
    return random.Random(f"repcl-sim:{seed}:{pid}")


def noisy_clock_read(nt_prev: int, sim_time_us: int, skew_us: int, rng: random.Random) -> int:
    """Monotone noisy clock: uniform in [max(prev, now), now + skew]."""
    lo = max(nt_prev, sim_time_us)
    hi = sim_time_us + skew_us
    if lo >= hi:
        return lo
    return rng.randint(lo, hi)


def decide_send(rng: random.Random, alpha_pct: float) -> bool:
    """Fire with probability alpha percent (a [0,100) draw under alpha)."""
    if not 0 <= alpha_pct <= 100:
        raise ValueError("alpha_pct must be within 0..100")
    return rng.uniform(0.0, 100.0) < alpha_pct


class Simulation:
    def __init__(self, params: SimParams):
        self.params = params
        self.config = params.config
        n = self.config.n
        self.now = 0
        self.tick = 0
        self.next_event_id = 1
        self._msg_seq = 0
        self.processes = [
            ProcessState(
                pid=i,
                rng=process_rng(params.seed, i),
                repcl=RepClTimestamp.initial(i),
                vc=[0] * n,
            )
            for i in range(n)
        ]
        self.ref_config: ClockConfig | None = None
        if params.reference_epsilon is not None:
            self.ref_config = replace(
                self.config, epsilon=params.reference_epsilon, offset_bits=0
            )
            for p in self.processes:
                p.ref_repcl = RepClTimestamp.initial(p.pid)
        self.records: list[EventRecord] = []
        self.oracle: list[EventOracle] = []
        self.max_observed_skew = 0
        self._offsets_per_event: list[int] = []
        self._counter_events = 0
        self._max_counter = 0
        self._counts = {EventType.SEND: 0, EventType.RECV: 0, EventType.LOCAL: 0}

    # -- helpers -------------------------------------------------------

    def _emit(
        self,
        event_type: EventType,
        proc: ProcessState,
        event_id: int,
        sender: int,
        receiver: int | None,
    ) -> None:
        ts = proc.repcl
        record = EventRecord(
            event_id=event_id,
            event_type=event_type,
            node=str(proc.pid),
            ts=ts,
            sender=str(sender),
            receiver=None if receiver is None else str(receiver),
        )
        self.records.append(record)
        self.oracle.append(EventOracle(vc=tuple(proc.vc), mxph=proc.mxph, ref_ts=proc.ref_repcl))
        self._counts[event_type] += 1
        self._offsets_per_event.append(ts.stored_offsets())
        if ts.has_counters():
            self._counter_events += 1
        self._max_counter = max(self._max_counter, ts.max_counter())

    def _deliver(self, proc: ProcessState) -> None:
        epoch_now = epoch_of(proc.nt_us, self.config)
        while proc.inbox and proc.inbox[0].deliver_at <= self.now:
            msg = heapq.heappop(proc.inbox)
            sent_ts = msg.ts
            proc.repcl = advance_receive(proc.repcl, sent_ts, epoch_now, self.config)
            if self.ref_config is not None and msg.ref_ts is not None:
                proc.ref_repcl = advance_receive(
                    proc.ref_repcl,  # type: ignore[arg-type]
                    msg.ref_ts,
                    epoch_of(proc.nt_us, self.ref_config),
                    self.ref_config,
                )
            for k, v in enumerate(msg.vc):
                if v > proc.vc[k]:
                    proc.vc[k] = v
            proc.vc[proc.pid] += 1
            proc.mxph = max(proc.mxph, msg.mxph, proc.nt_us)
            self._emit(EventType.RECV, proc, msg.event_id, msg.sender, msg.receiver)
            if compare(sent_ts, proc.repcl, self.config) is not CompareResult.BEFORE:
                raise SimulationInvariantError(
                    f"receive of message {msg.event_id} does not dominate its send"
                )

    def _fire(self, proc: ProcessState) -> None:
        epoch_now = epoch_of(proc.nt_us, self.config)
        is_local = proc.rng.random() < self.params.local_ratio
        proc.repcl = advance_send_local(proc.repcl, epoch_now, self.config)
        if self.ref_config is not None:
            proc.ref_repcl = advance_send_local(
                proc.ref_repcl,  # type: ignore[arg-type]
                epoch_of(proc.nt_us, self.ref_config),
                self.ref_config,
            )
        proc.vc[proc.pid] += 1
        proc.mxph = max(proc.mxph, proc.nt_us)
        event_id = self.next_event_id
        self.next_event_id += 1
        if is_local or self.config.n == 1:
            self._emit(EventType.LOCAL, proc, event_id, proc.pid, None)
            return
        pick = proc.rng.randrange(self.config.n - 1)
        target = pick if pick < proc.pid else pick + 1
        self._emit(EventType.SEND, proc, event_id, proc.pid, target)
        self._msg_seq += 1
        heapq.heappush(
            self.processes[target].inbox,
            _Message(
                event_id=event_id,
                sender=proc.pid,
                receiver=target,
                ts=proc.repcl,
                vc=tuple(proc.vc),
                mxph=proc.mxph,
                deliver_at=self.now + self.params.delta_us,
                seq=self._msg_seq,
                ref_ts=proc.ref_repcl,
            ),
        )

    # -- main loop -----------------------------------------------------

    def step(self) -> None:
        """Advance one tick: refresh clocks, deliver, then maybe fire."""
        skew = self.params.skew_us
        nts = []
        for proc in self.processes:
            proc.nt_us = noisy_clock_read(proc.nt_us, self.now, skew, proc.rng)
            nts.append(proc.nt_us)
        spread = max(nts) - min(nts)
        if spread > skew:
            raise SimulationInvariantError(
                f"clock skew {spread}us exceeds the bound {skew}us at tick {self.tick}"
            )
        if spread > self.max_observed_skew:
            self.max_observed_skew = spread
        for proc in self.processes:
            self._deliver(proc)
            if decide_send(proc.rng, self.params.alpha_pct):
                self._fire(proc)
        self.now += self.params.tick_us
        self.tick += 1

    def run(self) -> SimResult:
        for _ in range(self.params.ticks):
            self.step()
        return SimResult(
            params=self.params,
            trace=ParsedTrace(
                config=self.config,
                nodes=[str(i) for i in range(self.config.n)],
                events=self.records,
            ),
            oracle=self.oracle,
            metrics=self._metrics(),
        )

    def _metrics(self) -> SimMetrics:
        counts = self._offsets_per_event
        events = len(counts)
        avg = sum(counts) / events if events else 0.0
        remote = (
            sum(c - (1 if self.records[i].ts.owner in self.records[i].ts.offsets else 0)
                for i, c in enumerate(counts)) / events
            if events
            else 0.0
        )
        p99 = 0
        if counts:
            ordered = sorted(counts)
            p99 = ordered[min(events - 1, max(0, -(-99 * events // 100) - 1))]
        return SimMetrics(
            run_id=str(self.params.seed),
            n=self.config.n,
            epsilon=self.config.epsilon,
            interval_us=self.config.interval_us,
            delta_us=self.params.delta_us,
            alpha=self.params.alpha_pct,
            events=events,
            sends=self._counts[EventType.SEND],
            recvs=self._counts[EventType.RECV],
            locals=self._counts[EventType.LOCAL],
            avg_offsets_stored=avg,
            p99_offsets_stored=p99,
            pct_events_with_counters=(self._counter_events / events if events else 0.0),
            max_counter=self._max_counter,
            max_observed_skew_us=self.max_observed_skew,
            avg_offsets_remote=remote,
        )


def run(params: SimParams) -> SimResult:
    """Run one simulation to completion; deterministic given the seed."""
    return Simulation(params).run()
