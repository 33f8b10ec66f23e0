"""Replay-clock core: timestamp value type, update rules, and comparison.

A timestamp is ``<mx, offsets, counters>`` where ``mx`` is the highest epoch
the owning process is aware of and ``offsets[k]`` records how far behind
``mx`` its knowledge of process ``k`` is.  An absent entry means the offset
equals ``epsilon`` (the skew bound in epochs): clock synchronization already
guarantees that much, so nothing is stored.  Counters break ties between
events that share ``mx`` and all offsets.

All operations are pure functions over immutable values.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ConfigError, IncompatibleTimestampError, InvalidShiftError

MAX_PROCESSES = 64  # bitmap must fit one machine word


class CounterMode(str, enum.Enum):
    FULL = "full"   # one counter per process, vector comparison
    SUM = "sum"     # single scalar holding the sum of all counters


@dataclass(frozen=True)
class ClockConfig:
    """System parameters the clock runs under.

    ``offset_bits`` defaults to the smallest width that can hold every
    storable offset value ``0..epsilon-1``.
    """

    n: int
    epsilon: int
    interval_us: int = 1
    offset_bits: int = 0
    counter_bits: int = 8
    counter_mode: CounterMode = CounterMode.FULL

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_PROCESSES:
            raise ConfigError(f"n must be in 1..{MAX_PROCESSES}, got {self.n}")
        if self.epsilon < 1:
            raise ConfigError(f"epsilon must be >= 1, got {self.epsilon}")
        if self.interval_us < 1:
            raise ConfigError(f"interval_us must be >= 1, got {self.interval_us}")
        if self.offset_bits == 0:
            object.__setattr__(self, "offset_bits", self.epsilon.bit_length())
        if self.offset_bits < self.epsilon.bit_length():
            raise ConfigError(
                f"offset_bits={self.offset_bits} cannot hold offsets up to "
                f"{self.epsilon - 1} (need {self.epsilon.bit_length()})"
            )
        if self.counter_bits < 1:
            raise ConfigError("counter_bits must be >= 1")
        if not isinstance(self.counter_mode, CounterMode):
            object.__setattr__(self, "counter_mode", CounterMode(self.counter_mode))

    @property
    def clockskew_us(self) -> int:
        """Maximum physical clock skew, epsilon * interval."""
        return self.epsilon * self.interval_us


class CompareResult(enum.Enum):
    BEFORE = "before"
    AFTER = "after"
    CONCURRENT = "concurrent"
    EQUAL = "equal"


@dataclass(frozen=True)
class RepClTimestamp:
    """One replay-clock value.

    ``offsets`` holds only values in ``0..epsilon-1``; a missing key decodes
    as offset ``epsilon``.  ``counters`` holds only nonzero values (full
    counter mode); ``counter_sum`` is used instead in sum mode.
    """

    mx: int
    owner: int
    offsets: dict[int, int] = field(default_factory=dict)
    counters: dict[int, int] = field(default_factory=dict)
    counter_sum: int = 0

    @classmethod
    def initial(cls, owner: int) -> RepClTimestamp:
        """Pre-first-event state of a process (never logged)."""
        return cls(mx=0, owner=owner)

    def offset_of(self, k: int, epsilon: int) -> int:
        return self.offsets.get(k, epsilon)

    def counter_of(self, k: int) -> int:
        return self.counters.get(k, 0)

    def stored_offsets(self) -> int:
        """Number of offsets physically present (the bitmap popcount)."""
        return len(self.offsets)

    def has_counters(self) -> bool:
        return bool(self.counters) or self.counter_sum > 0

    def max_counter(self) -> int:
        per_process = max(self.counters.values(), default=0)
        return max(per_process, self.counter_sum)


def validate_timestamp(ts: RepClTimestamp, config: ClockConfig) -> None:
    """Raise if ``ts`` cannot have been produced under ``config``."""
    if not 0 <= ts.owner < config.n:
        raise IncompatibleTimestampError(
            f"owner {ts.owner} out of range for n={config.n}"
        )
    if ts.mx < 0:
        raise IncompatibleTimestampError("mx must be non-negative")
    for k, off in ts.offsets.items():
        if not 0 <= k < config.n:
            raise IncompatibleTimestampError(f"offset key {k} out of range for n={config.n}")
        if not 0 <= off < config.epsilon:
            raise IncompatibleTimestampError(
                f"stored offset {off} outside 0..{config.epsilon - 1}"
            )
    for k, c in ts.counters.items():
        if not 0 <= k < config.n:
            raise IncompatibleTimestampError(f"counter key {k} out of range for n={config.n}")
        if c < 0:
            raise IncompatibleTimestampError("counters must be non-negative")
    if config.counter_mode is CounterMode.SUM:
        if ts.counters:
            raise IncompatibleTimestampError("sum mode timestamps carry no counter vector")
    elif ts.counter_sum:
        raise IncompatibleTimestampError("full mode timestamps carry no counter_sum")


def epoch_of(pt_us: int, config: ClockConfig) -> int:
    """Epoch of a physical time reading: floor(pt / interval)."""
    if pt_us < 0:
        raise ValueError("physical time must be non-negative")
    return pt_us // config.interval_us


def knowledge_of(ts: RepClTimestamp, k: int, config: ClockConfig) -> int:
    """Highest epoch of process ``k`` this timestamp is aware of."""
    if not 0 <= k < config.n:
        raise ValueError(f"process index {k} out of range for n={config.n}")
    return ts.mx - ts.offset_of(k, config.epsilon)


def knowledge_vector(ts: RepClTimestamp, config: ClockConfig) -> tuple[int, ...]:
    """Dense knowledge view: mx - offset(k) for every process."""
    eps = config.epsilon
    offs = ts.offsets
    return tuple(ts.mx - offs.get(k, eps) for k in range(config.n))


def counter_vector(ts: RepClTimestamp, config: ClockConfig) -> tuple[int, ...]:
    ctrs = ts.counters
    return tuple(ctrs.get(k, 0) for k in range(config.n))


def shift(ts: RepClTimestamp, newmx: int, config: ClockConfig) -> RepClTimestamp:
    """Re-express ``ts`` at a higher mx without adding knowledge.

    Every offset grows by the mx delta; offsets that reach ``epsilon`` carry
    no information beyond the skew guarantee and are dropped.  Counters are
    untouched.
    """
    if newmx < ts.mx:
        raise InvalidShiftError(f"cannot shift mx {ts.mx} back to {newmx}")
    if newmx == ts.mx:
        return ts
    delta = newmx - ts.mx
    eps = config.epsilon
    offsets = {k: off + delta for k, off in ts.offsets.items() if off + delta < eps}
    return RepClTimestamp(
        mx=newmx,
        owner=ts.owner,
        offsets=offsets,
        counters=dict(ts.counters),
        counter_sum=ts.counter_sum,
    )


def merge_same_epoch(
    t1: RepClTimestamp, t2: RepClTimestamp, config: ClockConfig
) -> RepClTimestamp:
    """Combine the offsets of two timestamps sharing one mx, pointwise min.

    Counters are not combined here: the left operand's pass through and the
    receive logic decides what to do with them.
    """
    if t1.mx != t2.mx:
        raise ValueError(f"merge requires equal mx, got {t1.mx} and {t2.mx}")
    offsets = dict(t1.offsets)
    for k, off in t2.offsets.items():
        have = offsets.get(k)
        if have is None or off < have:
            offsets[k] = off
    return RepClTimestamp(
        mx=t1.mx,
        owner=t1.owner,
        offsets=offsets,
        counters=dict(t1.counters),
        counter_sum=t1.counter_sum,
    )


def equal_offset(t1: RepClTimestamp, t2: RepClTimestamp) -> bool:
    """True when mx and every offset agree; counters are ignored."""
    return t1.mx == t2.mx and t1.offsets == t2.offsets


def _set_own_offset(offsets: dict[int, int], owner: int, value: int, eps: int) -> None:
    # offset == epsilon is represented by absence
    if value < eps:
        offsets[owner] = value
    else:
        offsets.pop(owner, None)


def advance_send_local(
    ts: RepClTimestamp, epoch_now: int, config: ClockConfig
) -> RepClTimestamp:
    """Clock update for a send or local event at local epoch ``epoch_now``.

    If the event lands in the same epoch with an unchanged own offset, only
    the own counter grows; otherwise the timestamp shifts to the new mx, the
    own offset is re-read from the local clock, and counters reset.
    """
    newmx = max(ts.mx, epoch_now)
    new_own = min(newmx - epoch_now, config.epsilon)
    if newmx == ts.mx and ts.offset_of(ts.owner, config.epsilon) == new_own:
        if config.counter_mode is CounterMode.SUM:
            return RepClTimestamp(
                mx=ts.mx,
                owner=ts.owner,
                offsets=dict(ts.offsets),
                counter_sum=ts.counter_sum + 1,
            )
        counters = dict(ts.counters)
        counters[ts.owner] = counters.get(ts.owner, 0) + 1
        return RepClTimestamp(
            mx=ts.mx, owner=ts.owner, offsets=dict(ts.offsets), counters=counters
        )
    shifted = shift(ts, newmx, config)
    offsets = dict(shifted.offsets)
    _set_own_offset(offsets, ts.owner, new_own, config.epsilon)
    return RepClTimestamp(mx=newmx, owner=ts.owner, offsets=offsets)


def advance_receive(
    ts: RepClTimestamp,
    msg_ts: RepClTimestamp,
    epoch_now: int,
    config: ClockConfig,
) -> RepClTimestamp:
    """Clock update when the owner of ``ts`` receives a message stamped
    ``msg_ts`` while its local clock reads epoch ``epoch_now``.

    Both timestamps are shifted to the common new mx, the receiver's own
    offset is refreshed from its local clock (a receive reads the physical
    clock just like a send does), and the two are merged.  Counters follow
    four cases on whether the merged result still has the same epoch
    knowledge as the shifted local and/or message timestamp:

    * both equal: pointwise max of the counters, then own + 1
    * only local equal: keep local counters, own + 1
    * only message equal: adopt message counters, own + 1
    * neither: reset to zero
    """
    if ts.owner == msg_ts.owner:
        raise IncompatibleTimestampError("messages to self are local events")
    validate_timestamp(ts, config)
    validate_timestamp(msg_ts, config)
    newmx = max(ts.mx, msg_ts.mx, epoch_now)
    local = shift(ts, newmx, config)
    own = min(local.offset_of(ts.owner, config.epsilon), newmx - epoch_now)
    local_offsets = dict(local.offsets)
    _set_own_offset(local_offsets, ts.owner, own, config.epsilon)
    local = RepClTimestamp(
        mx=newmx,
        owner=ts.owner,
        offsets=local_offsets,
        counters=local.counters,
        counter_sum=local.counter_sum,
    )
    message = shift(msg_ts, newmx, config)
    merged = merge_same_epoch(local, message, config)
    eq_local = equal_offset(local, merged)
    eq_msg = equal_offset(message, merged)
    owner = ts.owner

    if config.counter_mode is CounterMode.SUM:
        if eq_local and eq_msg:
            new_sum = max(local.counter_sum, message.counter_sum) + 1
        elif eq_local:
            new_sum = local.counter_sum + 1
        elif eq_msg:
            new_sum = message.counter_sum + 1
        else:
            new_sum = 0
        return RepClTimestamp(
            mx=newmx, owner=owner, offsets=merged.offsets, counter_sum=new_sum
        )

    if eq_local and eq_msg:
        counters = dict(local.counters)
        for k, c in message.counters.items():
            if c > counters.get(k, 0):
                counters[k] = c
        counters[owner] = counters.get(owner, 0) + 1
    elif eq_local:
        counters = dict(local.counters)
        counters[owner] = counters.get(owner, 0) + 1
    elif eq_msg:
        counters = dict(message.counters)
        counters[owner] = counters.get(owner, 0) + 1
    else:
        counters = {}
    return RepClTimestamp(mx=newmx, owner=owner, offsets=merged.offsets, counters=counters)


def _vector_le(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    return all(x <= y for x, y in zip(a, b))


def compare(
    t1: RepClTimestamp, t2: RepClTimestamp, config: ClockConfig
) -> CompareResult:
    """Order two timestamps under the replay relation.

    BEFORE holds when t2's mx is more than epsilon ahead, or the mx values
    are close and t1's knowledge vector is dominated, or the knowledge
    vectors tie and the counters are dominated (scalar sums in sum mode).
    EQUAL requires identical mx, knowledge, and counters; anything else is
    CONCURRENT.
    """
    validate_timestamp(t1, config)
    validate_timestamp(t2, config)
    eps = config.epsilon

    if t2.mx > t1.mx + eps:
        return CompareResult.BEFORE
    if t1.mx > t2.mx + eps:
        return CompareResult.AFTER

    kv1 = knowledge_vector(t1, config)
    kv2 = knowledge_vector(t2, config)
    if config.counter_mode is CounterMode.SUM:
        c1: tuple[int, ...] = (t1.counter_sum,)
        c2: tuple[int, ...] = (t2.counter_sum,)
    else:
        c1 = counter_vector(t1, config)
        c2 = counter_vector(t2, config)

    if kv1 == kv2:
        if t1.mx == t2.mx and c1 == c2:
            return CompareResult.EQUAL
        if c1 != c2:
            if _vector_le(c1, c2):
                return CompareResult.BEFORE
            if _vector_le(c2, c1):
                return CompareResult.AFTER
        return CompareResult.CONCURRENT

    if _vector_le(kv1, kv2):
        return CompareResult.BEFORE
    if _vector_le(kv2, kv1):
        return CompareResult.AFTER
    return CompareResult.CONCURRENT
