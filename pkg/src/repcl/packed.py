"""Bit-exact packed encoding of replay-clock timestamps.

Layout, in little-endian 32-bit words:

* word 0: mx (sum counter mode may stash the scalar sum in its top bits)
* bitmap word(s): bit k set means an offset for process k is stored;
  a clear bit decodes as "offset = epsilon"
* offset words: fixed lanes of ``offset_bits`` at position k*offset_bits,
  independent of how many offsets are present
* counter words (full mode only): fixed lanes of ``counter_bits``

Word-level primitives mirror the clock's constant-time accessors: extract,
bitmap traversal by lowest-set-bit stripping, and lane get/set/remove.
"""
from __future__ import annotations

from dataclasses import dataclass

from .clock import ClockConfig, CounterMode, RepClTimestamp
from .errors import EncodingOverflowError

WORD_BITS = 32
WORD_MASK = (1 << WORD_BITS) - 1

SUM_IN_MX = "mx_word"
SUM_EXTRA_WORD = "extra_word"


def extract_bits(value: int, k: int, p: int, width: int | None = None) -> int:
    """Extract ``k`` bits of ``value`` starting at bit position ``p``."""
    if k < 0 or p < 0:
        raise ValueError("bit count and position must be non-negative")
    if width is not None and k + p > width:
        raise ValueError(f"bit range {p}..{p + k} exceeds width {width}")
    return ((1 << k) - 1) & (value >> p)


def iterate_set_bits(bitmap: int) -> list[int]:
    """Indices of set bits, ascending, in time proportional to their count."""
    if bitmap < 0:
        raise ValueError("bitmap must be non-negative")
    out = []
    while bitmap:
        lowest = bitmap & -bitmap
        out.append(lowest.bit_length() - 1)
        bitmap &= bitmap - 1
    return out


def _lane_get(lanes: int, index: int, bits: int) -> int:
    return extract_bits(lanes, bits, bits * index)


def _lane_set(lanes: int, index: int, bits: int, value: int, nlanes: int) -> int:
    first = extract_bits(lanes, bits * index, 0)
    last = extract_bits(lanes, bits * nlanes - bits * (index + 1), bits * (index + 1))
    return first | (value << (bits * index)) | (last << (bits * (index + 1)))


def _words_to_int(words: tuple[int, ...]) -> int:
    value = 0
    for i, w in enumerate(words):
        value |= w << (WORD_BITS * i)
    return value


def _int_to_words(value: int, count: int) -> tuple[int, ...]:
    return tuple((value >> (WORD_BITS * i)) & WORD_MASK for i in range(count))


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def bitmap_words(config: ClockConfig) -> int:
    return _ceil_div(config.n, WORD_BITS)


def offset_words(config: ClockConfig) -> int:
    return _ceil_div(config.n * config.offset_bits, WORD_BITS)


def counter_words(config: ClockConfig) -> int:
    if config.counter_mode is CounterMode.SUM:
        return 0
    return _ceil_div(config.n * config.counter_bits, WORD_BITS)


def encoded_words(config: ClockConfig, sum_placement: str = SUM_IN_MX) -> int:
    """Total words one timestamp occupies on the wire."""
    extra = 1 if (config.counter_mode is CounterMode.SUM and sum_placement == SUM_EXTRA_WORD) else 0
    return 1 + bitmap_words(config) + offset_words(config) + counter_words(config) + extra


@dataclass(frozen=True)
class PackedTimestamp:
    """A timestamp as a flat sequence of 32-bit words."""

    words: tuple[int, ...]

    def __post_init__(self) -> None:
        for w in self.words:
            if not 0 <= w <= WORD_MASK:
                raise EncodingOverflowError(f"word {w:#x} exceeds 32 bits")


def _split(packed: PackedTimestamp, config: ClockConfig, sum_placement: str):
    bw, ow, cw = bitmap_words(config), offset_words(config), counter_words(config)
    expect = encoded_words(config, sum_placement)
    if len(packed.words) != expect:
        raise EncodingOverflowError(
            f"expected {expect} words for this configuration, got {len(packed.words)}"
        )
    words = packed.words
    mx_word = words[0]
    bitmap = _words_to_int(words[1 : 1 + bw])
    offsets = _words_to_int(words[1 + bw : 1 + bw + ow])
    counters = _words_to_int(words[1 + bw + ow : 1 + bw + ow + cw])
    return mx_word, bitmap, offsets, counters


def get_offset_at_index(
    packed: PackedTimestamp, index: int, config: ClockConfig, sum_placement: str = SUM_IN_MX
) -> int:
    """Offset stored for process ``index``; absent decodes as epsilon."""
    if not 0 <= index < config.n:
        raise ValueError(f"index {index} out of range for n={config.n}")
    _, bitmap, offsets, _ = _split(packed, config, sum_placement)
    if not (bitmap >> index) & 1:
        return config.epsilon
    return _lane_get(offsets, index, config.offset_bits)


def set_offset_at_index(
    packed: PackedTimestamp,
    index: int,
    value: int,
    config: ClockConfig,
    sum_placement: str = SUM_IN_MX,
) -> PackedTimestamp:
    """Write an offset lane and set its bitmap bit."""
    if not 0 <= index < config.n:
        raise ValueError(f"index {index} out of range for n={config.n}")
    if not 0 <= value < (1 << config.offset_bits):
        raise ValueError(f"offset {value} does not fit {config.offset_bits} bits")
    bw, ow = bitmap_words(config), offset_words(config)
    _, bitmap, offsets, _ = _split(packed, config, sum_placement)
    bitmap |= 1 << index
    offsets = _lane_set(offsets, index, config.offset_bits, value, config.n)
    words = (
        packed.words[:1]
        + _int_to_words(bitmap, bw)
        + _int_to_words(offsets, ow)
        + packed.words[1 + bw + ow :]
    )
    return PackedTimestamp(words)


def remove_offset_at_index(
    packed: PackedTimestamp, index: int, config: ClockConfig, sum_placement: str = SUM_IN_MX
) -> PackedTimestamp:
    """Clear an offset lane and its bitmap bit."""
    if not 0 <= index < config.n:
        raise ValueError(f"index {index} out of range for n={config.n}")
    bw, ow = bitmap_words(config), offset_words(config)
    _, bitmap, offsets, _ = _split(packed, config, sum_placement)
    bitmap &= ~(1 << index)
    offsets = _lane_set(offsets, index, config.offset_bits, 0, config.n)
    words = (
        packed.words[:1]
        + _int_to_words(bitmap, bw)
        + _int_to_words(offsets, ow)
        + packed.words[1 + bw + ow :]
    )
    return PackedTimestamp(words)


def encode_timestamp(
    ts: RepClTimestamp, config: ClockConfig, sum_placement: str = SUM_IN_MX
) -> PackedTimestamp:
    """Pack a timestamp into words; raises when a field exceeds its lane.

    Callers are expected to saturate counters to ``counter_bits`` first;
    overflow here is an error, not silent truncation.
    """
    if sum_placement not in (SUM_IN_MX, SUM_EXTRA_WORD):
        raise ValueError(f"unknown sum placement {sum_placement!r}")
    sum_in_mx = config.counter_mode is CounterMode.SUM and sum_placement == SUM_IN_MX
    mx_bits = WORD_BITS - config.counter_bits if sum_in_mx else WORD_BITS
    if ts.mx >= (1 << mx_bits):
        raise EncodingOverflowError(f"mx {ts.mx} does not fit {mx_bits} bits")

    bitmap = 0
    offsets = 0
    for k, off in ts.offsets.items():
        if not 0 <= k < config.n:
            raise EncodingOverflowError(f"offset key {k} out of range for n={config.n}")
        if off >= (1 << config.offset_bits):
            raise EncodingOverflowError(
                f"offset {off} does not fit {config.offset_bits} bits"
            )
        bitmap |= 1 << k
        offsets |= off << (k * config.offset_bits)

    words = [ts.mx]
    if sum_in_mx:
        if ts.counter_sum >= (1 << config.counter_bits):
            raise EncodingOverflowError(
                f"counter sum {ts.counter_sum} does not fit {config.counter_bits} bits"
            )
        words[0] |= ts.counter_sum << mx_bits
    words.extend(_int_to_words(bitmap, bitmap_words(config)))
    words.extend(_int_to_words(offsets, offset_words(config)))

    if config.counter_mode is CounterMode.FULL:
        counters = 0
        for k, c in ts.counters.items():
            if not 0 <= k < config.n:
                raise EncodingOverflowError(f"counter key {k} out of range for n={config.n}")
            if c >= (1 << config.counter_bits):
                raise EncodingOverflowError(
                    f"counter {c} does not fit {config.counter_bits} bits"
                )
            counters |= c << (k * config.counter_bits)
        words.extend(_int_to_words(counters, counter_words(config)))
    elif sum_placement == SUM_EXTRA_WORD:
        if ts.counter_sum > WORD_MASK:
            raise EncodingOverflowError(f"counter sum {ts.counter_sum} does not fit a word")
        words.append(ts.counter_sum)

    return PackedTimestamp(tuple(words))


def decode_timestamp(
    packed: PackedTimestamp,
    config: ClockConfig,
    owner: int,
    sum_placement: str = SUM_IN_MX,
) -> RepClTimestamp:
    """Inverse of :func:`encode_timestamp`.

    The wire format does not carry the owning process (the transport does),
    so the caller supplies ``owner``.
    """
    mx_word, bitmap, offsets_int, counters_int = _split(packed, config, sum_placement)
    sum_in_mx = config.counter_mode is CounterMode.SUM and sum_placement == SUM_IN_MX
    if sum_in_mx:
        mx_bits = WORD_BITS - config.counter_bits
        mx = extract_bits(mx_word, mx_bits, 0)
        counter_sum = extract_bits(mx_word, config.counter_bits, mx_bits)
    else:
        mx = mx_word
        counter_sum = 0
        if config.counter_mode is CounterMode.SUM:
            counter_sum = packed.words[-1]

    offsets = {
        k: _lane_get(offsets_int, k, config.offset_bits) for k in iterate_set_bits(bitmap)
    }
    counters: dict[int, int] = {}
    if config.counter_mode is CounterMode.FULL:
        for k in range(config.n):
            c = _lane_get(counters_int, k, config.counter_bits)
            if c:
                counters[k] = c
    return RepClTimestamp(
        mx=mx, owner=owner, offsets=offsets, counters=counters, counter_sum=counter_sum
    )
