"""Overhead statistics and feasibility sweeps.

``offsetsize`` (average offsets stored per event) is the clock's dominant
overhead; counters stay tiny.  Storage accounting here counts only present
offsets, matching how a compacting transport would behave, even though the
in-memory lane layout is dense.

A feasibility sweep runs a seed family per (alpha, delta) grid point and
classifies the mean offsetsize against a word budget.
"""
from __future__ import annotations

import random
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .clock import ClockConfig, CompareResult, CounterMode, compare
from .packed import WORD_BITS, bitmap_words
from .sim import SimMetrics, SimParams, SimResult, run
from .trace import EventRecord


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def words_for_event(record: EventRecord, config: ClockConfig) -> int:
    """Words a compacted encoding of this event's timestamp needs."""
    present = record.ts.stored_offsets()
    words = 1 + bitmap_words(config) + _ceil_div(present * config.offset_bits, WORD_BITS)
    if config.counter_mode is CounterMode.FULL:
        words += _ceil_div(present * config.counter_bits, WORD_BITS)
    return words


@dataclass
class OverheadStats:
    events: int
    avg_offsets_stored: float
    avg_offsets_remote: float
    avg_offset_bits: float
    pct_events_with_counters: float
    avg_counter_bits: float
    max_counter: int
    words_per_timestamp: Counter = field(default_factory=Counter)


def offset_stats(events: Sequence[EventRecord], config: ClockConfig) -> OverheadStats:
    """Aggregate per-event storage statistics over a parsed trace."""
    n_events = len(events)
    if n_events == 0:
        warnings.warn("offset_stats over an empty trace", stacklevel=2)
        return OverheadStats(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0)
    total = 0
    remote = 0
    counter_events = 0
    counter_bits = 0
    max_counter = 0
    words = Counter()
    for record in events:
        ts = record.ts
        stored = ts.stored_offsets()
        total += stored
        remote += stored - (1 if ts.owner in ts.offsets else 0)
        if ts.has_counters():
            counter_events += 1
        if config.counter_mode is CounterMode.SUM:
            counter_bits += ts.counter_sum.bit_length()
        else:
            counter_bits += sum(c.bit_length() for c in ts.counters.values())
        max_counter = max(max_counter, ts.max_counter())
        words[words_for_event(record, config)] += 1
    return OverheadStats(
        events=n_events,
        avg_offsets_stored=total / n_events,
        avg_offsets_remote=remote / n_events,
        avg_offset_bits=total * config.offset_bits / n_events,
        pct_events_with_counters=counter_events / n_events,
        avg_counter_bits=counter_bits / n_events,
        max_counter=max_counter,
        words_per_timestamp=words,
    )


def counter_stats(events: Sequence[EventRecord]) -> tuple[float, int]:
    """Fraction of events carrying any nonzero counter, and the max value."""
    if not events:
        return 0.0, 0
    with_counters = sum(1 for r in events if r.ts.has_counters())
    max_counter = max((r.ts.max_counter() for r in events), default=0)
    return with_counters / len(events), max_counter


# ---------------------------------------------------------------------------
# Feasibility sweeps

@dataclass(frozen=True)
class FeasibilityPoint:
    alpha: float
    delta_us: int
    epsilon: int
    interval_us: int
    n: int
    offsetsize: float
    feasible: bool
    p99_offsets: float = 0.0
    seeds: int = 1


@dataclass
class SweepResult:
    points: list[FeasibilityPoint]
    budget: float
    boundary: dict[int, float | None] = field(default_factory=dict)
    per_run: list[SimMetrics] = field(default_factory=list)

    def csv_lines(self) -> list[str]:
        lines = [SimMetrics.CSV_HEADER + ",feasible"]
        by_key = {}
        for m in self.per_run:
            by_key.setdefault((m.alpha, m.delta_us), []).append(m)
        for pt in sorted(self.points, key=lambda p: (p.delta_us, p.alpha)):
            fam = by_key[(pt.alpha, pt.delta_us)]
            mean = _mean_metrics(f"a{pt.alpha:g}_d{pt.delta_us}", fam)
            lines.append(mean.csv_row() + f",{int(pt.feasible)}")
        return lines


def _mean_metrics(run_id: str, family: list[SimMetrics]) -> SimMetrics:
    k = len(family)
    first = family[0]
    return SimMetrics(
        run_id=run_id,
        n=first.n,
        epsilon=first.epsilon,
        interval_us=first.interval_us,
        delta_us=first.delta_us,
        alpha=first.alpha,
        events=round(sum(m.events for m in family) / k),
        sends=round(sum(m.sends for m in family) / k),
        recvs=round(sum(m.recvs for m in family) / k),
        locals=round(sum(m.locals for m in family) / k),
        avg_offsets_stored=sum(m.avg_offsets_stored for m in family) / k,
        p99_offsets_stored=round(sum(m.p99_offsets_stored for m in family) / k),
        pct_events_with_counters=sum(m.pct_events_with_counters for m in family) / k,
        max_counter=max(m.max_counter for m in family),
        max_observed_skew_us=max(m.max_observed_skew_us for m in family),
        avg_offsets_remote=sum(m.avg_offsets_remote for m in family) / k,
    )


def feasibility_sweep(
    grid: Iterable[SimParams],
    budget: float,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
) -> SweepResult:
    """Classify each grid point against the offsetsize budget.

    Each point runs once per seed; the family mean decides feasibility.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    points: list[FeasibilityPoint] = []
    per_run: list[SimMetrics] = []
    for base in grid:
        family = []
        for seed in seeds:
            result = run(replace(base, seed=seed))
            result.metrics.run_id = f"a{base.alpha_pct:g}_d{base.delta_us}_s{seed}"
            family.append(result.metrics)
            per_run.append(result.metrics)
        mean_offsets = sum(m.avg_offsets_stored for m in family) / len(family)
        points.append(
            FeasibilityPoint(
                alpha=base.alpha_pct,
                delta_us=base.delta_us,
                epsilon=base.config.epsilon,
                interval_us=base.config.interval_us,
                n=base.config.n,
                offsetsize=mean_offsets,
                feasible=mean_offsets <= budget,
                p99_offsets=sum(m.p99_offsets_stored for m in family) / len(family),
                seeds=len(family),
            )
        )
    boundary: dict[int, float | None] = {}
    for pt in points:
        cur = boundary.get(pt.delta_us)
        if pt.feasible and (cur is None or pt.alpha > cur):
            boundary[pt.delta_us] = pt.alpha
        elif pt.delta_us not in boundary:
            boundary[pt.delta_us] = None
    return SweepResult(points=points, budget=budget, boundary=boundary, per_run=per_run)


def sweep_plot_svg(result: SweepResult) -> str:
    """Scatter of the grid: feasible points blue, infeasible red, with the
    per-delta boundary drawn as a green line."""
    pts = result.points
    if not pts:
        return "<svg xmlns='http://www.w3.org/2000/svg' width='10' height='10'/>"
    alphas = sorted({p.alpha for p in pts})
    deltas = sorted({p.delta_us for p in pts})
    width, height, margin = 480, 360, 48

    def x_of(delta: int) -> float:
        i = deltas.index(delta)
        return margin + i * (width - 2 * margin) / max(1, len(deltas) - 1)

    def y_of(alpha: float) -> float:
        i = alphas.index(alpha)
        return height - margin - i * (height - 2 * margin) / max(1, len(alphas) - 1)

    parts = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' height='{height}'>",
        f"<text x='{width / 2}' y='16' text-anchor='middle' font-size='12'>"
        f"feasibility at budget {result.budget:g} offsets</text>",
        f"<text x='{width / 2}' y='{height - 8}' text-anchor='middle' font-size='11'>delta (us)</text>",
        f"<text x='14' y='{height / 2}' text-anchor='middle' font-size='11' "
        f"transform='rotate(-90 14 {height / 2})'>alpha (%)</text>",
    ]
    for p in pts:
        color = "#2b6cb0" if p.feasible else "#c53030"
        parts.append(
            f"<circle cx='{x_of(p.delta_us):.1f}' cy='{y_of(p.alpha):.1f}' r='5' "
            f"fill='{color}'><title>alpha={p.alpha:g} delta={p.delta_us} "
            f"offsetsize={p.offsetsize:.2f}</title></circle>"
        )
    line = [
        (x_of(d), y_of(a))
        for d, a in sorted(result.boundary.items())
        if a is not None
    ]
    if len(line) >= 2:
        path = " ".join(f"{x:.1f},{y:.1f}" for x, y in line)
        parts.append(f"<polyline points='{path}' fill='none' stroke='#2f855a' stroke-width='2'/>")
    for d in deltas:
        parts.append(
            f"<text x='{x_of(d):.1f}' y='{height - margin + 16}' text-anchor='middle' "
            f"font-size='10'>{d}</text>"
        )
    for a in alphas:
        parts.append(
            f"<text x='{margin - 6}' y='{y_of(a):.1f}' text-anchor='end' "
            f"font-size='10'>{a:g}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Partial replay: running the clock with a smaller skew than the system's

def forced_order_rate(
    result: SimResult, max_pairs: int = 200_000, seed: int = 0
) -> float:
    """Among event pairs the reference clock leaves unordered, the fraction
    the (smaller-skew) primary clock forces an order on.

    Requires the simulation to have been run with ``reference_epsilon``.
    """
    if result.params.reference_epsilon is None:
        raise ValueError("simulation was run without a reference clock")
    ref_config = replace(
        result.params.config, epsilon=result.params.reference_epsilon, offset_bits=0
    )
    events = result.trace.events
    oracle = result.oracle
    m = len(events)
    pairs: Iterable[tuple[int, int]]
    total_pairs = m * (m - 1) // 2
    if total_pairs <= max_pairs:
        pairs = ((i, j) for i in range(m) for j in range(i + 1, m))
    else:
        rng = random.Random(seed)
        pairs = (
            tuple(sorted(rng.sample(range(m), 2))) for _ in range(max_pairs)  # type: ignore[misc]
        )
    unordered_ref = 0
    forced = 0
    for i, j in pairs:
        ref_i, ref_j = oracle[i].ref_ts, oracle[j].ref_ts
        verdict_ref = compare(ref_i, ref_j, ref_config)
        if verdict_ref in (CompareResult.BEFORE, CompareResult.AFTER):
            continue
        unordered_ref += 1
        verdict = compare(events[i].ts, events[j].ts, result.params.config)
        if verdict in (CompareResult.BEFORE, CompareResult.AFTER):
            forced += 1
    return forced / unordered_ref if unordered_ref else 0.0
