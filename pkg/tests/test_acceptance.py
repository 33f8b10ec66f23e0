"""Acceptance suite: one test per gate criterion.

Each test prints a one-line PASS record with its elapsed time and asserts
both the substance and the runtime budget.  Run with ``pytest -s
tests/test_acceptance.py`` to see the lines as they complete.
"""
from __future__ import annotations

import itertools
import random
import time
from dataclasses import replace

import numpy as np
import pytest

from repcl.clock import (
    ClockConfig,
    CompareResult,
    RepClTimestamp,
    compare,
    counter_vector,
    knowledge_of,
    knowledge_vector,
    merge_same_epoch,
    shift,
)
from repcl.fixtures import figure_replay_trace
from repcl.metrics import feasibility_sweep
from repcl.packed import decode_timestamp, encode_timestamp
from repcl.replay import ReplaySession, enumerate_replays, hard_edges, validate_sequence
from repcl.sim import SimParams
from repcl.sim import run as sim_run
from repcl.trace import EventType

from .conftest import random_timestamp


def _report(name: str, elapsed: float, budget: float, detail: str = "") -> None:
    extra = f" | {detail}" if detail else ""
    print(f"[acceptance] {name}: PASS in {elapsed:.2f}s (budget {budget:.0f}s){extra}")
    assert elapsed < budget, f"{name} exceeded its {budget}s budget ({elapsed:.1f}s)"


# ---------------------------------------------------------------------------

def test_worked_example_fidelity():
    t0 = time.time()
    wide = ClockConfig(n=3, epsilon=19, interval_us=1)
    shifted = shift(RepClTimestamp(mx=12, owner=0, offsets={0: 0, 1: 2, 2: 10}), 20, wide)
    assert (shifted.mx, shifted.offsets) == (20, {0: 8, 1: 10, 2: 18})

    capped = shift(
        RepClTimestamp(mx=12, owner=0, offsets={0: 0, 1: 2, 2: 10}),
        20,
        ClockConfig(n=3, epsilon=15, interval_us=1),
    )
    assert capped.offsets == {0: 8, 1: 10}

    cfg = ClockConfig(n=3, epsilon=5, interval_us=1)
    merged = merge_same_epoch(
        RepClTimestamp(mx=50, owner=0, offsets={0: 0, 1: 1, 2: 2}),
        RepClTimestamp(mx=50, owner=1, offsets={0: 2, 1: 0, 2: 1}),
        cfg,
    )
    assert merged.offsets == {0: 0, 1: 0, 2: 1}

    t = RepClTimestamp(mx=50, owner=0, offsets={0: 0, 1: 1, 2: 2})
    assert [knowledge_of(t, k, cfg) for k in range(3)] == [50, 49, 48]
    _report("worked-example fidelity", time.time() - t0, 1.0)


def test_replay_set_fidelity():
    t0 = time.time()
    labels = {"1:SEND": "A", "1:RECV": "B", "2:SEND": "C", "2:RECV": "D"}

    tight = {"".join(labels[k] for k in s) for s in enumerate_replays(figure_replay_trace(5))}
    assert tight == {"CABD"}

    loose = {"".join(labels[k] for k in s) for s in enumerate_replays(figure_replay_trace(20))}
    assert loose == {"CABD", "ABCD", "ACBD"}
    _report("replay-set fidelity", time.time() - t0, 1.0, "eps=5 -> {CABD}; eps=20 -> 3 orders")


# ---------------------------------------------------------------------------
# Ordering guarantees

GUARANTEE_RUNS = [
    (n, alpha, eps, interval, delta, seed)
    for (n, alpha) in ((4, 2.5), (8, 1.2), (16, 0.6))
    for (eps, interval) in ((3, 20), (10, 100))
    for (delta, seed) in ((1, 0), (40, 1), (15, 2), (5, 3))
]


def _event_arrays(result):
    cfg = result.params.config
    events = result.trace.events
    mx = np.array([e.ts.mx for e in events], dtype=np.int64)
    kv = np.array([knowledge_vector(e.ts, cfg) for e in events], dtype=np.int64)
    ctr = np.array([counter_vector(e.ts, cfg) for e in events], dtype=np.int64)
    vc = np.array([o.vc for o in result.oracle], dtype=np.int64)
    mxph = np.array([o.mxph for o in result.oracle], dtype=np.int64)
    owner = np.array([e.ts.owner for e in events], dtype=np.int64)
    return mx, kv, ctr, vc, mxph, owner


def _guarantee_counts(result):
    """Violation counts for one run, as a dict; all should be zero."""
    cfg = result.params.config
    eps = cfg.epsilon
    mx, kv, ctr, vc, mxph, owner = _event_arrays(result)
    m = len(mx)
    self_knowledge = kv[np.arange(m), owner]
    knows_other = kv[:, owner]  # knows_other[i, j] = what i knows of j's process
    out = {"hb": 0, "conc": 0, "conc_pairs": 0, "far": 0, "antisym": 0}
    for start in range(0, m, 128):
        end = min(start + 128, m)
        far = mx[None, :] > mx[start:end, None] + eps
        close = np.abs(mx[None, :] - mx[start:end, None]) <= eps
        kv_le = (kv[start:end, None, :] <= kv[None, :, :]).all(-1)
        kv_ge = (kv[start:end, None, :] >= kv[None, :, :]).all(-1)
        kv_eq = kv_le & kv_ge
        c_le = (ctr[start:end, None, :] <= ctr[None, :, :]).all(-1)
        c_ge = (ctr[start:end, None, :] >= ctr[None, :, :]).all(-1)
        c_eq = c_le & c_ge
        before = far | (close & kv_le & ~kv_eq) | (kv_eq & c_le & ~c_eq)
        far_r = mx[start:end, None] > mx[None, :] + eps
        after = far_r | (close & kv_ge & ~kv_eq) | (kv_eq & c_ge & ~c_eq)

        vc_le = (vc[start:end, None, :] <= vc[None, :, :]).all(-1)
        vc_ge = (vc[start:end, None, :] >= vc[None, :, :]).all(-1)
        distinct = ~(vc_le & vc_ge)
        hb = vc_le & distinct
        hb_r = vc_ge & distinct

        out["hb"] += int((hb & ~before).sum())
        out["antisym"] += int((before & after).sum())

        concurrent = ~hb & ~hb_r & distinct
        strictly_close = np.abs(mx[None, :] - mx[start:end, None]) < eps
        # the guarantee applies where neither side's self-knowledge had
        # reached the other (no skew-floor catch-up, no same-epoch leak)
        private_left = knows_other.T[start:end, :] < self_knowledge[start:end, None]
        private_right = knows_other[start:end, :] < self_knowledge[None, :]
        guaranteed = concurrent & strictly_close & private_left & private_right
        out["conc_pairs"] += int(guaranteed.sum())
        out["conc"] += int((guaranteed & (before | after)).sum())

        physically_far = mxph[None, :] - mxph[start:end, None] > eps * cfg.interval_us + cfg.interval_us
        out["far"] += int((physically_far & ~before).sum())
    return out


def _bridge_check(result, samples=2500, seed=0):
    """The vectorized relation must agree with compare() itself."""
    cfg = result.params.config
    events = result.trace.events
    mx, kv, ctr, _, _, _ = _event_arrays(result)
    rng = random.Random(seed)
    m = len(events)
    eps = cfg.epsilon
    mismatches = 0
    for _ in range(samples):
        i, j = rng.randrange(m), rng.randrange(m)
        if i == j:
            continue
        far_ij = mx[j] > mx[i] + eps
        far_ji = mx[i] > mx[j] + eps
        kv_le = bool((kv[i] <= kv[j]).all())
        kv_ge = bool((kv[i] >= kv[j]).all())
        kv_eq = kv_le and kv_ge
        c_le = bool((ctr[i] <= ctr[j]).all())
        c_ge = bool((ctr[i] >= ctr[j]).all())
        c_eq = c_le and c_ge
        close = abs(int(mx[i]) - int(mx[j])) <= eps
        before = far_ij or (close and kv_le and not kv_eq) or (kv_eq and c_le and not c_eq)
        after = far_ji or (close and kv_ge and not kv_eq) or (kv_eq and c_ge and not c_eq)
        want = (
            CompareResult.BEFORE if before
            else CompareResult.AFTER if after
            else CompareResult.EQUAL if (mx[i] == mx[j] and kv_eq and c_eq)
            else CompareResult.CONCURRENT
        )
        if compare(events[i].ts, events[j].ts, cfg) is not want:
            mismatches += 1
    return mismatches


def test_ordering_guarantees():
    t0 = time.time()
    totals = {"hb": 0, "conc": 0, "conc_pairs": 0, "far": 0, "antisym": 0}
    runs = 0
    events_total = 0
    for n, alpha, eps, interval, delta, seed in GUARANTEE_RUNS:
        delta = min(delta, eps * interval)
        params = SimParams(
            config=ClockConfig(n=n, epsilon=eps, interval_us=interval),
            alpha_pct=alpha,
            delta_us=delta,
            ticks=10_000,
            seed=seed,
        )
        result = sim_run(params)
        events_total += len(result.trace.events)
        counts = _guarantee_counts(result)
        for key in totals:
            totals[key] += counts[key]
        assert _bridge_check(result, seed=seed) == 0
        runs += 1
    assert runs >= 20
    assert totals["hb"] == 0, f"happened-before violated {totals['hb']} times"
    assert totals["antisym"] == 0
    assert totals["conc"] == 0, f"concurrency violated {totals['conc']} times"
    assert totals["conc_pairs"] > 100_000, "concurrency guarantee exercised too few pairs"
    assert totals["far"] == 0, f"physically-far ordering violated {totals['far']} times"
    _report(
        "ordering guarantees",
        time.time() - t0,
        120.0,
        f"{runs} runs, {events_total} events, {totals['conc_pairs']} guaranteed-concurrent pairs",
    )


@pytest.mark.xfail(
    strict=True,
    reason=(
        "the unrestricted form (every causally-concurrent pair within epsilon "
        "epochs compares concurrent) is not a property of this clock: two "
        "never-communicating processes' events exactly epsilon apart are "
        "ordered by the skew floor, and same-epoch events are ordered whenever "
        "one side's knowledge dominates; see the minimal pair below"
    ),
)
def test_concurrency_unrestricted_form():
    cfg = ClockConfig(n=2, epsilon=5, interval_us=1)
    e = RepClTimestamp(mx=10, owner=0, offsets={0: 0})
    f = RepClTimestamp(mx=15, owner=1, offsets={1: 0})
    # causally concurrent (no communication), |mx difference| == epsilon
    assert compare(e, f, cfg) is CompareResult.CONCURRENT


# ---------------------------------------------------------------------------

def test_encoding_round_trip():
    t0 = time.time()
    fig_config = ClockConfig(n=5, epsilon=15, interval_us=1, offset_bits=4, counter_bits=2)
    fig = RepClTimestamp(mx=50, owner=0, offsets={0: 0, 2: 10}, counters={2: 2})
    packed = encode_timestamp(fig, fig_config)
    assert len(packed.words) == 4
    assert decode_timestamp(packed, fig_config, owner=0) == fig

    configs = [
        ClockConfig(n=1, epsilon=1),
        ClockConfig(n=3, epsilon=5, counter_bits=4),
        ClockConfig(n=16, epsilon=100),
        ClockConfig(n=33, epsilon=7, counter_bits=2),
        ClockConfig(n=64, epsilon=1000, counter_bits=8),
        ClockConfig(n=64, epsilon=15, counter_mode="sum", counter_bits=8),
        ClockConfig(n=8, epsilon=250, counter_mode="sum", counter_bits=6),
    ]
    rng = random.Random(20240501)
    total = 100_000
    per_config = total // len(configs) + 1
    checked = 0
    for config in configs:
        for _ in range(per_config):
            ts = random_timestamp(rng, config, max_mx=1 << 20)
            packed = encode_timestamp(ts, config)
            assert decode_timestamp(packed, config, owner=ts.owner) == ts
            checked += 1
    assert checked >= total
    _report("encoding round-trip", time.time() - t0, 30.0, f"{checked} timestamps")


# ---------------------------------------------------------------------------

COUNTER_RARITY_RUNS = [
    (n, ticks, seed)
    for n, ticks in ((8, 150_000), (16, 100_000), (32, 60_000))
    for seed in range(4)
]


def test_counter_rarity():
    t0 = time.time()
    good = 0
    details = []
    for n, ticks, seed in COUNTER_RARITY_RUNS:
        params = SimParams(
            config=ClockConfig(n=n, epsilon=250, interval_us=100),
            alpha_pct=0.015,
            delta_us=300,
            ticks=ticks,
            seed=seed,
            local_ratio=0.7,
        )
        metrics = sim_run(params).metrics
        ok = metrics.pct_events_with_counters < 0.05 and metrics.max_counter <= 8
        good += ok
        details.append(f"n={n}/s{seed}:{metrics.pct_events_with_counters:.3f}")
    share = good / len(COUNTER_RARITY_RUNS)
    assert share >= 0.9, f"only {good}/{len(COUNTER_RARITY_RUNS)} runs rare enough: {details}"
    _report(
        "counter rarity",
        time.time() - t0,
        120.0,
        f"{good}/{len(COUNTER_RARITY_RUNS)} runs under 5% with max counter <= 8",
    )


# ---------------------------------------------------------------------------

TREND_SEEDS = range(5)


def _offsets_at(n, eps, interval, alpha, delta, seed, ticks=6000):
    params = SimParams(
        config=ClockConfig(n=n, epsilon=eps, interval_us=interval),
        alpha_pct=alpha,
        delta_us=delta,
        ticks=ticks,
        seed=seed,
        allow_delta_over_skew=True,
    )
    metrics = sim_run(params).metrics
    return metrics.avg_offsets_stored, metrics.avg_offsets_remote


def _majority_increasing(series_by_seed):
    wins = sum(1 for series in series_by_seed if all(a < b for a, b in zip(series, series[1:])))
    return wins, len(series_by_seed)


def test_trend_suite():
    t0 = time.time()

    eps_series = [
        [_offsets_at(8, eps, 100, 0.3, 2, seed)[0] for eps in (2, 4, 8, 16, 32)]
        for seed in TREND_SEEDS
    ]
    wins, total = _majority_increasing(eps_series)
    assert wins > total / 2, f"offsetsize not increasing in epsilon ({wins}/{total})"

    alpha_series = [
        [_offsets_at(8, 10, 100, alpha, 2, seed)[0] for alpha in (0.1, 0.3, 1.0, 3.0)]
        for seed in TREND_SEEDS
    ]
    wins_a, total_a = _majority_increasing(alpha_series)
    assert wins_a > total_a / 2, f"offsetsize not increasing in alpha ({wins_a}/{total_a})"

    interval_means = []
    for interval in (100, 200, 400):
        vals = [_offsets_at(8, 10, interval, 10.0, 2, seed)[0] for seed in TREND_SEEDS]
        interval_means.append(sum(vals) / len(vals))
    spread_i = (max(interval_means) - min(interval_means)) / (sum(interval_means) / 3)
    assert spread_i < 0.25, f"interval spread {spread_i:.3f}"

    delta_means = []
    for delta in (1, 2, 4, 8):
        vals = [_offsets_at(8, 10, 100, 2.0, delta, seed)[0] for seed in TREND_SEEDS]
        delta_means.append(sum(vals) / len(vals))
    spread_d = (max(delta_means) - min(delta_means)) / (sum(delta_means) / 4)
    assert spread_d < 0.25, f"delta spread {spread_d:.3f}"

    # past the skew bound nothing beyond the owner's entry survives
    beyond = [
        _offsets_at(8, 10, 100, 2.0, delta, seed)[1]
        for delta in (1200, 2000)
        for seed in TREND_SEEDS
    ]
    assert max(beyond) < 0.1, f"delta beyond skew still stores offsets: {max(beyond):.3f}"

    _report(
        "trend suite",
        time.time() - t0,
        300.0,
        f"eps {wins}/{total}, alpha {wins_a}/{total_a}, spreads I {spread_i:.2%} / delta {spread_d:.2%}",
    )


# ---------------------------------------------------------------------------

FEASIBILITY_ALPHAS = [0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4]
FEASIBILITY_DELTAS = [1, 2, 4, 8, 16, 32, 64, 128]


def test_feasibility_sweep():
    t0 = time.time()
    config = ClockConfig(n=16, epsilon=10, interval_us=100)
    base = SimParams(config=config, ticks=4000, seed=0)
    grid = [
        replace(base, alpha_pct=alpha, delta_us=delta)
        for delta in FEASIBILITY_DELTAS
        for alpha in FEASIBILITY_ALPHAS
    ]
    result = feasibility_sweep(grid, budget=8.0, seeds=[0, 1, 2, 3, 4])
    assert len(result.points) == 64

    by_delta: dict[int, list] = {}
    for point in result.points:
        by_delta.setdefault(point.delta_us, []).append(point)
    for delta, column in by_delta.items():
        flags = [p.feasible for p in sorted(column, key=lambda p: p.alpha)]
        assert flags == sorted(flags, reverse=True), f"column delta={delta} not downward closed"

    # budget n admits everything, budget 0 nothing (owner entry always present)
    at_budget_n = [p.offsetsize <= config.n for p in result.points]
    assert all(at_budget_n)
    at_budget_zero = [p.offsetsize <= 0 for p in result.points]
    assert not any(at_budget_zero)
    feasible_count = sum(p.feasible for p in result.points)
    assert 0 < feasible_count < 64, "grid should straddle the boundary"
    _report(
        "feasibility sweep",
        time.time() - t0,
        600.0,
        f"{feasible_count}/64 feasible at budget 8",
    )


# ---------------------------------------------------------------------------

def _small_traces(count=6, lo=4, hi=8):
    traces = []
    seed = 0
    while len(traces) < count and seed < 3000:
        params = SimParams(
            config=ClockConfig(n=3, epsilon=4, interval_us=10),
            alpha_pct=3.0,
            delta_us=5,
            ticks=150,
            seed=seed,
        )
        trace = sim_run(params).trace
        if lo <= len(trace.events) <= hi:
            traces.append(trace)
        seed += 1
    assert len(traces) == count
    return traces


def test_replay_correctness():
    t0 = time.time()
    concurrent_pairs_seen = 0
    for trace in _small_traces():
        keys = [r.key for r in trace.events]
        enumerated = set(enumerate_replays(trace))
        accepted = {
            perm
            for perm in itertools.permutations(keys)
            if validate_sequence(trace, list(perm)).ok
        }
        assert accepted == enumerated

        # forced orders: the hard-edge closure appears in every sequence
        closure = {(e.src, e.dst) for e in hard_edges(trace.events)}
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in itertools.product(list(closure), list(closure)):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
        for sequence in enumerated:
            position = {key: i for i, key in enumerate(sequence)}
            for a, b in closure:
                assert position[a] < position[b]

        # freedom: every concurrent pair appears in both orders
        by_key = {r.key: r for r in trace.events}
        for a, b in itertools.combinations(keys, 2):
            if compare(by_key[a].ts, by_key[b].ts, trace.config) is CompareResult.CONCURRENT:
                concurrent_pairs_seen += 1
                a_first = any(s.index(a) < s.index(b) for s in enumerated)
                b_first = any(s.index(b) < s.index(a) for s in enumerated)
                assert a_first and b_first, f"pair {a},{b} frozen in one order"
    assert concurrent_pairs_seen > 0
    _report(
        "replay correctness",
        time.time() - t0,
        60.0,
        f"{concurrent_pairs_seen} concurrent pairs flipped both ways",
    )


# ---------------------------------------------------------------------------

def test_determinism(tmp_path):
    from repcl.cli import sim_main

    t0 = time.time()
    blobs = []
    for attempt in ("one", "two"):
        out = tmp_path / f"trace-{attempt}.jsonl"
        binary = tmp_path / f"trace-{attempt}.bin"
        metrics = tmp_path / f"metrics-{attempt}.csv"
        code = sim_main([
            "--n", "8", "--epsilon", "10", "--interval-us", "100",
            "--alpha", "1.5", "--delta-us", "3", "--ticks", "4000", "--seed", "99",
            "--out", str(out), "--metrics", str(metrics),
        ])
        assert code == 0
        code = sim_main([
            "--n", "8", "--epsilon", "10", "--interval-us", "100",
            "--alpha", "1.5", "--delta-us", "3", "--ticks", "4000", "--seed", "99",
            "--out", str(binary), "--binary",
        ])
        assert code == 0
        blobs.append((out.read_bytes(), metrics.read_bytes(), binary.read_bytes()))
    assert blobs[0] == blobs[1], "same seed must reproduce byte-identical outputs"
    _report("determinism", time.time() - t0, 60.0)
