"""Command-line entry points: repcl-sim, repcl-replay, repcl-sweep, repcl-serve."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .clock import ClockConfig, CounterMode
from .errors import RepClError, ReplayBoundError
from .metrics import feasibility_sweep, forced_order_rate, offset_stats, sweep_plot_svg
from .replay import (
    ReplaySession,
    auto_replay,
    enumerate_replays,
    sort_events,
    validate_sequence,
)
from .sim import SimMetrics, SimParams, run
from .trace import format_ascii_event, load_trace, save_trace


def _clock_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=8, help="process count (1..64)")
    parser.add_argument("--epsilon", type=int, default=10, help="skew bound in epochs")
    parser.add_argument("--interval-us", type=int, default=100, help="epoch length in microseconds")
    parser.add_argument("--offset-bits", type=int, default=0, help="bits per offset lane (0 = fit epsilon)")
    parser.add_argument("--counter-bits", type=int, default=8, help="bits per counter lane")
    parser.add_argument("--counter-mode", choices=["full", "sum"], default="full")


def _build_config(args: argparse.Namespace) -> ClockConfig:
    return ClockConfig(
        n=args.n,
        epsilon=args.epsilon,
        interval_us=args.interval_us,
        offset_bits=args.offset_bits,
        counter_bits=args.counter_bits,
        counter_mode=CounterMode(args.counter_mode),
    )


# ---------------------------------------------------------------------------
# repcl-sim

def sim_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="repcl-sim",
        description="Run the discrete-event simulator and write a timestamped trace.",
    )
    _clock_args(parser)
    parser.add_argument("--delta-us", type=int, default=2, help="message delay in microseconds")
    parser.add_argument("--alpha", type=float, default=10.0, help="per-tick fire probability, percent")
    parser.add_argument("--ticks", type=int, default=10_000)
    parser.add_argument("--tick-us", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--local-ratio", type=float, default=0.5,
                        help="share of fired events that stay local instead of sending")
    parser.add_argument("--skew-epsilon", type=int, default=None,
                        help="actual clock noise bound in epochs (defaults to --epsilon)")
    parser.add_argument("--reference-epsilon", type=int, default=None,
                        help="maintain a second clock at this epsilon for partial-replay studies")
    parser.add_argument("--allow-delta-over-skew", action="store_true")
    parser.add_argument("--out", type=Path, default=None, help="trace output path (JSONL)")
    parser.add_argument("--metrics", type=Path, default=None, help="metrics CSV output path")
    parser.add_argument("--binary", action="store_true", help="write the trace in the packed binary format")
    args = parser.parse_args(argv)

    params = SimParams(
        config=_build_config(args),
        delta_us=args.delta_us,
        alpha_pct=args.alpha,
        ticks=args.ticks,
        tick_us=args.tick_us,
        seed=args.seed,
        local_ratio=args.local_ratio,
        skew_epsilon=args.skew_epsilon,
        reference_epsilon=args.reference_epsilon,
        allow_delta_over_skew=args.allow_delta_over_skew,
    )
    result = run(params)
    if args.out:
        save_trace(result.trace, str(args.out), binary=args.binary)
    if args.metrics:
        args.metrics.write_text(
            SimMetrics.CSV_HEADER + "\n" + result.metrics.csv_row() + "\n", encoding="utf-8"
        )
    m = result.metrics
    print(
        f"{m.events} events ({m.sends} send / {m.recvs} recv / {m.locals} local), "
        f"avg offsets {m.avg_offsets_stored:.3f}, counters on "
        f"{m.pct_events_with_counters * 100:.2f}% of events, "
        f"max skew {m.max_observed_skew_us}us"
    )
    if args.reference_epsilon is not None:
        print(f"forced-order rate vs epsilon={args.reference_epsilon}: "
              f"{forced_order_rate(result):.4f}")
    return 0


# ---------------------------------------------------------------------------
# repcl-replay

def _print_listing_line(record, trace) -> None:
    print(format_ascii_event(record, trace))


def _interactive(session: ReplaySession) -> list[str]:
    """Terminal prompt loop over the replay frontier.

    Forced steps print and advance on their own.  A multi-event frontier
    becomes a numbered pool whose indices stay stable while the user drains
    it; the pool is rebuilt if a choice unlocks new frontier events.
    """
    trace = session.trace
    while not session.done:
        frontier = session.sorted_frontier()
        if len(frontier) == 1:
            session.choose(frontier[0].key)
            _print_listing_line(frontier[0], trace)
            continue
        print("Concurrent events detected!")
        pool = list(frontier)
        for i, record in enumerate(pool):
            print(f"{i}. {format_ascii_event(record, trace)}")
        pending = {record.key for record in pool}
        while pending:
            try:
                raw = input("Please choose the event to replay: ")
            except EOFError:
                print()
                return list(session.replayed)
            raw = raw.strip()
            if not raw.isdigit() or int(raw) >= len(pool):
                print(f"Enter a number between 0 and {len(pool) - 1}.")
                continue
            chosen = pool[int(raw)]
            if chosen.key not in pending:
                print("Already replayed; pick another.")
                continue
            session.choose(chosen.key)
            _print_listing_line(chosen, trace)
            pending.discard(chosen.key)
            if {r.key for r in session.sorted_frontier()} != pending:
                break  # new events unlocked; rebuild the pool
    return list(session.replayed)


def replay_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="repcl-replay", description="Replay a timestamped trace."
    )
    parser.add_argument("--trace", type=Path, required=True)
    parser.add_argument("--mode", choices=["interactive", "random", "exhaustive", "validate"],
                        default="interactive")
    parser.add_argument("--seed", type=int, default=0, help="seed for random mode")
    parser.add_argument("--limit", type=int, default=None,
                        help="cap on enumerated sequences (lifts the size bound)")
    parser.add_argument("--sequence", type=Path, default=None,
                        help="validate mode: file with one event key per line")
    parser.add_argument("--out", type=Path, default=None, help="write the result as JSON")
    args = parser.parse_args(argv)

    try:
        trace = load_trace(str(args.trace))
    except RepClError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out: dict
    if args.mode == "interactive":
        session = ReplaySession(trace)
        order = _interactive(session)
        out = {"order": order}
    elif args.mode == "random":
        session = ReplaySession(trace)
        order = auto_replay(session, seed=args.seed)
        for key in order:
            _print_listing_line(session.events[key], trace)
        out = {"order": order}
    elif args.mode == "exhaustive":
        try:
            sequences = enumerate_replays(trace, limit=args.limit)
        except ReplayBoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for seq in sequences:
            print(" ".join(seq))
        print(f"{len(sequences)} valid replay(s)", file=sys.stderr)
        out = {"sequences": [list(s) for s in sequences]}
    else:
        if args.sequence:
            sequence = [ln.strip() for ln in args.sequence.read_text().splitlines() if ln.strip()]
        else:
            sequence = [r.key for r in sort_events(trace)]
        verdict = validate_sequence(trace, sequence)
        if verdict.ok:
            print("valid replay")
        else:
            print(f"invalid replay: {verdict.violation}")
        out = {"ok": verdict.ok, "violation": verdict.violation}
        if args.out:
            args.out.write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
        return 0 if verdict.ok else 1

    if args.out:
        args.out.write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# repcl-sweep

def _load_grid(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".toml", ".tml"):
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            try:
                import tomli as tomllib  # type: ignore[no-redef]
            except ModuleNotFoundError as exc:
                raise RepClError(
                    "TOML grids need Python 3.11+ or the tomli package; use JSON instead"
                ) from exc
        return tomllib.loads(text)
    return json.loads(text)


def sweep_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="repcl-sweep",
        description="Sweep (alpha, delta) grids and classify offsetsize feasibility.",
    )
    parser.add_argument("--grid", type=Path, required=True,
                        help="JSON/TOML grid: clock fields plus alpha/delta_us lists")
    parser.add_argument("--budget", type=float, required=True, help="offsetsize budget")
    parser.add_argument("--seeds", type=int, default=5, help="seed family size per point")
    parser.add_argument("--out-csv", type=Path, default=None)
    parser.add_argument("--out-plot", type=Path, default=None, help="SVG scatter output")
    parser.add_argument("--epsilon-configured", type=int, default=None,
                        help="clock epsilon when smaller than the actual skew (partial replay)")
    parser.add_argument("--epsilon-actual", type=int, default=None,
                        help="actual skew bound in epochs (defaults to the grid epsilon)")
    args = parser.parse_args(argv)

    try:
        spec = _load_grid(args.grid)
    except (OSError, ValueError, RepClError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    epsilon = spec.get("epsilon", 10)
    eps_actual = args.epsilon_actual or epsilon
    eps_configured = args.epsilon_configured or epsilon
    config = ClockConfig(
        n=spec.get("n", 8),
        epsilon=eps_configured,
        interval_us=spec.get("interval_us", 100),
        counter_bits=spec.get("counter_bits", 8),
        counter_mode=CounterMode(spec.get("counter_mode", "full")),
    )
    partial = eps_configured != eps_actual
    base = SimParams(
        config=config,
        ticks=spec.get("ticks", 5000),
        tick_us=spec.get("tick_us", 1),
        local_ratio=spec.get("local_ratio", 0.5),
        skew_epsilon=eps_actual,
        reference_epsilon=eps_actual if partial else None,
        allow_delta_over_skew=True,
    )
    alphas = spec.get("alpha", [1.0])
    deltas = spec.get("delta_us", [2])
    grid = [
        replace(base, alpha_pct=float(a), delta_us=int(d)) for d in deltas for a in alphas
    ]
    result = feasibility_sweep(grid, budget=args.budget, seeds=list(range(args.seeds)))
    if partial:
        sample = run(replace(grid[len(grid) // 2], seed=0))
        print(f"forced-order rate (epsilon {eps_configured} vs {eps_actual}): "
              f"{forced_order_rate(sample):.4f}")
    if args.out_csv:
        args.out_csv.write_text("\n".join(result.csv_lines()) + "\n", encoding="utf-8")
    if args.out_plot:
        args.out_plot.write_text(sweep_plot_svg(result), encoding="utf-8")
    feasible = sum(1 for p in result.points if p.feasible)
    print(f"{feasible}/{len(result.points)} grid points feasible at budget {args.budget:g}")
    for delta, alpha in sorted(result.boundary.items()):
        extent = "none" if alpha is None else f"alpha <= {alpha:g}"
        print(f"  delta {delta}us: {extent}")
    return 0


# ---------------------------------------------------------------------------
# repcl-serve

def serve_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="repcl-serve", description="Serve the replay session API (and UI bundle)."
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--trace-dir", type=Path, default=None)
    parser.add_argument("--static-dir", type=Path, default=None)
    parser.add_argument("--ttl", type=float, default=3600.0, help="idle session TTL, seconds")
    args = parser.parse_args(argv)

    import uvicorn

    from .service import create_app

    app = create_app(
        trace_dir=str(args.trace_dir) if args.trace_dir else None,
        static_dir=str(args.static_dir) if args.static_dir else None,
        ttl_seconds=args.ttl,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(sim_main())
