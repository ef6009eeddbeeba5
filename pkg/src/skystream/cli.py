"""Command line entry points.

Subcommands cover the full loop: broker-init lays out the commit log,
simulate produces flight positions into it, pipeline drains it into the
document store, serve runs pipeline plus HTTP API in one process, analyze
crunches an on-time performance CSV, and demo runs the whole loop
end-to-end in a scratch directory and prints what happened.

Output meant for scripts is one key=value pair per line. Exit codes: 2
for configuration problems, 3 for storage or data problems, 4 for network
problems.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import shutil
import sys
import tempfile
import threading
import time
from dataclasses import replace
from typing import Any, Optional

from .config import ConfigError, RunConfig, SETTING_NAMES, resolve_config
from .eventlog import Broker, LogError, TopicConfig, TopicExists, RetentionPolicy
from .histbatch import (
    HistBatchError,
    export_summary,
    parse_bts_csv,
    rank_dimension,
    summarize,
)
from .index import DocumentStore, fields_to_json
from .metrics import Metrics
from .model import ValidationError
from .service import QueryService, make_server
from .simsource import SimConfig, generate_fleet, load_airports, tick
from .stream import Pipeline, SimulatedCrash, StreamConfig, publish_positions

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STORAGE = 3
EXIT_NETWORK = 4

DEFAULT_START_TIME = 1_700_000_000


def _print_kv(pairs: dict[str, Any]) -> None:
    for key, value in pairs.items():
        if isinstance(value, float):
            print(f"{key}={value:.3f}")
        else:
            print(f"{key}={value}")


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q * len(ordered)))
    return ordered[rank - 1]


def _stream_config(cfg: RunConfig) -> StreamConfig:
    return StreamConfig(
        source_topic=cfg.topic,
        group_id=cfg.group_id,
        positions_index=cfg.positions_index,
        windows_index=cfg.windows_index,
        batch_interval_seconds=cfg.batch_interval_seconds,
        window_seconds=cfg.window_seconds,
        allowed_lateness_seconds=cfg.allowed_lateness_seconds,
        max_records_per_partition=cfg.max_records_per_partition,
        parallelism=cfg.parallelism,
        geo_precision=cfg.geo_precision,
        refresh_interval_seconds=cfg.refresh_interval_seconds,
    )


def _topic_config(cfg: RunConfig) -> TopicConfig:
    return TopicConfig(
        name=cfg.topic,
        partitions=cfg.partitions,
        segment_max_bytes=cfg.segment_max_bytes,
        retention=RetentionPolicy(max_age_seconds=cfg.retention_seconds),
    )


def _ensure_topic(broker: Broker, cfg: RunConfig) -> bool:
    try:
        broker.create_topic(_topic_config(cfg))
        return True
    except TopicExists:
        return False


# -- subcommands --------------------------------------------------------------


def cmd_broker_init(cfg: RunConfig) -> int:
    with Broker(cfg.data_dir) as broker:
        created = _ensure_topic(broker, cfg)
    _print_kv({
        "data_dir": cfg.data_dir,
        "topic": cfg.topic,
        "partitions": cfg.partitions,
        "segment_max_bytes": cfg.segment_max_bytes,
        "created": str(created).lower(),
    })
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    metrics = Metrics()
    with Broker(cfg.data_dir) as broker:
        _ensure_topic(broker, cfg)
        airports = load_airports()
        fleet = generate_fleet(
            SimConfig(
                seed=cfg.seed,
                flight_count=cfg.flight_count,
                tick_seconds=cfg.tick_seconds,
                start_time=DEFAULT_START_TIME,
            ),
            airports,
        )
        producer = broker.producer()
        produced = 0
        ticks = 0
        for t in range(
            DEFAULT_START_TIME,
            DEFAULT_START_TIME + cfg.duration_seconds,
            cfg.tick_seconds,
        ):
            produced += publish_positions(
                producer, cfg.topic, tick(fleet, t), metrics
            )
            ticks += 1
    _print_kv({
        "flights": cfg.flight_count,
        "seed": cfg.seed,
        "ticks": ticks,
        "produced": produced,
    })
    return EXIT_OK


def cmd_pipeline(cfg: RunConfig, drain: bool) -> int:
    metrics = Metrics()
    store = DocumentStore()
    with Broker(cfg.data_dir) as broker:
        with Pipeline(broker, store, _stream_config(cfg), metrics) as pipeline:
            if drain:
                totals = pipeline.drain()
            else:
                stop = threading.Event()
                try:
                    pipeline.run_until(stop)
                except KeyboardInterrupt:
                    stop.set()
                totals = {
                    "records": int(metrics.get("records_consumed")),
                    "late_dropped": int(metrics.get("late_dropped")),
                    "windows_closed": 0,
                    "dead_letter": int(metrics.get("dead_letter")),
                }
    _print_kv({
        **totals,
        "positions_docs": store.index(cfg.positions_index).doc_count,
        "windows_docs": store.index(cfg.windows_index).doc_count,
    })
    return EXIT_OK


def cmd_serve(cfg: RunConfig, bts_csv: Optional[str], dataset: str) -> int:
    metrics = Metrics()
    store = DocumentStore()
    summaries = {}
    if bts_csv is not None:
        summaries[dataset] = summarize(parse_bts_csv(bts_csv), dataset)
    broker = Broker(cfg.data_dir)
    pipeline = Pipeline(broker, store, _stream_config(cfg), metrics)
    pipeline.drain()
    stop = threading.Event()
    worker = threading.Thread(
        target=pipeline.run_until, args=(stop,), name="pipeline", daemon=True
    )
    service = QueryService(
        store, metrics, summaries,
        positions_index=cfg.positions_index, cors=cfg.cors,
    )
    try:
        server = make_server(service, cfg.host, cfg.port)
    except OSError as exc:
        print(f"cannot bind {cfg.host}:{cfg.port}: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    worker.start()
    server.start()
    _print_kv({
        "listening": f"http://{server.host}:{server.port}",
        "topic": cfg.topic,
        "positions_index": cfg.positions_index,
        "datasets": ",".join(sorted(summaries)) or "-",
    })
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        stop.set()
        worker.join(timeout=10)
        server.stop()
        pipeline.close()
        broker.close()
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, csv_path: str, dataset: str,
                out: Optional[str], rank: Optional[str], top: int) -> int:
    records = parse_bts_csv(csv_path)
    summary = summarize(records, dataset)
    _print_kv({
        "dataset": dataset,
        "total_flights": summary.total_flights,
        "cancelled": summary.cancelled,
        "on_time": summary.on_time,
        "delayed": summary.delayed,
        "on_time_pct": summary.on_time_pct,
        "delayed_pct": summary.delayed_pct,
    })
    if rank is not None:
        for row in rank_dimension(records, rank, top=top):
            print(
                f"rank.{rank}={row['key']} flights={row['flights']} "
                f"delayed={row['delayed']} delayed_pct={row['delayed_pct']}"
            )
    text = export_summary(summary, out)
    if out is None:
        print(text)
    else:
        _print_kv({"written": out})
    return EXIT_OK


# -- demo ---------------------------------------------------------------------


def _digest_store(store: DocumentStore) -> str:
    state: dict[str, dict[str, Any]] = {}
    for name in store.names():
        index = store.index(name)
        docs = index.visible_docs()
        state[name] = {
            doc_id: fields_to_json(fields) for doc_id, fields in docs.items()
        }
    blob = json.dumps(state, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def run_demo(cfg: RunConfig, data_dir: str,
             crash_after_batches: Optional[int] = None,
             live_seconds: Optional[float] = None,
             target_rate: int = 8000) -> dict[str, Any]:
    """Produces a simulated fleet into a fresh log and indexes all of it.

    With crash_after_batches set, the first pipeline run aborts after that
    many batches and a recovery run rebuilds the store from the log, the
    way a restarted process would. With live_seconds set, production is
    paced in real time at target_rate records/second alongside a running
    pipeline instead of being written up front.

    Returns counters, latency percentiles, and a digest of the final
    store contents.
    """
    t0 = time.perf_counter()
    metrics = Metrics()
    produced = 0
    seen: set[tuple[str, int]] = set()
    airports = load_airports()
    fleet = generate_fleet(
        SimConfig(
            seed=cfg.seed,
            flight_count=cfg.flight_count,
            tick_seconds=cfg.tick_seconds,
            start_time=DEFAULT_START_TIME,
        ),
        airports,
    )

    with Broker(data_dir) as broker:
        _ensure_topic(broker, cfg)
        producer = broker.producer()
        store = DocumentStore()
        stream_cfg = _stream_config(cfg)

        if live_seconds is not None:
            pipeline = Pipeline(broker, store, stream_cfg, metrics)
            stop = threading.Event()
            worker = threading.Thread(
                target=pipeline.run_until, args=(stop,), daemon=True
            )
            worker.start()
            deadline = t0 + live_seconds
            sim_t = DEFAULT_START_TIME
            chunk = max(1, min(64, target_rate // 100))
            while time.perf_counter() < deadline:
                positions = tick(fleet, sim_t)
                sim_t += cfg.tick_seconds
                for i in range(0, len(positions), chunk):
                    if time.perf_counter() >= deadline:
                        break
                    batch = positions[i:i + chunk]
                    produced += publish_positions(
                        producer, cfg.topic, batch, metrics
                    )
                    seen.update(
                        (p.flight_icao, int(p.updated)) for p in batch
                    )
                    ahead = produced / target_rate - (time.perf_counter() - t0)
                    if ahead > 0.005:
                        time.sleep(ahead)
            stop.set()
            worker.join(timeout=30)
            pipeline.drain()
            pipeline.close()
        else:
            for t in range(
                DEFAULT_START_TIME,
                DEFAULT_START_TIME + cfg.duration_seconds,
                cfg.tick_seconds,
            ):
                positions = tick(fleet, t)
                produced += publish_positions(producer, cfg.topic, positions, metrics)
                seen.update((p.flight_icao, int(p.updated)) for p in positions)

            crash_happened = False
            if crash_after_batches is not None:
                def failpoint(batch_index: int) -> None:
                    if batch_index == crash_after_batches:
                        raise SimulatedCrash(f"injected at batch {batch_index}")

                pipeline = Pipeline(broker, store, stream_cfg, metrics,
                                    failpoint=failpoint)
                try:
                    pipeline.drain()
                except SimulatedCrash:
                    crash_happened = True
                finally:
                    pipeline.close()
            else:
                pipeline = Pipeline(broker, store, stream_cfg, metrics)
                pipeline.drain()
                pipeline.close()
            if crash_happened:
                # Process death: the in-memory store is gone with the
                # process, so recovery rebuilds it from the log.
                store = DocumentStore()
                metrics = Metrics()
                pipeline = Pipeline(broker, store, stream_cfg, metrics,
                                    reset=True)
                pipeline.drain()
                pipeline.close()

        elapsed = time.perf_counter() - t0
        latencies = pipeline.latencies_ms
        positions_count = store.index(cfg.positions_index).doc_count
        windows_count = store.index(cfg.windows_index).doc_count
        return {
            "produced": produced,
            "distinct_produced": len(seen),
            "indexed_positions": positions_count,
            "indexed_windows": windows_count,
            "records_consumed": int(metrics.get("records_consumed")),
            "late_dropped": int(metrics.get("late_dropped")),
            "dead_letter": int(metrics.get("dead_letter")),
            "batches": int(metrics.get("batches_processed")),
            "p50_batch_ms": _percentile(latencies, 0.50),
            "p99_batch_ms": _percentile(latencies, 0.99),
            "elapsed_s": elapsed,
            "rate_rec_s": produced / elapsed if elapsed > 0 else 0.0,
            "crash_injected": crash_after_batches is not None,
            "digest": _digest_store(store),
        }


def cmd_demo(cfg: RunConfig, keep: bool, crash_after: Optional[int],
             live_seconds: Optional[float], target_rate: int) -> int:
    data_dir = cfg.data_dir if keep else tempfile.mkdtemp(prefix="skystream-demo-")
    try:
        results = run_demo(
            cfg, data_dir,
            crash_after_batches=crash_after,
            live_seconds=live_seconds,
            target_rate=target_rate,
        )
        _print_kv(results)
        return EXIT_OK
    finally:
        if not keep:
            shutil.rmtree(data_dir, ignore_errors=True)


# -- argument parsing ---------------------------------------------------------


_FLAG_HELP = {
    "data_dir": "directory holding the commit log",
    "topic": "topic name for flight positions",
    "partitions": "partition count for new topics",
    "segment_max_bytes": "segment roll size in bytes",
    "retention_seconds": "record retention age",
    "batch_interval_seconds": "pipeline batch cadence",
    "window_seconds": "tumbling window width",
    "allowed_lateness_seconds": "event lateness tolerance",
    "max_records_per_partition": "per-partition batch cap",
    "parallelism": "partition fetch threads",
    "geo_precision": "geohash cell precision for the positions index",
    "refresh_interval_seconds": "index refresh interval (0 = immediate)",
    "host": "bind address for serve",
    "port": "bind port for serve (0 picks a free port)",
    "cors": "emit permissive CORS headers",
    "group_id": "consumer group for the pipeline",
    "positions_index": "index name for position docs",
    "windows_index": "index name for window docs",
    "seed": "simulation seed",
    "flight_count": "simulated fleet size",
    "tick_seconds": "simulation tick width",
    "duration_seconds": "simulated time span",
}


def _add_setting_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="JSON config file (lowest-precedence overrides)")
    for name in SETTING_NAMES:
        flag = "--" + name.replace("_", "-")
        help_text = _FLAG_HELP.get(name, name)
        if name == "cors":
            parser.add_argument(flag, dest=name, default=None,
                                action=argparse.BooleanOptionalAction,
                                help=help_text)
        else:
            parser.add_argument(flag, dest=name, default=None,
                                metavar="V", help=help_text)


def _resolve(args: argparse.Namespace) -> RunConfig:
    overrides = {name: getattr(args, name) for name in SETTING_NAMES}
    return resolve_config(overrides, os.environ, args.config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skystream",
        description="Flight tracking loop: simulate, log, index, query.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("broker-init", help="create the data dir and topic")
    _add_setting_flags(p)

    p = sub.add_parser("simulate", help="produce simulated flight positions")
    _add_setting_flags(p)

    p = sub.add_parser("pipeline", help="index logged records")
    _add_setting_flags(p)
    p.add_argument("--drain", action="store_true",
                   help="stop when the log is exhausted")

    p = sub.add_parser("serve", help="run pipeline and HTTP API")
    _add_setting_flags(p)
    p.add_argument("--bts-csv", metavar="FILE",
                   help="on-time performance CSV to expose under /api/delays/summary")
    p.add_argument("--dataset", default="default",
                   help="dataset name for --bts-csv")

    p = sub.add_parser("analyze", help="summarize an on-time performance CSV")
    _add_setting_flags(p)
    p.add_argument("--csv", required=True, metavar="FILE",
                   help="input CSV with the standard reporting columns")
    p.add_argument("--dataset", required=True, help="dataset label")
    p.add_argument("--out", metavar="FILE", help="write canonical JSON here")
    p.add_argument("--rank", choices=["carrier", "origin", "origin_state", "weekday"],
                   help="also print a delayed-count ranking")
    p.add_argument("--top", type=int, default=10, help="ranking rows to print")

    p = sub.add_parser("demo", help="end-to-end run in a scratch directory")
    _add_setting_flags(p)
    p.add_argument("--keep", action="store_true",
                   help="use --data-dir instead of a scratch dir and keep it")
    p.add_argument("--crash-after", type=int, metavar="N",
                   help="abort after N batches, then recover and finish")
    p.add_argument("--live-seconds", type=float, metavar="S",
                   help="pace production in real time for S seconds")
    p.add_argument("--target-rate", type=int, default=8000, metavar="R",
                   help="records/second for --live-seconds")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "broker-init":
            return cmd_broker_init(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "pipeline":
            return cmd_pipeline(cfg, args.drain)
        if args.command == "serve":
            return cmd_serve(cfg, args.bts_csv, args.dataset)
        if args.command == "analyze":
            return cmd_analyze(cfg, args.csv, args.dataset, args.out,
                               args.rank, args.top)
        if args.command == "demo":
            return cmd_demo(cfg, args.keep, args.crash_after,
                            args.live_seconds, args.target_rate)
        parser.error(f"unknown command {args.command!r}")
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LogError, HistBatchError, ValidationError, FileNotFoundError) as exc:
        print(f"storage error: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    except OSError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK


if __name__ == "__main__":
    sys.exit(main())
