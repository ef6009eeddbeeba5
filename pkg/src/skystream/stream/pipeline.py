"""Micro-batch pipeline: commit log in, document store out.

Each batch runs a fixed sequence: poll every partition, advance the
watermark, update windows, build index actions, apply them, then commit
offsets. Committing only after the apply gives at-least-once delivery;
doc ids derived from the event itself (flight:updated for positions,
win:start for windows) make replayed writes land on the same documents,
so the observable effect is exactly-once for position docs.

The only durable consumer state is the group's committed offsets. A
process that dies mid-stream rebuilds its in-memory store by replaying
the log from offset zero (reset=True), which reproduces the uninterrupted
run exactly: batch composition is a deterministic function of the log and
config, and each batch is judged against the watermark as of its arrival,
so replay arithmetic is identical. An in-place restart that
keeps an already-populated store resumes from the committed offsets
instead; window accumulators start empty there, so a window straddling
the commit boundary can be re-emitted from its tail only. That trade-off
is what keeps operator state out of the storage contract.

Late events still update position documents; they are only excluded from
window aggregates.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Optional

from ..eventlog import Broker, Producer
from ..index import DocumentStore, Index, MappingConflict
from ..metrics import Metrics
from ..model import EventTime, FlightPosition, GeoPoint, ValidationError, validate_position
from .windows import TumblingWindower, WindowSnapshot

DEFAULT_TOPIC = "flight-positions"


class SimulatedCrash(Exception):
    """Raised by a failpoint to abort a batch between apply and commit."""


@dataclass(frozen=True, slots=True)
class StreamConfig:
    source_topic: str = DEFAULT_TOPIC
    group_id: str = "indexer"
    positions_index: str = "flights_live"
    windows_index: str = "flights_windows"
    batch_interval_seconds: int = 5
    window_seconds: int = 60
    allowed_lateness_seconds: int = 60
    max_records_per_partition: int = 10000
    parallelism: int = 2
    geo_precision: int = 4
    refresh_interval_seconds: float = 0.0
    apply_retries: int = 3
    retry_backoff_seconds: float = 0.05

    def validate(self) -> None:
        if self.batch_interval_seconds < 1:
            raise ValueError("batch_interval_seconds must be >= 1")
        if self.window_seconds < 1:
            raise ValueError("window_seconds must be >= 1")
        if self.window_seconds % self.batch_interval_seconds != 0:
            raise ValueError(
                "window_seconds must be a multiple of batch_interval_seconds"
            )
        if self.allowed_lateness_seconds < 0:
            raise ValueError("allowed_lateness_seconds must be >= 0")
        if not 1 <= self.max_records_per_partition <= 10000:
            raise ValueError("max_records_per_partition must be in [1, 10000]")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.apply_retries < 0:
            raise ValueError("apply_retries must be >= 0")


# -- record serialization ----------------------------------------------------


def encode_position(position: FlightPosition) -> bytes:
    return json.dumps(position.as_dict(), sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def decode_position(value: bytes) -> FlightPosition:
    return validate_position(json.loads(value.decode("utf-8")))


def publish_positions(producer: Producer, topic: str,
                      positions: list[FlightPosition],
                      metrics: Optional[Metrics] = None) -> int:
    for position in positions:
        producer.produce(
            topic,
            key=position.flight_icao.encode("utf-8"),
            value=encode_position(position),
            timestamp=int(position.updated),
        )
    if metrics is not None and positions:
        metrics.inc("records_produced", len(positions))
    return len(positions)


# -- batches and index actions -----------------------------------------------


@dataclass(frozen=True, slots=True)
class MicroBatch:
    batch_id: int
    records: tuple[tuple[int, int, FlightPosition], ...]
    poll_time: int
    dead_letter: int

    @property
    def events(self) -> list[FlightPosition]:
        return [position for _, _, position in self.records]


def position_doc(position: FlightPosition) -> tuple[str, dict[str, Any]]:
    """Doc id and fields for one observation; the id is replay-stable."""
    doc_id = f"{position.flight_icao}:{int(position.updated)}"
    fields: dict[str, Any] = {
        "flight_icao": position.flight_icao,
        "airline_icao": position.airline_icao,
        "dep_icao": position.dep_icao,
        "arr_icao": position.arr_icao,
        "position": GeoPoint(position.lat, position.lng),
        "alt": position.alt,
        "dir": position.dir,
        "speed": position.speed,
        "status": position.status,
        "updated": EventTime(position.updated),
    }
    if position.reg_number is not None:
        fields["reg_number"] = position.reg_number
    if position.flight_iata is not None:
        fields["flight_iata"] = position.flight_iata
    return doc_id, fields


def window_doc(snapshot: WindowSnapshot) -> tuple[str, dict[str, Any]]:
    """Scalar slice of a snapshot, status counts flattened to status_*."""
    doc_id = f"win:{snapshot.window_start}"
    fields: dict[str, Any] = {
        "window_start": EventTime(snapshot.window_start),
        "window_end": EventTime(snapshot.window_end),
        "flight_count": snapshot.flight_count,
        "distinct_flights": snapshot.distinct_flights,
    }
    if snapshot.avg_speed is not None:
        fields["avg_speed"] = snapshot.avg_speed
    if snapshot.max_alt is not None:
        fields["max_alt"] = snapshot.max_alt
    for status, n in snapshot.status_counts:
        fields[f"status_{status.replace('-', '_')}"] = n
    return doc_id, fields


def to_index_actions(batch: MicroBatch, closed: list[WindowSnapshot],
                     positions_index: str, windows_index: str,
                     ) -> list[tuple[str, str, dict[str, Any]]]:
    """Upsert actions as (index name, doc id, fields), positions first."""
    actions = []
    for _, _, position in batch.records:
        doc_id, fields = position_doc(position)
        actions.append((positions_index, doc_id, fields))
    for snapshot in closed:
        doc_id, fields = window_doc(snapshot)
        actions.append((windows_index, doc_id, fields))
    return actions


@dataclass(frozen=True, slots=True)
class BatchStats:
    records: int = 0
    dead_letter: int = 0
    late_dropped: int = 0
    windows_closed: int = 0
    upserts: int = 0
    latency_ms: float = 0.0


# -- the pipeline -------------------------------------------------------------


class Pipeline:
    """Consumes one topic into a positions index and a windows index."""

    def __init__(self, broker: Broker, store: DocumentStore, config: StreamConfig,
                 metrics: Optional[Metrics] = None,
                 failpoint: Optional[Callable[[int], None]] = None,
                 reset: bool = False):
        """With reset, committed offsets are ignored and consumption starts
        at offset zero: the rebuild path for a process whose store died
        with it."""
        config.validate()
        self.broker = broker
        self.store = store
        self.config = config
        self.metrics = metrics or Metrics()
        self.failpoint = failpoint
        self.positions_index = store.ensure_index(
            config.positions_index,
            geo_precision=config.geo_precision,
            refresh_interval=config.refresh_interval_seconds,
        )
        self.windows_index = store.ensure_index(
            config.windows_index,
            refresh_interval=config.refresh_interval_seconds,
        )
        self.windower = TumblingWindower(
            config.window_seconds, config.allowed_lateness_seconds
        )
        self.latencies_ms: list[float] = []
        self.batch_id = 0
        self._partition_count = broker.partition_count(config.source_topic)
        if reset:
            self._positions = {p: 0 for p in range(self._partition_count)}
        else:
            self._positions = {
                p: broker.committed(config.group_id, config.source_topic, p)
                for p in range(self._partition_count)
            }
        self._executor = (
            ThreadPoolExecutor(max_workers=config.parallelism)
            if config.parallelism > 1
            else None
        )

    # -- polling ------------------------------------------------------------

    def _fetch_partition(
        self, partition: int
    ) -> tuple[int, list[tuple[int, Optional[FlightPosition]]], bool]:
        """Fetches one partition's slice as (offset, position-or-None) rows,
        None marking an undecodable record. The flag says the per-partition
        cap was hit, so more data is waiting."""
        from_offset = self._positions[partition]
        records = self.broker.fetch(
            self.config.source_topic,
            partition,
            from_offset,
            self.config.max_records_per_partition,
        )
        entries: list[tuple[int, Optional[FlightPosition]]] = []
        for record in records:
            try:
                entries.append((record.offset, decode_position(record.value)))
            except (ValidationError, ValueError):
                entries.append((record.offset, None))
        capped = len(records) >= self.config.max_records_per_partition
        return partition, entries, capped

    def poll_batch(self) -> tuple[MicroBatch, dict[int, int]]:
        """Fetches from every partition position; batch ids increment on
        every poll, empty ones included. Also returns the post-batch read
        position per partition (dead-lettered records advance it too).

        When the per-partition cap truncates any partition, the batch is
        cut at a shared event-time horizon (the earliest capped partition
        frontier): records past it stay in the log for the next poll. That
        keeps partition frontiers within the lateness budget of each other
        during catch-up, so a backlog replays without shedding events that
        were never actually late.
        """
        parts = range(self._partition_count)
        if self._executor is not None:
            fetched = list(self._executor.map(self._fetch_partition, parts))
        else:
            fetched = [self._fetch_partition(p) for p in parts]
        fetched.sort(key=lambda item: item[0])

        horizon: Optional[int] = None
        for _, entries, capped in fetched:
            if not capped:
                continue
            times = [int(pos.updated) for _, pos in entries if pos is not None]
            if times:
                frontier = max(times)
                horizon = frontier if horizon is None else min(horizon, frontier)

        rows: list[tuple[int, int, FlightPosition]] = []
        dead = 0
        next_positions: dict[int, int] = {}
        for partition, entries, _ in fetched:
            next_offset = self._positions[partition]
            for offset, pos in entries:
                if pos is not None and horizon is not None and int(pos.updated) > horizon:
                    break
                if pos is None:
                    dead += 1
                else:
                    rows.append((partition, offset, pos))
                next_offset = offset + 1
            next_positions[partition] = next_offset
        self.batch_id += 1
        batch = MicroBatch(
            batch_id=self.batch_id,
            records=tuple(rows),
            poll_time=int(time.time()),
            dead_letter=dead,
        )
        return batch, next_positions

    # -- batch --------------------------------------------------------------

    def run_once(self) -> BatchStats:
        """One micro-batch; returns its stats. Raises if a failpoint fires."""
        t0 = time.perf_counter()
        batch, new_positions = self.poll_batch()
        records_total = len(batch.records) + batch.dead_letter
        if records_total == 0:
            return BatchStats()

        accepted, dropped = self.windower.ingest(batch.events)
        closed = self.windower.close_due()
        actions = to_index_actions(
            batch, closed, self.config.positions_index, self.config.windows_index
        )
        self._apply(actions)

        if self.failpoint is not None:
            self.failpoint(self.batch_id)

        self._positions = new_positions
        for partition, offset in self._positions.items():
            committed = self.broker.committed(
                self.config.group_id, self.config.source_topic, partition
            )
            if offset > committed:
                self.broker.commit(
                    self.config.group_id, self.config.source_topic,
                    partition, offset,
                )

        latency_ms = (time.perf_counter() - t0) * 1000.0
        self.latencies_ms.append(latency_ms)
        m = self.metrics
        m.inc("records_consumed", records_total)
        m.inc("batches_processed")
        if batch.dead_letter:
            m.inc("dead_letter", batch.dead_letter)
        if dropped:
            m.inc("late_dropped", dropped)
        m.set_gauge("last_batch_latency_ms", latency_ms)
        m.set_gauge("index_doc_count", self.store.total_doc_count())
        return BatchStats(
            records=records_total,
            dead_letter=batch.dead_letter,
            late_dropped=dropped,
            windows_closed=len(closed),
            upserts=len(actions),
            latency_ms=latency_ms,
        )

    def _apply(self, actions: list[tuple[str, str, dict[str, Any]]]) -> None:
        by_name = {
            self.config.positions_index: self.positions_index,
            self.config.windows_index: self.windows_index,
        }
        attempt = 0
        while True:
            try:
                for index_name, doc_id, fields in actions:
                    by_name[index_name].upsert(doc_id, fields)
                return
            except MappingConflict:
                raise
            except Exception:
                if attempt >= self.config.apply_retries:
                    raise
                time.sleep(self.config.retry_backoff_seconds * (2 ** attempt))
                attempt += 1

    def drain(self) -> dict[str, int]:
        """Processes until the log is exhausted, then seals open windows."""
        totals = {"records": 0, "late_dropped": 0, "windows_closed": 0,
                  "dead_letter": 0}
        while True:
            stats = self.run_once()
            if stats.records == 0:
                break
            totals["records"] += stats.records
            totals["late_dropped"] += stats.late_dropped
            totals["windows_closed"] += stats.windows_closed
            totals["dead_letter"] += stats.dead_letter
        flushed = self.windower.flush_all()
        if flushed:
            self._apply([
                (self.config.windows_index, *window_doc(s)) for s in flushed
            ])
            totals["windows_closed"] += len(flushed)
            self.metrics.set_gauge("index_doc_count", self.store.total_doc_count())
        return totals

    def run_until(self, stop_event) -> None:
        """Batch loop on the configured cadence until stop_event is set."""
        interval = float(self.config.batch_interval_seconds)
        while not stop_event.is_set():
            started = time.monotonic()
            self.run_once()
            elapsed = time.monotonic() - started
            stop_event.wait(max(0.0, interval - elapsed))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)

    def __enter__(self) -> "Pipeline":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
