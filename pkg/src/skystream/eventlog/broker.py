"""Embedded partitioned commit log.

A Broker owns a data directory with one subdirectory per topic, one per
partition inside that, and segment files named by the offset of their first
record:

    <data_dir>/<topic>/topic.json
    <data_dir>/<topic>/<partition>/00000000000000000042.seg
    <data_dir>/_groups/<group_id>.offsets

Offsets are dense per partition. Keyed records map to partitions with
64-bit FNV-1a; unkeyed records round-robin per producer handle. Consumer
group positions live in small JSON files replaced atomically, so a crash
never leaves a half-written commit.
"""

from __future__ import annotations

import bisect
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .framing import (
    CrcMismatch,
    LogRecord,
    decode_record,
    encode_record,
    scan_segment,
)

SEGMENT_SUFFIX = ".seg"
GROUPS_DIR = "_groups"
DEFAULT_SEGMENT_MAX_BYTES = 64 * 1024 * 1024
DEFAULT_RETENTION_SECONDS = 24 * 3600

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1

_TOPIC_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")


class LogError(Exception):
    pass


class TopicExists(LogError):
    pass


class UnknownTopic(LogError):
    pass


class InvalidConfig(LogError):
    pass


class RecordTooLarge(LogError):
    pass


class OffsetOutOfRange(LogError):
    pass


class CorruptRecord(LogError):
    pass


class RegressingCommit(LogError):
    pass


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _U64
    return h


def assign_partition(key: Optional[bytes], partitions: int, round_robin: int = 0) -> int:
    """Keyed records hash with FNV-1a; unkeyed take the caller's counter."""
    if partitions < 1:
        raise InvalidConfig("partitions must be >= 1")
    if key is None:
        return round_robin % partitions
    return fnv1a64(key) % partitions


@dataclass(frozen=True, slots=True)
class RetentionPolicy:
    max_age_seconds: Optional[int] = DEFAULT_RETENTION_SECONDS
    max_bytes_per_partition: Optional[int] = None

    def validate(self) -> None:
        if self.max_age_seconds is not None and self.max_age_seconds <= 0:
            raise InvalidConfig("max_age_seconds must be positive or None")
        if self.max_bytes_per_partition is not None and self.max_bytes_per_partition <= 0:
            raise InvalidConfig("max_bytes_per_partition must be positive or None")


@dataclass(frozen=True, slots=True)
class TopicConfig:
    name: str
    partitions: int = 4
    segment_max_bytes: int = DEFAULT_SEGMENT_MAX_BYTES
    retention: RetentionPolicy = field(default_factory=RetentionPolicy)

    def validate(self) -> None:
        if not self.name or not _TOPIC_NAME_RE.match(self.name):
            raise InvalidConfig(f"bad topic name: {self.name!r}")
        if self.name.startswith("_"):
            raise InvalidConfig("topic names starting with _ are reserved")
        if self.partitions < 1:
            raise InvalidConfig("partitions must be >= 1")
        if self.segment_max_bytes < 1024:
            raise InvalidConfig("segment_max_bytes must be >= 1024")
        self.retention.validate()

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "partitions": self.partitions,
            "segment_max_bytes": self.segment_max_bytes,
            "retention": {
                "max_age_seconds": self.retention.max_age_seconds,
                "max_bytes_per_partition": self.retention.max_bytes_per_partition,
            },
        }

    @classmethod
    def from_json(cls, raw: dict) -> "TopicConfig":
        ret = raw.get("retention", {})
        return cls(
            name=raw["name"],
            partitions=raw["partitions"],
            segment_max_bytes=raw["segment_max_bytes"],
            retention=RetentionPolicy(
                max_age_seconds=ret.get("max_age_seconds"),
                max_bytes_per_partition=ret.get("max_bytes_per_partition"),
            ),
        )


@dataclass(frozen=True, slots=True)
class FlushPolicy:
    """When appended frames are pushed from process buffers to the OS.

    mode "every_record" flushes after each append, "every_n" after n
    appends, "interval" when interval_ms has elapsed since the last flush.
    """

    mode: str = "every_record"
    n: int = 1
    interval_ms: int = 0

    def validate(self) -> None:
        if self.mode not in ("every_record", "every_n", "interval"):
            raise InvalidConfig(f"unknown flush mode {self.mode!r}")
        if self.mode == "every_n" and self.n < 1:
            raise InvalidConfig("flush n must be >= 1")
        if self.mode == "interval" and self.interval_ms < 1:
            raise InvalidConfig("flush interval_ms must be >= 1")


def segment_filename(base_offset: int) -> str:
    return f"{base_offset:020d}{SEGMENT_SUFFIX}"


class _Segment:
    """One segment file. Only the partition's last segment accepts writes."""

    __slots__ = (
        "path", "base_offset", "positions", "size_bytes", "max_timestamp",
    )

    def __init__(self, path: str, base_offset: int):
        self.path = path
        self.base_offset = base_offset
        self.positions: list[int] = []
        self.size_bytes = 0
        self.max_timestamp = -1

    @property
    def record_count(self) -> int:
        return len(self.positions)

    @property
    def next_offset(self) -> int:
        return self.base_offset + len(self.positions)


class _Partition:
    def __init__(self, directory: str, index: int, segment_max_bytes: int):
        self.directory = directory
        self.index = index
        self.segment_max_bytes = segment_max_bytes
        self.segments: list[_Segment] = []
        self.lock = threading.Lock()
        self._writer = None
        self._unflushed = 0
        self._last_flush = time.monotonic()

    # -- lifecycle -----------------------------------------------------

    def open(self) -> None:
        os.makedirs(self.directory, exist_ok=True)
        names = sorted(
            n for n in os.listdir(self.directory) if n.endswith(SEGMENT_SUFFIX)
        )
        if not names:
            self._start_segment(0)
            return
        for i, name in enumerate(names):
            base = int(name[: -len(SEGMENT_SUFFIX)])
            seg = _Segment(os.path.join(self.directory, name), base)
            with open(seg.path, "rb") as f:
                data = f.read()
            last = i == len(names) - 1
            positions, timestamps, valid_end, _ = scan_segment(data, verify_crc=last)
            seg.positions = positions
            seg.size_bytes = valid_end
            if timestamps:
                seg.max_timestamp = max(timestamps)
            if last and valid_end < len(data):
                # Torn tail from a crash: drop the partial frame.
                with open(seg.path, "r+b") as f:
                    f.truncate(valid_end)
            self.segments.append(seg)
        active = self.segments[-1]
        self._writer = open(active.path, "ab")

    def close(self) -> None:
        with self.lock:
            if self._writer is not None:
                self._writer.flush()
                self._writer.close()
                self._writer = None

    def _start_segment(self, base_offset: int) -> None:
        seg = _Segment(
            os.path.join(self.directory, segment_filename(base_offset)), base_offset
        )
        if self._writer is not None:
            self._writer.flush()
            self._writer.close()
        self._writer = open(seg.path, "ab")
        self.segments.append(seg)

    # -- writes --------------------------------------------------------

    @property
    def high_watermark(self) -> int:
        return self.segments[-1].next_offset if self.segments else 0

    @property
    def log_start_offset(self) -> int:
        return self.segments[0].base_offset if self.segments else 0

    def append(self, key: Optional[bytes], value: bytes, timestamp: int,
               flush: FlushPolicy) -> int:
        with self.lock:
            offset = self.high_watermark
            frame = encode_record(offset, timestamp, key, value)
            active = self.segments[-1]
            if active.record_count > 0 and active.size_bytes + len(frame) > self.segment_max_bytes:
                self._start_segment(offset)
                active = self.segments[-1]
            active.positions.append(active.size_bytes)
            self._writer.write(frame)
            active.size_bytes += len(frame)
            if timestamp > active.max_timestamp:
                active.max_timestamp = timestamp
            self._unflushed += 1
            self._maybe_flush(flush)
            return offset

    def _maybe_flush(self, policy: FlushPolicy) -> None:
        if self._unflushed == 0:
            return
        if policy.mode == "every_record":
            pass
        elif policy.mode == "every_n":
            if self._unflushed < policy.n:
                return
        else:
            if (time.monotonic() - self._last_flush) * 1000.0 < policy.interval_ms:
                return
        self._writer.flush()
        self._unflushed = 0
        self._last_flush = time.monotonic()

    def flush(self) -> None:
        with self.lock:
            if self._writer is not None and self._unflushed:
                self._writer.flush()
                self._unflushed = 0
                self._last_flush = time.monotonic()

    # -- reads -----------------------------------------------------------

    def read(self, from_offset: int, max_records: int) -> list[LogRecord]:
        if max_records <= 0:
            return []
        with self.lock:
            hw = self.high_watermark
            start = self.log_start_offset
            if from_offset >= hw:
                return []
            if from_offset < start:
                raise OffsetOutOfRange(
                    f"offset {from_offset} below log start {start} (retention)"
                )
            if self._writer is not None and self._unflushed:
                self._writer.flush()
                self._unflushed = 0
            bases = [s.base_offset for s in self.segments]
            idx = bisect.bisect_right(bases, from_offset) - 1
            snapshot = [
                (s.path, s.positions[:], s.base_offset, s.size_bytes)
                for s in self.segments[idx:]
            ]
        out: list[LogRecord] = []
        want = from_offset
        for path, positions, base, size in snapshot:
            if want >= base + len(positions):
                continue
            first = want - base
            start_pos = positions[first]
            with open(path, "rb") as f:
                f.seek(start_pos)
                data = f.read(size - start_pos)
            pos = 0
            for _ in range(len(positions) - first):
                try:
                    record, pos = decode_record(data, pos, verify_crc=True)
                except CrcMismatch as exc:
                    raise CorruptRecord(str(exc)) from exc
                if record.offset != want:
                    raise CorruptRecord(
                        f"offset gap: frame says {record.offset}, expected {want}"
                    )
                out.append(record)
                want += 1
                if len(out) >= max_records:
                    return out
        return out

    # -- retention -------------------------------------------------------

    def enforce_retention(self, policy: RetentionPolicy, now: int) -> int:
        purged = 0
        with self.lock:
            doomed: list[_Segment] = []
            sealed = self.segments[:-1]
            keep = list(sealed)
            if policy.max_age_seconds is not None:
                cutoff = now - policy.max_age_seconds
                while keep and keep[0].max_timestamp < cutoff:
                    doomed.append(keep.pop(0))
            if policy.max_bytes_per_partition is not None:
                total = sum(s.size_bytes for s in keep) + self.segments[-1].size_bytes
                while keep and total > policy.max_bytes_per_partition:
                    victim = keep.pop(0)
                    total -= victim.size_bytes
                    doomed.append(victim)
            for seg in doomed:
                purged += seg.record_count
                os.remove(seg.path)
            self.segments = keep + [self.segments[-1]]
        return purged


class _GroupStore:
    """Durable consumer group positions: one JSON file per group."""

    def __init__(self, directory: str):
        self.directory = directory
        self.lock = threading.Lock()
        self._cache: dict[str, dict] = {}
        os.makedirs(directory, exist_ok=True)
        for name in os.listdir(directory):
            if not name.endswith(".offsets"):
                continue
            with open(os.path.join(directory, name), "r", encoding="utf-8") as f:
                doc = json.load(f)
            self._cache[doc["group_id"]] = doc.get("committed", {})

    def committed(self, group_id: str, topic: str, partition: int) -> int:
        with self.lock:
            return self._cache.get(group_id, {}).get(topic, {}).get(str(partition), 0)

    def commit(self, group_id: str, topic: str, partition: int, offset: int) -> None:
        if offset < 0:
            raise InvalidConfig("commit offset must be >= 0")
        with self.lock:
            committed = self._cache.setdefault(group_id, {})
            current = committed.get(topic, {}).get(str(partition), 0)
            if offset < current:
                raise RegressingCommit(
                    f"group {group_id} {topic}/{partition}: {offset} < {current}"
                )
            committed.setdefault(topic, {})[str(partition)] = offset
            self._persist(group_id, committed)

    def _persist(self, group_id: str, committed: dict) -> None:
        path = os.path.join(self.directory, f"{group_id}.offsets")
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump({"group_id": group_id, "committed": committed}, f)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)

    def groups(self) -> list[str]:
        with self.lock:
            return sorted(self._cache)


class Producer:
    """Write handle with its own round-robin counter for unkeyed records."""

    def __init__(self, broker: "Broker"):
        self._broker = broker
        self._rr: dict[str, int] = {}

    def produce(self, topic: str, key: Optional[bytes], value: bytes,
                timestamp: Optional[int] = None) -> tuple[int, int]:
        """Appends one record; returns (partition, offset)."""
        t = self._broker._topic(topic)
        if key is None:
            counter = self._rr.get(topic, 0)
            self._rr[topic] = counter + 1
            partition = assign_partition(None, t.config.partitions, counter)
        else:
            partition = assign_partition(key, t.config.partitions)
        offset = self._broker._append(topic, partition, key, value, timestamp)
        return partition, offset


class Consumer:
    """Read handle bound to a group; tracks in-memory positions per partition."""

    def __init__(self, broker: "Broker", group_id: str, topic: str):
        self._broker = broker
        self.group_id = group_id
        self.topic = topic
        self._positions: dict[int, int] = {}

    def position(self, partition: int) -> int:
        if partition not in self._positions:
            self._positions[partition] = self._broker.committed(
                self.group_id, self.topic, partition
            )
        return self._positions[partition]

    def poll(self, max_records_per_partition: int) -> dict[int, list[LogRecord]]:
        """Fetches from each partition's position; advances positions in memory."""
        out: dict[int, list[LogRecord]] = {}
        for partition in range(self._broker.partition_count(self.topic)):
            pos = self.position(partition)
            records = self._broker.fetch(
                self.topic, partition, pos, max_records_per_partition
            )
            out[partition] = records
            if records:
                self._positions[partition] = records[-1].offset + 1
        return out

    def commit(self, partition: int, offset: int) -> None:
        self._broker.commit(self.group_id, self.topic, partition, offset)

    def seek(self, partition: int, offset: int) -> None:
        self._positions[partition] = offset

    def rewind_to_committed(self) -> None:
        self._positions.clear()


class _Topic:
    def __init__(self, config: TopicConfig, partitions: list[_Partition]):
        self.config = config
        self.partitions = partitions


class Broker:
    """Filesystem-backed commit log scoped to one data directory.

    Opening a Broker recovers every topic found on disk: sealed segments
    are scanned structurally, the last segment of each partition is
    CRC-verified and truncated at the first damaged frame.
    """

    def __init__(self, data_dir: str, flush: Optional[FlushPolicy] = None):
        self.data_dir = data_dir
        self.flush_policy = flush or FlushPolicy()
        self.flush_policy.validate()
        os.makedirs(data_dir, exist_ok=True)
        self._topics: dict[str, _Topic] = {}
        self._lock = threading.Lock()
        self._groups = _GroupStore(os.path.join(data_dir, GROUPS_DIR))
        for name in sorted(os.listdir(data_dir)):
            path = os.path.join(data_dir, name)
            if name == GROUPS_DIR or not os.path.isdir(path):
                continue
            meta = os.path.join(path, "topic.json")
            if not os.path.isfile(meta):
                continue
            with open(meta, "r", encoding="utf-8") as f:
                config = TopicConfig.from_json(json.load(f))
            self._topics[config.name] = self._open_topic(config)

    def _open_topic(self, config: TopicConfig) -> _Topic:
        parts = []
        for i in range(config.partitions):
            p = _Partition(
                os.path.join(self.data_dir, config.name, str(i)),
                i,
                config.segment_max_bytes,
            )
            p.open()
            parts.append(p)
        return _Topic(config, parts)

    # -- admin -----------------------------------------------------------

    def create_topic(self, config: TopicConfig) -> None:
        config.validate()
        with self._lock:
            if config.name in self._topics:
                raise TopicExists(config.name)
            topic_dir = os.path.join(self.data_dir, config.name)
            os.makedirs(topic_dir, exist_ok=True)
            with open(os.path.join(topic_dir, "topic.json"), "w", encoding="utf-8") as f:
                json.dump(config.to_json(), f, indent=2)
            self._topics[config.name] = self._open_topic(config)

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(self._topics)

    def topic_config(self, topic: str) -> TopicConfig:
        return self._topic(topic).config

    def partition_count(self, topic: str) -> int:
        return self._topic(topic).config.partitions

    def _topic(self, name: str) -> _Topic:
        try:
            return self._topics[name]
        except KeyError:
            raise UnknownTopic(name) from None

    def close(self) -> None:
        with self._lock:
            for t in self._topics.values():
                for p in t.partitions:
                    p.close()

    def __enter__(self) -> "Broker":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- data path ---------------------------------------------------------

    def producer(self) -> Producer:
        return Producer(self)

    def consumer(self, group_id: str, topic: str) -> Consumer:
        self._topic(topic)
        return Consumer(self, group_id, topic)

    def _append(self, topic: str, partition: int, key: Optional[bytes],
                value: bytes, timestamp: Optional[int]) -> int:
        t = self._topic(topic)
        if not 0 <= partition < t.config.partitions:
            raise UnknownTopic(f"{topic} has no partition {partition}")
        if len(value) > t.config.segment_max_bytes:
            raise RecordTooLarge(
                f"value of {len(value)} bytes exceeds segment cap "
                f"{t.config.segment_max_bytes}"
            )
        ts = int(time.time()) if timestamp is None else int(timestamp)
        if ts < 0:
            raise InvalidConfig("timestamp must be >= 0")
        return t.partitions[partition].append(key, value, ts, self.flush_policy)

    def produce(self, topic: str, partition: int, key: Optional[bytes],
                value: bytes, timestamp: Optional[int] = None) -> int:
        """Direct append to an explicit partition; returns the offset."""
        return self._append(topic, partition, key, value, timestamp)

    def fetch(self, topic: str, partition: int, from_offset: int,
              max_records: int) -> list[LogRecord]:
        t = self._topic(topic)
        if not 0 <= partition < t.config.partitions:
            raise UnknownTopic(f"{topic} has no partition {partition}")
        return t.partitions[partition].read(from_offset, max_records)

    def high_watermark(self, topic: str, partition: int) -> int:
        t = self._topic(topic)
        if not 0 <= partition < t.config.partitions:
            raise UnknownTopic(f"{topic} has no partition {partition}")
        return t.partitions[partition].high_watermark

    def log_start_offset(self, topic: str, partition: int) -> int:
        t = self._topic(topic)
        return t.partitions[partition].log_start_offset

    def flush(self) -> None:
        with self._lock:
            for t in self._topics.values():
                for p in t.partitions:
                    p.flush()

    # -- groups --------------------------------------------------------------

    def commit(self, group_id: str, topic: str, partition: int, offset: int) -> None:
        t = self._topic(topic)
        if not 0 <= partition < t.config.partitions:
            raise UnknownTopic(f"{topic} has no partition {partition}")
        hw = t.partitions[partition].high_watermark
        if offset > hw:
            raise OffsetOutOfRange(
                f"cannot commit {offset} past high watermark {hw}"
            )
        self._groups.commit(group_id, topic, partition, offset)

    def committed(self, group_id: str, topic: str, partition: int) -> int:
        return self._groups.committed(group_id, topic, partition)

    def groups(self) -> list[str]:
        return self._groups.groups()

    # -- retention -------------------------------------------------------------

    def enforce_retention(self, topic: str, now: Optional[int] = None) -> int:
        t = self._topic(topic)
        moment = int(time.time()) if now is None else int(now)
        return sum(
            p.enforce_retention(t.config.retention, moment) for p in t.partitions
        )

    # -- introspection -----------------------------------------------------------

    def segment_files(self, topic: str, partition: int) -> list[str]:
        t = self._topic(topic)
        return [s.path for s in t.partitions[partition].segments]

    def iter_records(self, topic: str, partition: int,
                     batch: int = 2048) -> Iterator[LogRecord]:
        offset = self.log_start_offset(topic, partition)
        while True:
            chunk = self.fetch(topic, partition, offset, batch)
            if not chunk:
                return
            yield from chunk
            offset = chunk[-1].offset + 1
