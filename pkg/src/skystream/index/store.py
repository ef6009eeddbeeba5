"""In-memory document store with an inverted keyword index.

Each Index maps doc ids to flat field dicts. Field types are inferred on
first sight and fixed afterwards: str is STRING, int and float are NUMBER,
EventTime is TIME, GeoPoint is GEO. bool never maps; it would otherwise
masquerade as a NUMBER.

Writes land in a pending buffer and become searchable at refresh. A
refresh interval of zero applies writes immediately; a positive interval
refreshes lazily when a search arrives after the interval has elapsed.
get() bypasses visibility and always sees the newest version.

Snapshots are single files: magic "SKIX", a u16 format version, a u32 doc
count, length-prefixed JSON docs, and a trailing CRC-32 of everything
before it.
"""

from __future__ import annotations

import enum
import json
import math
import os
import struct
import threading
import time
import zlib
from typing import Any, Callable, Iterable, Mapping, Optional

from ..model import EventTime, GeoPoint
from . import geohash

SNAPSHOT_MAGIC = b"SKIX"
SNAPSHOT_VERSION = 1

DEFAULT_GEO_PRECISION = 4


class StoreError(Exception):
    pass


class UnknownIndex(StoreError):
    pass


class IndexExists(StoreError):
    pass


class MappingConflict(StoreError):
    pass


class SnapshotCorrupt(StoreError):
    pass


class FieldType(enum.Enum):
    STRING = "string"
    NUMBER = "number"
    TIME = "time"
    GEO = "geo"


def infer_field_type(value: Any) -> FieldType:
    if isinstance(value, bool):
        raise MappingConflict("bool field values are not mappable")
    if isinstance(value, EventTime):
        return FieldType.TIME
    if isinstance(value, str):
        return FieldType.STRING
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise MappingConflict("non-finite number is not mappable")
        return FieldType.NUMBER
    if isinstance(value, GeoPoint):
        return FieldType.GEO
    raise MappingConflict(f"unsupported field value type {type(value).__name__}")


def fold_term(value: str) -> str:
    return value.casefold()


class Index:
    """One named index: documents, mapping, postings, geo cells."""

    def __init__(self, name: str, geo_precision: int = DEFAULT_GEO_PRECISION,
                 refresh_interval: float = 0.0):
        if not 1 <= geo_precision <= 12:
            raise ValueError("geo_precision must be in [1, 12]")
        if refresh_interval < 0:
            raise ValueError("refresh_interval must be >= 0")
        self.name = name
        self.geo_precision = geo_precision
        self.refresh_interval = refresh_interval
        self._lock = threading.RLock()
        self.mapping: dict[str, FieldType] = {}
        self._docs: dict[str, dict[str, Any]] = {}
        self._versions: dict[str, int] = {}
        # doc id -> fields, or None for a buffered delete
        self._pending: dict[str, Optional[dict[str, Any]]] = {}
        self._postings: dict[tuple[str, str], set[str]] = {}
        self._values: dict[str, dict[str, Any]] = {}
        self._geo_cells: dict[str, dict[str, set[str]]] = {}
        self._last_refresh = time.monotonic()

    # -- mapping ---------------------------------------------------------

    def _check_mapping(self, fields: Mapping[str, Any]) -> None:
        for field, value in fields.items():
            if value is None:
                continue
            ftype = infer_field_type(value)
            known = self.mapping.get(field)
            if known is None:
                continue
            if known is not ftype:
                raise MappingConflict(
                    f"field {field!r} is {known.value}, got {ftype.value}"
                )

    def _extend_mapping(self, fields: Mapping[str, Any]) -> None:
        for field, value in fields.items():
            if value is None:
                continue
            self.mapping.setdefault(field, infer_field_type(value))

    # -- writes -------------------------------------------------------------

    def upsert(self, doc_id: str, fields: Mapping[str, Any]) -> int:
        """Stores a new version of doc_id; returns the version number."""
        if not doc_id:
            raise ValueError("doc_id must be non-empty")
        with self._lock:
            self._check_mapping(fields)
            self._extend_mapping(fields)
            clean = {k: v for k, v in fields.items() if v is not None}
            version = self._versions.get(doc_id, 0) + 1
            self._versions[doc_id] = version
            if self.refresh_interval == 0:
                self._apply(doc_id, clean)
            else:
                self._pending[doc_id] = clean
            return version

    def delete(self, doc_id: str) -> bool:
        """True when the doc existed (visible or pending)."""
        with self._lock:
            existed = doc_id in self._docs or self._pending.get(doc_id) is not None
            if doc_id not in self._docs and doc_id not in self._pending:
                return False
            self._versions[doc_id] = self._versions.get(doc_id, 0) + 1
            if self.refresh_interval == 0:
                self._apply(doc_id, None)
            else:
                self._pending[doc_id] = None
            return existed

    def refresh(self) -> int:
        """Applies buffered writes; returns how many became visible."""
        with self._lock:
            applied = len(self._pending)
            for doc_id, fields in self._pending.items():
                self._apply(doc_id, fields)
            self._pending.clear()
            self._last_refresh = time.monotonic()
            return applied

    def _maybe_refresh(self) -> None:
        if self.refresh_interval == 0:
            return
        if time.monotonic() - self._last_refresh >= self.refresh_interval:
            self.refresh()

    def _apply(self, doc_id: str, fields: Optional[dict[str, Any]]) -> None:
        old = self._docs.pop(doc_id, None)
        if old is not None:
            self._unindex(doc_id, old)
        if fields is None:
            return
        self._docs[doc_id] = fields
        for field, value in fields.items():
            ftype = self.mapping[field]
            if ftype is FieldType.STRING:
                self._postings.setdefault((field, fold_term(value)), set()).add(doc_id)
            elif ftype is FieldType.GEO:
                cell = geohash.encode(value.lat, value.lng, self.geo_precision)
                self._geo_cells.setdefault(field, {}).setdefault(cell, set()).add(doc_id)
            else:
                self._values.setdefault(field, {})[doc_id] = value

    def _unindex(self, doc_id: str, fields: dict[str, Any]) -> None:
        for field, value in fields.items():
            ftype = self.mapping[field]
            if ftype is FieldType.STRING:
                key = (field, fold_term(value))
                bucket = self._postings.get(key)
                if bucket is not None:
                    bucket.discard(doc_id)
                    if not bucket:
                        del self._postings[key]
            elif ftype is FieldType.GEO:
                cells = self._geo_cells.get(field, {})
                cell = geohash.encode(value.lat, value.lng, self.geo_precision)
                bucket = cells.get(cell)
                if bucket is not None:
                    bucket.discard(doc_id)
                    if not bucket:
                        del cells[cell]
            else:
                per_field = self._values.get(field)
                if per_field is not None:
                    per_field.pop(doc_id, None)

    # -- reads ------------------------------------------------------------

    def get(self, doc_id: str) -> Optional[dict[str, Any]]:
        """Newest version regardless of refresh state."""
        with self._lock:
            if doc_id in self._pending:
                fields = self._pending[doc_id]
                return dict(fields) if fields is not None else None
            fields = self._docs.get(doc_id)
            return dict(fields) if fields is not None else None

    def version(self, doc_id: str) -> int:
        with self._lock:
            return self._versions.get(doc_id, 0)

    @property
    def doc_count(self) -> int:
        with self._lock:
            return len(self._docs)

    @property
    def pending_count(self) -> int:
        with self._lock:
            return len(self._pending)

    def visible_ids(self) -> set[str]:
        with self._lock:
            self._maybe_refresh()
            return set(self._docs)

    def visible_docs(self) -> dict[str, dict[str, Any]]:
        with self._lock:
            self._maybe_refresh()
            return {doc_id: dict(fields) for doc_id, fields in self._docs.items()}

    # Internal accessors used by query evaluation. Callers hold no lock;
    # each call takes it briefly and returns copies or stable snapshots.

    def _term_postings(self, field: str, term: str) -> set[str]:
        return set(self._postings.get((field, term), ()))

    def _field_values(self, field: str) -> dict[str, Any]:
        return self._values.get(field, {})

    def _geo_field_cells(self, field: str) -> dict[str, set[str]]:
        return self._geo_cells.get(field, {})

    def search_lock(self) -> threading.RLock:
        return self._lock

    # -- snapshots -----------------------------------------------------------

    def save_snapshot(self, path: str) -> int:
        """Writes visible docs to path; returns the doc count written."""
        with self._lock:
            self._maybe_refresh()
            parts = [SNAPSHOT_MAGIC, struct.pack(">H", SNAPSHOT_VERSION),
                     struct.pack(">I", len(self._docs))]
            for doc_id in sorted(self._docs):
                doc = {
                    "_id": doc_id,
                    "_version": self._versions.get(doc_id, 1),
                    "fields": _fields_to_wire(self._docs[doc_id]),
                }
                blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
                parts.append(struct.pack(">I", len(blob)))
                parts.append(blob)
            body = b"".join(parts)
            count = len(self._docs)
        tmp = path + ".tmp"
        with open(tmp, "wb") as f:
            f.write(body)
            f.write(struct.pack(">I", zlib.crc32(body)))
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
        return count

    def load_snapshot(self, path: str) -> int:
        """Replaces index contents with the snapshot; returns docs loaded."""
        with open(path, "rb") as f:
            data = f.read()
        if len(data) < 14 or data[:4] != SNAPSHOT_MAGIC:
            raise SnapshotCorrupt("bad magic")
        (stored_crc,) = struct.unpack(">I", data[-4:])
        if zlib.crc32(data[:-4]) != stored_crc:
            raise SnapshotCorrupt("crc mismatch")
        (version,) = struct.unpack(">H", data[4:6])
        if version != SNAPSHOT_VERSION:
            raise SnapshotCorrupt(f"unsupported snapshot version {version}")
        (count,) = struct.unpack(">I", data[6:10])
        pos = 10
        docs: list[dict] = []
        for _ in range(count):
            if pos + 4 > len(data) - 4:
                raise SnapshotCorrupt("truncated doc table")
            (length,) = struct.unpack(">I", data[pos : pos + 4])
            pos += 4
            if pos + length > len(data) - 4:
                raise SnapshotCorrupt("doc overruns file")
            docs.append(json.loads(data[pos : pos + length]))
            pos += length
        if pos != len(data) - 4:
            raise SnapshotCorrupt("trailing bytes after doc table")
        with self._lock:
            self.mapping.clear()
            self._docs.clear()
            self._versions.clear()
            self._pending.clear()
            self._postings.clear()
            self._values.clear()
            self._geo_cells.clear()
            for doc in docs:
                fields = _fields_from_wire(doc["fields"])
                self._check_mapping(fields)
                self._extend_mapping(fields)
                self._versions[doc["_id"]] = doc["_version"]
                self._apply(doc["_id"], fields)
            self._last_refresh = time.monotonic()
            return len(self._docs)


def _fields_to_wire(fields: Mapping[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for field, value in fields.items():
        if isinstance(value, EventTime):
            out[field] = {"t": int(value)}
        elif isinstance(value, GeoPoint):
            out[field] = {"g": [value.lat, value.lng]}
        elif isinstance(value, str):
            out[field] = {"s": value}
        else:
            out[field] = {"n": value}
    return out


def _fields_from_wire(wire: Mapping[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for field, tagged in wire.items():
        if "t" in tagged:
            out[field] = EventTime(tagged["t"])
        elif "g" in tagged:
            out[field] = GeoPoint(tagged["g"][0], tagged["g"][1])
        elif "s" in tagged:
            out[field] = tagged["s"]
        else:
            out[field] = tagged["n"]
    return out


def fields_to_json(fields: Mapping[str, Any]) -> dict[str, Any]:
    """Plain-JSON view of a doc: GeoPoint becomes {lat, lng}, EventTime an int."""
    out: dict[str, Any] = {}
    for field, value in fields.items():
        if isinstance(value, GeoPoint):
            out[field] = {"lat": value.lat, "lng": value.lng}
        elif isinstance(value, EventTime):
            out[field] = int(value)
        else:
            out[field] = value
    return out


class DocumentStore:
    """Catalog of named indexes."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._indexes: dict[str, Index] = {}

    def create_index(self, name: str, geo_precision: int = DEFAULT_GEO_PRECISION,
                     refresh_interval: float = 0.0) -> Index:
        if not name:
            raise ValueError("index name must be non-empty")
        with self._lock:
            if name in self._indexes:
                raise IndexExists(name)
            idx = Index(name, geo_precision, refresh_interval)
            self._indexes[name] = idx
            return idx

    def ensure_index(self, name: str, geo_precision: int = DEFAULT_GEO_PRECISION,
                     refresh_interval: float = 0.0) -> Index:
        with self._lock:
            idx = self._indexes.get(name)
            if idx is None:
                idx = Index(name, geo_precision, refresh_interval)
                self._indexes[name] = idx
            return idx

    def index(self, name: str) -> Index:
        with self._lock:
            try:
                return self._indexes[name]
            except KeyError:
                raise UnknownIndex(name) from None

    def drop_index(self, name: str) -> None:
        with self._lock:
            if name not in self._indexes:
                raise UnknownIndex(name)
            del self._indexes[name]

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._indexes)

    def total_doc_count(self) -> int:
        with self._lock:
            return sum(idx.doc_count for idx in self._indexes.values())
