"""Query and aggregation evaluation over an Index.

Semantics are exact, never approximate. A bool query matches when every
must clause matches, at least one should clause matches (vacuously true
with no should clauses), and no must_not clause matches. Terms and ranges
over a field nothing has mapped match no documents at all.

The wire format mirrors the structure one level deep:

    {"match_all": {}}
    {"term": {"field": "status", "value": "en-route"}}
    {"range": {"field": "alt", "gte": 1000, "lt": 11000}}
    {"geo_bbox": {"field": "position",
                  "tl_lat": 50, "tl_lng": -130, "br_lat": 20, "br_lng": -60}}
    {"bool": {"must": [...], "should": [...], "must_not": [...]}}

Aggregations: {"by_airline": {"terms": {"field": "airline_icao", "size": 10}},
               "per_minute": {"date_histogram": {"field": "updated",
                                                 "interval_seconds": 60}},
               "alt": {"stats": {"field": "alt"}},
               "cells": {"geohash_grid": {"field": "position", "precision": 4}}}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Any, Mapping, Optional, Sequence, Union

from ..model import EventTime, GeoPoint
from . import geohash
from .store import FieldType, Index, fields_to_json, fold_term


class MalformedQuery(Exception):
    pass


# -- query AST -------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class MatchAll:
    pass


@dataclass(frozen=True, slots=True)
class Term:
    field: str
    value: Union[str, int, float]

    def __post_init__(self) -> None:
        if not self.field:
            raise MalformedQuery("term field must be non-empty")
        if isinstance(self.value, bool) or not isinstance(self.value, (str, int, float)):
            raise MalformedQuery("term value must be a string or number")


@dataclass(frozen=True, slots=True)
class Range:
    field: str
    gte: Optional[Union[int, float]] = None
    gt: Optional[Union[int, float]] = None
    lte: Optional[Union[int, float]] = None
    lt: Optional[Union[int, float]] = None

    def __post_init__(self) -> None:
        if not self.field:
            raise MalformedQuery("range field must be non-empty")
        bounds = (self.gte, self.gt, self.lte, self.lt)
        if all(b is None for b in bounds):
            raise MalformedQuery("range requires at least one bound")
        if self.gte is not None and self.gt is not None:
            raise MalformedQuery("range cannot set both gte and gt")
        if self.lte is not None and self.lt is not None:
            raise MalformedQuery("range cannot set both lte and lt")
        for b in bounds:
            if b is None:
                continue
            if isinstance(b, bool) or not isinstance(b, (int, float)) or not math.isfinite(b):
                raise MalformedQuery("range bounds must be finite numbers")

    def contains(self, x: Union[int, float]) -> bool:
        if self.gte is not None and not x >= self.gte:
            return False
        if self.gt is not None and not x > self.gt:
            return False
        if self.lte is not None and not x <= self.lte:
            return False
        if self.lt is not None and not x < self.lt:
            return False
        return True


@dataclass(frozen=True, slots=True)
class GeoBbox:
    field: str
    tl_lat: float
    tl_lng: float
    br_lat: float
    br_lng: float

    def __post_init__(self) -> None:
        if not self.field:
            raise MalformedQuery("geo_bbox field must be non-empty")
        for v in (self.tl_lat, self.tl_lng, self.br_lat, self.br_lng):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise MalformedQuery("geo_bbox corners must be finite numbers")
        if not (-90.0 <= self.br_lat <= self.tl_lat <= 90.0):
            raise MalformedQuery("geo_bbox requires -90 <= br_lat <= tl_lat <= 90")
        if not (-180.0 <= self.tl_lng <= self.br_lng <= 180.0):
            raise MalformedQuery("geo_bbox requires -180 <= tl_lng <= br_lng <= 180")

    def contains(self, lat: float, lng: float) -> bool:
        return self.br_lat <= lat <= self.tl_lat and self.tl_lng <= lng <= self.br_lng

    def intersects(self, lat_lo: float, lat_hi: float,
                   lng_lo: float, lng_hi: float) -> bool:
        return (lat_lo <= self.tl_lat and lat_hi >= self.br_lat
                and lng_lo <= self.br_lng and lng_hi >= self.tl_lng)


@dataclass(frozen=True)
class Bool:
    must: tuple = ()
    should: tuple = ()
    must_not: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "must", tuple(self.must))
        object.__setattr__(self, "should", tuple(self.should))
        object.__setattr__(self, "must_not", tuple(self.must_not))


Query = Union[MatchAll, Term, Range, GeoBbox, Bool]


# -- aggregation AST ----------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TermsAgg:
    field: str
    size: int = 10

    def __post_init__(self) -> None:
        if not self.field:
            raise MalformedQuery("terms field must be non-empty")
        if self.size < 1:
            raise MalformedQuery("terms size must be >= 1")


@dataclass(frozen=True, slots=True)
class DateHistogramAgg:
    field: str
    interval_seconds: int

    def __post_init__(self) -> None:
        if not self.field:
            raise MalformedQuery("date_histogram field must be non-empty")
        if not isinstance(self.interval_seconds, int) or isinstance(self.interval_seconds, bool) \
                or self.interval_seconds < 1:
            raise MalformedQuery("date_histogram interval_seconds must be a positive integer")


@dataclass(frozen=True, slots=True)
class StatsAgg:
    field: str

    def __post_init__(self) -> None:
        if not self.field:
            raise MalformedQuery("stats field must be non-empty")


@dataclass(frozen=True, slots=True)
class GeohashGridAgg:
    field: str
    precision: int = 4
    size: int = 10000

    def __post_init__(self) -> None:
        if not self.field:
            raise MalformedQuery("geohash_grid field must be non-empty")
        if not 1 <= self.precision <= 12:
            raise MalformedQuery("geohash_grid precision must be in [1, 12]")
        if self.size < 1:
            raise MalformedQuery("geohash_grid size must be >= 1")


Aggregation = Union[TermsAgg, DateHistogramAgg, StatsAgg, GeohashGridAgg]


# -- evaluation ------------------------------------------------------------


def _match_ids(index: Index, query: Query) -> set[str]:
    if isinstance(query, MatchAll):
        return set(index._docs)
    if isinstance(query, Term):
        ftype = index.mapping.get(query.field)
        if ftype is None:
            return set()
        if ftype is FieldType.GEO:
            raise MalformedQuery("term query cannot target a geo field")
        if ftype is FieldType.STRING:
            if not isinstance(query.value, str):
                return set()
            return index._term_postings(query.field, fold_term(query.value))
        if isinstance(query.value, str):
            return set()
        wanted = query.value
        return {
            doc_id
            for doc_id, value in index._field_values(query.field).items()
            if value == wanted
        }
    if isinstance(query, Range):
        ftype = index.mapping.get(query.field)
        if ftype is None:
            return set()
        if ftype not in (FieldType.NUMBER, FieldType.TIME):
            raise MalformedQuery("range query requires a number or time field")
        return {
            doc_id
            for doc_id, value in index._field_values(query.field).items()
            if query.contains(value)
        }
    if isinstance(query, GeoBbox):
        ftype = index.mapping.get(query.field)
        if ftype is None:
            return set()
        if ftype is not FieldType.GEO:
            raise MalformedQuery("geo_bbox query requires a geo field")
        candidates: set[str] = set()
        for cell, ids in index._geo_field_cells(query.field).items():
            lat_lo, lat_hi, lng_lo, lng_hi = geohash.decode_bounds(cell)
            if query.intersects(lat_lo, lat_hi, lng_lo, lng_hi):
                candidates.update(ids)
        out = set()
        docs = index._docs
        for doc_id in candidates:
            point = docs[doc_id].get(query.field)
            if point is not None and query.contains(point.lat, point.lng):
                out.add(doc_id)
        return out
    if isinstance(query, Bool):
        if query.must:
            acc = _match_ids(index, query.must[0])
            for sub in query.must[1:]:
                if not acc:
                    break
                acc &= _match_ids(index, sub)
        else:
            acc = set(index._docs)
        if query.should:
            union: set[str] = set()
            for sub in query.should:
                union |= _match_ids(index, sub)
            acc &= union
        for sub in query.must_not:
            if not acc:
                break
            acc -= _match_ids(index, sub)
        return acc
    raise MalformedQuery(f"unknown query node {type(query).__name__}")


def search(index: Index, query: Query, size: Optional[int] = 10) -> list[dict[str, Any]]:
    """Matching docs as {_id, _version, fields}, sorted by id; size=None for all."""
    if size is not None and size < 0:
        raise MalformedQuery("size must be >= 0")
    with index.search_lock():
        index._maybe_refresh()
        ids = sorted(_match_ids(index, query))
        if size is not None:
            ids = ids[:size]
        return [
            {
                "_id": doc_id,
                "_version": index._versions.get(doc_id, 1),
                "fields": dict(index._docs[doc_id]),
            }
            for doc_id in ids
        ]


def count(index: Index, query: Query) -> int:
    with index.search_lock():
        index._maybe_refresh()
        return len(_match_ids(index, query))


def _bucket_list(counter: dict[Any, int], size: int) -> list[dict[str, Any]]:
    ordered = sorted(counter.items(), key=lambda kv: (-kv[1], str(kv[0])))
    return [{"key": key, "doc_count": n} for key, n in ordered[:size]]


def aggregate(index: Index, query: Query,
              aggs: Mapping[str, Aggregation]) -> dict[str, Any]:
    """Runs each aggregation over the docs matching query."""
    with index.search_lock():
        index._maybe_refresh()
        ids = _match_ids(index, query)
        docs = index._docs
        out: dict[str, Any] = {}
        for name, agg in aggs.items():
            ftype = index.mapping.get(agg.field)
            if isinstance(agg, TermsAgg):
                if ftype is FieldType.GEO:
                    raise MalformedQuery("terms aggregation cannot target a geo field")
                counter: dict[Any, int] = {}
                for doc_id in ids:
                    value = docs[doc_id].get(agg.field)
                    if value is None:
                        continue
                    key = fold_term(value) if isinstance(value, str) else value
                    counter[key] = counter.get(key, 0) + 1
                out[name] = {"buckets": _bucket_list(counter, agg.size)}
            elif isinstance(agg, DateHistogramAgg):
                if ftype is not None and ftype is not FieldType.TIME:
                    raise MalformedQuery("date_histogram requires a time field")
                counter = {}
                step = agg.interval_seconds
                for doc_id in ids:
                    value = docs[doc_id].get(agg.field)
                    if value is None:
                        continue
                    start = (int(value) // step) * step
                    counter[start] = counter.get(start, 0) + 1
                buckets = [
                    {"key": key, "doc_count": counter[key]}
                    for key in sorted(counter)
                ]
                out[name] = {"buckets": buckets}
            elif isinstance(agg, StatsAgg):
                if ftype is not None and ftype not in (FieldType.NUMBER, FieldType.TIME):
                    raise MalformedQuery("stats requires a number or time field")
                values = [
                    docs[doc_id][agg.field]
                    for doc_id in sorted(ids)
                    if agg.field in docs[doc_id]
                ]
                if values:
                    total = math.fsum(values)
                    out[name] = {
                        "count": len(values),
                        "min": min(values),
                        "max": max(values),
                        "sum": total,
                        "avg": total / len(values),
                    }
                else:
                    out[name] = {"count": 0, "min": None, "max": None,
                                 "sum": 0, "avg": None}
            elif isinstance(agg, GeohashGridAgg):
                if ftype is not None and ftype is not FieldType.GEO:
                    raise MalformedQuery("geohash_grid requires a geo field")
                counter = {}
                for doc_id in ids:
                    point = docs[doc_id].get(agg.field)
                    if point is None:
                        continue
                    cell = geohash.encode(point.lat, point.lng, agg.precision)
                    counter[cell] = counter.get(cell, 0) + 1
                out[name] = {"buckets": _bucket_list(counter, agg.size)}
            else:
                raise MalformedQuery(f"unknown aggregation {type(agg).__name__}")
        return out


def search_response(index: Index, query: Query,
                    aggs: Optional[Mapping[str, Aggregation]] = None,
                    size: Optional[int] = 10) -> dict[str, Any]:
    """JSON-safe search result: total, hits, and aggregations if requested."""
    with index.search_lock():
        hits = search(index, query, size=size)
        total = count(index, query)
        body: dict[str, Any] = {
            "total": total,
            "hits": [
                {"_id": h["_id"], "_version": h["_version"],
                 "fields": fields_to_json(h["fields"])}
                for h in hits
            ],
        }
        if aggs:
            body["aggregations"] = aggregate(index, query, aggs)
        return body


# -- wire format ---------------------------------------------------------------


def _expect_object(raw: Any, what: str) -> Mapping[str, Any]:
    if not isinstance(raw, Mapping):
        raise MalformedQuery(f"{what} must be an object")
    return raw


def query_from_json(raw: Any) -> Query:
    body = _expect_object(raw, "query")
    if len(body) != 1:
        raise MalformedQuery("query object must have exactly one key")
    kind, inner = next(iter(body.items()))
    if kind == "match_all":
        _expect_object(inner, "match_all")
        return MatchAll()
    if kind == "term":
        spec = _expect_object(inner, "term")
        if set(spec) != {"field", "value"}:
            raise MalformedQuery("term takes exactly field and value")
        return Term(field=spec["field"], value=spec["value"])
    if kind == "range":
        spec = _expect_object(inner, "range")
        extra = set(spec) - {"field", "gte", "gt", "lte", "lt"}
        if extra:
            raise MalformedQuery(f"unknown range keys: {sorted(extra)}")
        if "field" not in spec:
            raise MalformedQuery("range requires a field")
        return Range(field=spec["field"], gte=spec.get("gte"), gt=spec.get("gt"),
                     lte=spec.get("lte"), lt=spec.get("lt"))
    if kind == "geo_bbox":
        spec = _expect_object(inner, "geo_bbox")
        needed = {"field", "tl_lat", "tl_lng", "br_lat", "br_lng"}
        if set(spec) != needed:
            raise MalformedQuery(f"geo_bbox takes exactly {sorted(needed)}")
        return GeoBbox(field=spec["field"], tl_lat=spec["tl_lat"],
                       tl_lng=spec["tl_lng"], br_lat=spec["br_lat"],
                       br_lng=spec["br_lng"])
    if kind == "bool":
        spec = _expect_object(inner, "bool")
        extra = set(spec) - {"must", "should", "must_not"}
        if extra:
            raise MalformedQuery(f"unknown bool keys: {sorted(extra)}")
        def clauses(key: str) -> tuple:
            raw_list = spec.get(key, [])
            if not isinstance(raw_list, Sequence) or isinstance(raw_list, (str, bytes)):
                raise MalformedQuery(f"bool {key} must be a list")
            return tuple(query_from_json(item) for item in raw_list)
        return Bool(must=clauses("must"), should=clauses("should"),
                    must_not=clauses("must_not"))
    raise MalformedQuery(f"unknown query type {kind!r}")


def query_to_json(query: Query) -> dict[str, Any]:
    if isinstance(query, MatchAll):
        return {"match_all": {}}
    if isinstance(query, Term):
        return {"term": {"field": query.field, "value": query.value}}
    if isinstance(query, Range):
        spec: dict[str, Any] = {"field": query.field}
        for key in ("gte", "gt", "lte", "lt"):
            value = getattr(query, key)
            if value is not None:
                spec[key] = value
        return {"range": spec}
    if isinstance(query, GeoBbox):
        return {"geo_bbox": {"field": query.field, "tl_lat": query.tl_lat,
                             "tl_lng": query.tl_lng, "br_lat": query.br_lat,
                             "br_lng": query.br_lng}}
    if isinstance(query, Bool):
        return {"bool": {"must": [query_to_json(q) for q in query.must],
                         "should": [query_to_json(q) for q in query.should],
                         "must_not": [query_to_json(q) for q in query.must_not]}}
    raise MalformedQuery(f"unknown query node {type(query).__name__}")


def aggs_from_json(raw: Any) -> dict[str, Aggregation]:
    body = _expect_object(raw, "aggs")
    out: dict[str, Aggregation] = {}
    for name, spec_raw in body.items():
        spec_obj = _expect_object(spec_raw, f"aggregation {name!r}")
        if len(spec_obj) != 1:
            raise MalformedQuery(f"aggregation {name!r} must have exactly one type")
        kind, inner = next(iter(spec_obj.items()))
        spec = _expect_object(inner, f"aggregation {name!r}")
        if kind == "terms":
            out[name] = TermsAgg(field=spec.get("field", ""),
                                 size=spec.get("size", 10))
        elif kind == "date_histogram":
            out[name] = DateHistogramAgg(
                field=spec.get("field", ""),
                interval_seconds=spec.get("interval_seconds", 0),
            )
        elif kind == "stats":
            out[name] = StatsAgg(field=spec.get("field", ""))
        elif kind == "geohash_grid":
            out[name] = GeohashGridAgg(field=spec.get("field", ""),
                                       precision=spec.get("precision", 4),
                                       size=spec.get("size", 10000))
        else:
            raise MalformedQuery(f"unknown aggregation type {kind!r}")
    return out
