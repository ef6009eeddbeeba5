"""Deterministic document corpus and query generator shared by the index
unit tests and the acceptance run (same machinery, different sizes)."""

from __future__ import annotations

import random
from typing import Any

from skystream.index import (
    Bool,
    DateHistogramAgg,
    GeoBbox,
    GeohashGridAgg,
    MatchAll,
    Range,
    StatsAgg,
    Term,
    TermsAgg,
)
from skystream.model import EventTime, GeoPoint

AIRLINES = ["UAL", "DAL", "SWA", "AAL", "ASA", "JBU", "NKS", "FFT"]
STATUSES = ["scheduled", "en-route", "landed"]
BASE_TIME = 1_700_000_000


def make_flight_docs(n: int, seed: int) -> dict[str, dict[str, Any]]:
    rng = random.Random(seed)
    docs: dict[str, dict[str, Any]] = {}
    for i in range(n):
        fields: dict[str, Any] = {
            "flight": f"FL{i:05d}",
            "airline": rng.choice(AIRLINES),
            "status": rng.choice(STATUSES),
            "speed": round(rng.uniform(0.0, 950.0), 1),
            "alt": rng.randint(0, 12000),
            "updated": EventTime(BASE_TIME + rng.randint(0, 86_400)),
            "position": GeoPoint(
                round(rng.uniform(24.0, 49.0), 5),
                round(rng.uniform(-125.0, -66.0), 5),
            ),
        }
        if rng.random() < 0.7:
            fields["reg"] = f"N{rng.randint(100, 999)}{rng.choice('ABCDEFGH')}"
        docs[f"doc-{i:05d}"] = fields
    return docs


def _leaf(rng: random.Random) -> Any:
    kind = rng.randrange(8)
    if kind == 0:
        return MatchAll()
    if kind in (1, 2):
        field, values = rng.choice([
            ("airline", AIRLINES), ("status", STATUSES),
            ("flight", [f"FL{rng.randrange(20000):05d}"]),
            ("reg", [f"N{rng.randint(100, 999)}A"]),
        ])
        value = rng.choice(values)
        if rng.random() < 0.3 and isinstance(value, str):
            value = value.upper()
        return Term(field, value)
    if kind == 3:
        return Term("alt", rng.randint(0, 12000))
    if kind in (4, 5):
        field, lo, hi = rng.choice([
            ("speed", 0.0, 950.0),
            ("alt", 0, 12000),
            ("updated", BASE_TIME, BASE_TIME + 86_400),
        ])
        a = lo + (hi - lo) * rng.random()
        b = lo + (hi - lo) * rng.random()
        a, b = min(a, b), max(a, b)
        if field in ("alt", "updated"):
            a, b = int(a), int(b)
        bounds: dict[str, Any] = {}
        bounds["gte" if rng.random() < 0.5 else "gt"] = a
        if rng.random() < 0.8:
            bounds["lte" if rng.random() < 0.5 else "lt"] = b
        return Range("updated" if field == "updated" else field, **bounds)
    if kind == 6:
        lat1 = rng.uniform(24.0, 49.0)
        lat2 = rng.uniform(24.0, 49.0)
        lng1 = rng.uniform(-125.0, -66.0)
        lng2 = rng.uniform(-125.0, -66.0)
        return GeoBbox("position", tl_lat=max(lat1, lat2), tl_lng=min(lng1, lng2),
                       br_lat=min(lat1, lat2), br_lng=max(lng1, lng2))
    return Term("nosuchfield", "anything")


def random_query(rng: random.Random, depth: int = 2) -> Any:
    if depth <= 0 or rng.random() < 0.55:
        return _leaf(rng)
    return Bool(
        must=tuple(random_query(rng, depth - 1) for _ in range(rng.randrange(3))),
        should=tuple(random_query(rng, depth - 1) for _ in range(rng.randrange(3))),
        must_not=tuple(random_query(rng, depth - 1) for _ in range(rng.randrange(2))),
    )


def random_aggs(rng: random.Random) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if rng.random() < 0.8:
        out["by_key"] = TermsAgg(rng.choice(["airline", "status", "reg"]),
                                 size=rng.choice([3, 10, 100]))
    if rng.random() < 0.8:
        out["over_time"] = DateHistogramAgg("updated",
                                            rng.choice([60, 300, 3600, 21600]))
    if rng.random() < 0.8:
        out["speed_stats"] = StatsAgg(rng.choice(["speed", "alt"]))
    if rng.random() < 0.8:
        out["grid"] = GeohashGridAgg("position", precision=rng.choice([2, 3, 4]),
                                     size=rng.choice([10, 10_000]))
    return out
