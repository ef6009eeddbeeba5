#!/usr/bin/env python3
"""Record dashboard test fixtures from a real query service.

Run from the frontend directory with the Python package installed:

    python3 tools/record_fixtures.py

Everything under tests/fixtures/ is rewritten. Two in-process servers are
stood up and queried over actual HTTP: one with a simulator-built corpus for
search and chart fixtures, one with a handcrafted flight sequence whose store
is mutated between polls so the live endpoint is captured mid-change.

The expected query for each randomized filter state is built here, by a
mapping written independently of the TypeScript one, and checked against the
service's own parser before being frozen. The dashboard has to reproduce
these bytes, not the other way around.
"""

from __future__ import annotations

import json
import random
import urllib.request
from pathlib import Path
from typing import Any, Optional

from skystream.histbatch import parse_bts_csv, summarize
from skystream.index import geohash
from skystream.index.query import query_from_json
from skystream.index.store import DocumentStore
from skystream.metrics import Metrics
from skystream.model import EventTime, FlightPosition
from skystream.service import QueryService, make_server
from skystream.simsource.fleet import SimConfig, generate_fleet, load_airports, tick
from skystream.stream.pipeline import position_doc

ROOT = Path(__file__).resolve().parents[2]
FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
BTS_CSV = ROOT / "tests" / "fixtures" / "bts_synthetic_10k.csv"

INDEX = "flights_live"
BASE = 1_699_999_980  # multiple of 60, mid-November 2023
SEED = 1207
AIRLINES = ["UAL", "AAL", "DAL", "SWA", "JBU", "ASA", "SKW", "FFT", "NKS", "AAY"]
STATUSES = ["scheduled", "en-route", "landed"]

VIEW = {"tl_lat": 48.0, "tl_lng": -125.0, "br_lat": 30.0, "br_lng": -95.0}
EMPTY_VIEW = {"tl_lat": 10.0, "tl_lng": -40.0, "br_lat": 0.0, "br_lng": -30.0}


# -- independent filter-to-query mapping ------------------------------------


def expected_query(state: dict[str, Any]) -> dict[str, Any]:
    must: list[dict[str, Any]] = []
    if "airline" in state:
        must.append({"term": {"field": "airline_icao", "value": state["airline"]}})
    if "status" in state:
        must.append({"term": {"field": "status", "value": state["status"]}})
    if "bbox" in state:
        b = state["bbox"]
        must.append({"geo_bbox": {
            "field": "position",
            "tl_lat": b["tl_lat"], "tl_lng": b["tl_lng"],
            "br_lat": b["br_lat"], "br_lng": b["br_lng"],
        }})
    if "time_range" in state:
        t = state["time_range"]
        must.append({"range": {"field": "updated",
                               "gte": t["from"], "lt": t["to"]}})
    if "selected_state" in state:
        lat_lo, lat_hi, lng_lo, lng_hi = geohash.decode_bounds(
            state["selected_state"])
        must.append({"geo_bbox": {
            "field": "position",
            "tl_lat": lat_hi, "tl_lng": lng_lo,
            "br_lat": lat_lo, "br_lng": lng_hi,
        }})
    if not must:
        return {"match_all": {}}
    return {"bool": {"must": must}}


def random_state(rng: random.Random) -> dict[str, Any]:
    state: dict[str, Any] = {}
    if rng.random() < 0.5:
        airline = rng.choice(AIRLINES)
        if rng.random() < 0.3:
            airline = airline.lower()
        state["airline"] = airline
    if rng.random() < 0.5:
        state["status"] = rng.choice(STATUSES)
    if rng.random() < 0.45:
        tl_lat = round(rng.uniform(30.0, 55.0), 2)
        br_lat = round(tl_lat - rng.uniform(3.0, 25.0), 2)
        tl_lng = round(rng.uniform(-130.0, -90.0), 2)
        br_lng = round(tl_lng + rng.uniform(5.0, 45.0), 2)
        state["bbox"] = {"tl_lat": tl_lat, "tl_lng": tl_lng,
                         "br_lat": br_lat, "br_lng": br_lng}
    if rng.random() < 0.45:
        start = BASE + rng.randrange(0, 1800)
        state["time_range"] = {"from": start,
                               "to": start + rng.randrange(60, 900)}
    if rng.random() < 0.35:
        lat = rng.uniform(25.0, 50.0)
        lng = rng.uniform(-125.0, -70.0)
        precision = rng.choice([3, 4, 4, 5])
        state["selected_state"] = geohash.encode(lat, lng, precision)
    return state


def make_states(count: int) -> list[dict[str, Any]]:
    rng = random.Random(SEED)
    states: list[dict[str, Any]] = [
        {},
        {"airline": "UAL", "status": "en-route"},
    ]
    while len(states) < count:
        states.append(random_state(rng))
    return states


# -- http helpers -------------------------------------------------------------


def get_json(base: str, path: str) -> dict[str, Any]:
    with urllib.request.urlopen(base + path) as resp:
        return json.loads(resp.read().decode("utf-8"))


def post_json(base: str, path: str, body: dict[str, Any]) -> dict[str, Any]:
    req = urllib.request.Request(
        base + path,
        data=json.dumps(body).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode("utf-8"))


def bbox_param(view: dict[str, float]) -> str:
    return (f"{view['tl_lat']},{view['tl_lng']},"
            f"{view['br_lat']},{view['br_lng']}")


def panels_body(query: dict[str, Any]) -> dict[str, Any]:
    return {
        "index": INDEX,
        "query": query,
        "size": 0,
        "aggs": {
            "per_minute": {"date_histogram": {"field": "updated",
                                              "interval_seconds": 60}},
            "by_airline": {"terms": {"field": "airline_icao", "size": 10}},
            "cells": {"geohash_grid": {"field": "position", "precision": 4}},
        },
    }


def list_body(query: dict[str, Any]) -> dict[str, Any]:
    return {"index": INDEX, "query": query, "size": None}


# -- corpus A: simulator positions for search fixtures -----------------------


def build_search_store() -> tuple[DocumentStore, Metrics, int]:
    cfg = SimConfig(seed=11, flight_count=40, tick_seconds=60,
                    start_time=EventTime(BASE))
    fleet = generate_fleet(cfg, load_airports())
    store = DocumentStore()
    index = store.ensure_index(INDEX)
    applied = 0
    ticks = 0
    for t in range(BASE, BASE + 1800, 60):
        ticks += 1
        for position in tick(fleet, t):
            doc_id, fields = position_doc(position)
            index.upsert(doc_id, fields)
            applied += 1
    # the simulator reports airborne traffic only; ground states come by hand
    ground = [
        live_position("DAL510", "DAL", 33.64, -84.43, BASE + 900,
                      status="landed", alt=0.0, speed=0.0),
        live_position("UAL881", "UAL", 37.62, -122.38, BASE + 1200,
                      status="landed", alt=0.0, speed=0.0),
        live_position("SWA144", "SWA", 36.08, -115.15, BASE + 300,
                      status="scheduled", alt=0.0, speed=0.0),
        live_position("JBU615", "JBU", 40.64, -73.78, BASE + 600,
                      status="scheduled", alt=0.0, speed=0.0),
    ]
    for position in ground:
        doc_id, fields = position_doc(position)
        index.upsert(doc_id, fields)
        applied += 1
    index.refresh()
    metrics = Metrics()
    metrics.inc("records_produced", applied)
    metrics.inc("records_consumed", applied)
    metrics.inc("batches_processed", ticks)
    metrics.set_gauge("last_batch_latency_ms", 37.5)
    metrics.set_gauge("index_doc_count", index.doc_count)
    return store, metrics, applied


def record_search_fixtures() -> None:
    store, metrics, applied = build_search_store()
    records = parse_bts_csv(str(BTS_CSV))
    summaries = {"bts_sample": summarize(records, dataset="bts_sample")}
    service = QueryService(store=store, metrics=metrics, summaries=summaries)
    handle = make_server(service, port=0)
    handle.start()
    base = f"http://{handle.host}:{handle.port}"
    try:
        states = make_states(50)
        cases = []
        for state in states:
            query = expected_query(state)
            query_from_json(query)  # must be accepted by the service parser
            cases.append({"state": state, "query": query})
        write_fixture("filter_queries.json", {"seed": SEED, "cases": cases})

        snapshot_request = list_body({"match_all": {}})
        snapshot = {
            "request": snapshot_request,
            "response": post_json(base, "/api/search", snapshot_request),
        }
        assert snapshot["response"]["total"] == applied

        # Conjunctions over a small corpus mostly match nothing, so weight
        # the replayed subset toward states that actually select documents.
        singles = [c for c in cases[2:] if len(c["state"]) == 1][:6]
        multis = [c for c in cases[2:] if len(c["state"]) >= 2][:4]
        cross_checks = []
        for case in cases[:2] + singles + multis:
            request = list_body(case["query"])
            cross_checks.append({
                "state": case["state"],
                "request": request,
                "response": post_json(base, "/api/search", request),
            })

        initial_request = panels_body({"match_all": {}})
        initial = {
            "state": {},
            "request": initial_request,
            "response": post_json(base, "/api/search", initial_request),
        }
        aggs = initial["response"]["aggregations"]
        top_airline = aggs["by_airline"]["buckets"][0]["key"]
        top_cell = aggs["cells"]["buckets"][0]["key"]

        drill_airline_state = {"airline": top_airline}
        drill_airline_request = panels_body(expected_query(drill_airline_state))
        drill_cell_state = {"selected_state": top_cell}
        drill_cell_request = panels_body(expected_query(drill_cell_state))
        panels = {
            "initial": initial,
            "drill_airline": {
                "state": drill_airline_state,
                "request": drill_airline_request,
                "response": post_json(base, "/api/search", drill_airline_request),
            },
            "drill_cell": {
                "state": drill_cell_state,
                "request": drill_cell_request,
                "response": post_json(base, "/api/search", drill_cell_request),
            },
        }
        write_fixture("search_fixtures.json", {
            "index": INDEX,
            "snapshot": snapshot,
            "cross_checks": cross_checks,
            "panels": panels,
        })

        write_fixture("delays.json", {
            "response": get_json(base, "/api/delays/summary"),
        })
        write_fixture("metrics.json", {
            "response": get_json(base, "/api/metrics"),
        })
        print(f"search corpus: {applied} docs, "
              f"{len(cross_checks)} cross-checks, "
              f"top airline {top_airline!r}, top cell {top_cell!r}")
    finally:
        handle.stop()


# -- corpus B: handcrafted live sequence --------------------------------------


def live_position(flight: str, airline: str, lat: float, lng: float,
                  updated: int, status: str = "en-route",
                  alt: float = 10500.0, speed: float = 780.0) -> FlightPosition:
    return FlightPosition(
        flight_icao=flight, airline_icao=airline,
        dep_icao="KSFO", arr_icao="KJFK",
        lat=lat, lng=lng, alt=alt, dir=95.0, speed=speed,
        status=status, updated=EventTime(updated),
    )


def record_live_fixtures() -> None:
    store = DocumentStore()
    index = store.ensure_index(INDEX)
    service = QueryService(store=store, metrics=Metrics())
    handle = make_server(service, port=0)
    handle.start()
    base = f"http://{handle.host}:{handle.port}"

    def apply(*positions: FlightPosition) -> None:
        for position in positions:
            doc_id, fields = position_doc(position)
            index.upsert(doc_id, fields)
        index.refresh()

    def poll(view: dict[str, float]) -> dict[str, Any]:
        return get_json(base, f"/api/flights/live?bbox={bbox_param(view)}")

    try:
        empty = {"params": {"bbox": list(EMPTY_VIEW.values())},
                 "response": poll(EMPTY_VIEW)}

        apply(
            live_position("UAL100", "UAL", 40.0, -110.0, BASE),
            live_position("DAL200", "DAL", 42.0, -100.0, BASE),
            live_position("SWA300", "SWA", 35.0, -120.0, BASE),
        )
        cycles = [{"params": {"bbox": list(VIEW.values())},
                   "response": poll(VIEW)}]

        # one moves, one leaves the viewport, one new flight appears
        apply(
            live_position("UAL100", "UAL", 41.0, -108.0, BASE + 60),
            live_position("DAL200", "DAL", 52.0, -100.0, BASE + 60),
            live_position("JBU400", "JBU", 38.0, -105.0, BASE + 60),
        )
        cycles.append({"params": {"bbox": list(VIEW.values())},
                       "response": poll(VIEW)})

        apply(
            live_position("UAL100", "UAL", 41.5, -107.0, BASE + 120),
            live_position("JBU400", "JBU", 38.5, -104.0, BASE + 120),
            live_position("SWA300", "SWA", 34.9, -119.8, BASE + 120,
                          status="landed", alt=0.0, speed=0.0),
        )
        cycles.append({"params": {"bbox": list(VIEW.values())},
                       "response": poll(VIEW)})

        write_fixture("live_fixtures.json", {
            "view": VIEW,
            "empty_view": EMPTY_VIEW,
            "empty": empty,
            "cycles": cycles,
        })
        counts = [c["response"]["count"] for c in cycles]
        print(f"live sequence: counts per cycle {counts}")
    finally:
        handle.stop()


def write_fixture(name: str, payload: dict[str, Any]) -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    path = FIXTURES / name
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(f"wrote {path.relative_to(ROOT)}")


if __name__ == "__main__":
    record_search_fixtures()
    record_live_fixtures()
