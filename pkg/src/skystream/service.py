"""HTTP query service over the document store and metrics.

Four routes, all JSON:

    GET  /api/flights/live?bbox=tl_lat,tl_lng,br_lat,br_lng&status=S&airline=A
    POST /api/search          {"index": ..., "query": ..., "aggs"?: ..., "size"?: N}
    GET  /api/metrics
    GET  /api/delays/summary?dataset=NAME

Errors come back as {"error": {"code": ..., "message": ...}} where code is
bad_request, not_found, mapping_conflict, or internal, with a matching
HTTP status. CORS headers are emitted by default so a browser app served
from elsewhere can call the API; pass cors=False to turn them off.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Mapping, Optional
from urllib.parse import parse_qs, urlparse

from .histbatch import DelaySummary
from .index import (
    DocumentStore,
    MalformedQuery,
    MappingConflict,
    UnknownIndex,
    aggs_from_json,
    fields_to_json,
    query_from_json,
    search_response,
)
from .metrics import Metrics
from .model import FLIGHT_STATUSES

MAX_BODY_BYTES = 16 * 1024 * 1024


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message

    @classmethod
    def bad_request(cls, message: str) -> "ApiError":
        return cls(400, "bad_request", message)

    @classmethod
    def not_found(cls, message: str) -> "ApiError":
        return cls(404, "not_found", message)

    @classmethod
    def mapping_conflict(cls, message: str) -> "ApiError":
        return cls(409, "mapping_conflict", message)

    @classmethod
    def internal(cls, message: str) -> "ApiError":
        return cls(500, "internal", message)


def _single(params: Mapping[str, list[str]], name: str) -> Optional[str]:
    values = params.get(name)
    if not values:
        return None
    if len(values) > 1:
        raise ApiError.bad_request(f"parameter {name!r} given more than once")
    return values[0]


def parse_bbox(raw: str) -> tuple[float, float, float, float]:
    parts = raw.split(",")
    if len(parts) != 4:
        raise ApiError.bad_request(
            "bbox must be tl_lat,tl_lng,br_lat,br_lng"
        )
    try:
        tl_lat, tl_lng, br_lat, br_lng = (float(p) for p in parts)
    except ValueError:
        raise ApiError.bad_request("bbox values must be numbers") from None
    if not (-90.0 <= br_lat <= tl_lat <= 90.0):
        raise ApiError.bad_request("bbox requires -90 <= br_lat <= tl_lat <= 90")
    if not (-180.0 <= tl_lng <= br_lng <= 180.0):
        raise ApiError.bad_request("bbox requires -180 <= tl_lng <= br_lng <= 180")
    return tl_lat, tl_lng, br_lat, br_lng


class QueryService:
    """Route handlers, independent of the HTTP plumbing."""

    def __init__(self, store: DocumentStore, metrics: Metrics,
                 summaries: Optional[Mapping[str, DelaySummary]] = None,
                 positions_index: str = "flights_live",
                 cors: bool = True):
        self.store = store
        self.metrics = metrics
        self.summaries = dict(summaries or {})
        self.positions_index = positions_index
        self.cors = cors

    # -- GET /api/flights/live ----------------------------------------------

    def live_flights(self, params: Mapping[str, list[str]]) -> dict[str, Any]:
        bbox_raw = _single(params, "bbox")
        bbox = parse_bbox(bbox_raw) if bbox_raw is not None else None
        status = _single(params, "status")
        if status is not None and status not in FLIGHT_STATUSES:
            raise ApiError.bad_request(
                f"unknown status {status!r}; expected one of {list(FLIGHT_STATUSES)}"
            )
        airline = _single(params, "airline")
        try:
            index = self.store.index(self.positions_index)
        except UnknownIndex:
            return {"as_of": int(time.time()), "count": 0, "flights": []}
        latest: dict[str, dict[str, Any]] = {}
        for fields in index.visible_docs().values():
            flight = fields.get("flight_icao")
            updated = fields.get("updated")
            if flight is None or updated is None:
                continue
            seen = latest.get(flight)
            if seen is None or int(updated) > int(seen["updated"]):
                latest[flight] = fields
        flights = []
        for flight in sorted(latest):
            fields = latest[flight]
            if status is not None and fields.get("status") != status:
                continue
            if airline is not None and (
                str(fields.get("airline_icao", "")).casefold()
                != airline.casefold()
            ):
                continue
            if bbox is not None:
                point = fields.get("position")
                if point is None:
                    continue
                tl_lat, tl_lng, br_lat, br_lng = bbox
                if not (br_lat <= point.lat <= tl_lat
                        and tl_lng <= point.lng <= br_lng):
                    continue
            flights.append(fields_to_json(fields))
        return {"as_of": int(time.time()), "count": len(flights),
                "flights": flights}

    # -- POST /api/search ------------------------------------------------------

    def search(self, body: Any) -> dict[str, Any]:
        if not isinstance(body, Mapping):
            raise ApiError.bad_request("request body must be a JSON object")
        extra = set(body) - {"index", "query", "aggs", "size"}
        if extra:
            raise ApiError.bad_request(f"unknown keys: {sorted(extra)}")
        index_name = body.get("index")
        if not isinstance(index_name, str) or not index_name:
            raise ApiError.bad_request("'index' must be a non-empty string")
        if "query" not in body:
            raise ApiError.bad_request("'query' is required")
        size = body.get("size", 10)
        if size is not None and (
            isinstance(size, bool) or not isinstance(size, int) or size < 0
        ):
            raise ApiError.bad_request("'size' must be a non-negative integer")
        try:
            index = self.store.index(index_name)
        except UnknownIndex:
            raise ApiError.not_found(f"no such index: {index_name}") from None
        try:
            query = query_from_json(body["query"])
            aggs = aggs_from_json(body["aggs"]) if "aggs" in body else None
            return search_response(index, query, aggs=aggs, size=size)
        except MalformedQuery as exc:
            raise ApiError.bad_request(str(exc)) from None
        except MappingConflict as exc:
            raise ApiError.mapping_conflict(str(exc)) from None

    # -- GET /api/metrics -------------------------------------------------------

    def metrics_snapshot(self) -> dict[str, Any]:
        return self.metrics.snapshot()

    # -- GET /api/delays/summary --------------------------------------------------

    def delays_summary(self, params: Mapping[str, list[str]]) -> dict[str, Any]:
        dataset = _single(params, "dataset")
        if dataset is None:
            if len(self.summaries) == 1:
                dataset = next(iter(self.summaries))
            else:
                raise ApiError.bad_request(
                    f"dataset parameter required; available: "
                    f"{sorted(self.summaries)}"
                )
        summary = self.summaries.get(dataset)
        if summary is None:
            raise ApiError.not_found(
                f"no such dataset: {dataset}; available: {sorted(self.summaries)}"
            )
        return summary.to_json_dict()


class _Handler(BaseHTTPRequestHandler):
    service: QueryService  # assigned on the subclass by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args) -> None:
        pass

    def _send(self, status: int, payload: dict[str, Any]) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        if self.service.cors:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _fail(self, err: ApiError) -> None:
        self._send(err.status, {"error": {"code": err.code,
                                          "message": err.message}})

    def _dispatch(self, fn) -> None:
        try:
            self._send(200, fn())
        except ApiError as exc:
            self._fail(exc)
        except BrokenPipeError:
            pass
        except Exception as exc:  # pragma: no cover - defensive
            self._fail(ApiError.internal(f"{type(exc).__name__}: {exc}"))

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        if self.service.cors:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:
        url = urlparse(self.path)
        params = parse_qs(url.query)
        if url.path == "/api/flights/live":
            self._dispatch(lambda: self.service.live_flights(params))
        elif url.path == "/api/metrics":
            self._dispatch(self.service.metrics_snapshot)
        elif url.path == "/api/delays/summary":
            self._dispatch(lambda: self.service.delays_summary(params))
        else:
            self._fail(ApiError.not_found(f"no route for GET {url.path}"))

    def do_POST(self) -> None:
        url = urlparse(self.path)
        if url.path != "/api/search":
            self._fail(ApiError.not_found(f"no route for POST {url.path}"))
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            self._fail(ApiError.bad_request("bad Content-Length"))
            return
        if length > MAX_BODY_BYTES:
            self._fail(ApiError.bad_request("request body too large"))
            return
        raw = self.rfile.read(length) if length else b""
        try:
            body = json.loads(raw) if raw else {}
        except json.JSONDecodeError as exc:
            self._fail(ApiError.bad_request(f"invalid JSON: {exc}"))
            return
        self._dispatch(lambda: self.service.search(body))


class ServerHandle:
    """A running HTTP server plus the thread driving it."""

    def __init__(self, server: ThreadingHTTPServer):
        self._server = server
        self._thread = threading.Thread(
            target=server.serve_forever, name="query-service", daemon=True
        )

    @property
    def host(self) -> str:
        return self._server.server_address[0]

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "ServerHandle":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def make_server(service: QueryService, host: str = "127.0.0.1",
                port: int = 8080) -> ServerHandle:
    """Binds (port 0 picks a free one) but does not start serving yet."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return ServerHandle(server)
