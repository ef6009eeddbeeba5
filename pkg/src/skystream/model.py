"""Shared domain types, validation, and time conventions.

Everything downstream (log, stream processor, index, HTTP service) exchanges
the value types defined here. They are immutable and safe to share across
threads. All timestamps are integer epoch seconds UTC; longitude is kept in
the canonical interval (-180, 180] with -180 mapped to +180 so equal points
compare equal and geohash identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional

FLIGHT_STATUSES = ("scheduled", "en-route", "landed")


class ValidationError(Exception):
    """Base for record-level validation failures (routed to dead-letter)."""


class MissingKeyField(ValidationError):
    """A required field is absent (flight_icao and the core numerics)."""


class OutOfRange(ValidationError):
    """A field value is outside its documented bounds or has a bad type."""


class EventTime(int):
    """Integer epoch seconds UTC. Non-negative; one representation everywhere."""

    def __new__(cls, seconds: int) -> "EventTime":
        value = super().__new__(cls, seconds)
        if value < 0:
            raise ValueError(f"event time must be non-negative, got {int(value)}")
        return value


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A latitude/longitude pair in degrees, canonical longitude form."""

    lat: float
    lng: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise OutOfRange(f"lat {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lng <= 180.0):
            raise OutOfRange(f"lng {self.lng} outside [-180, 180]")
        if self.lng == -180.0:
            object.__setattr__(self, "lng", 180.0)


@dataclass(frozen=True, slots=True)
class FlightPosition:
    """One timestamped aircraft state report.

    flight_icao is the document-identity key and is always present;
    reg_number and flight_iata may be absent (None, never empty string, so
    "unknown" stays distinguishable from "" in the index).
    """

    flight_icao: str
    airline_icao: str
    dep_icao: str
    arr_icao: str
    lat: float
    lng: float
    alt: float
    dir: float
    speed: float
    status: str
    updated: EventTime
    reg_number: Optional[str] = None
    flight_iata: Optional[str] = None

    def as_dict(self) -> dict[str, Any]:
        """Plain-dict form used for wire serialization; absent fields omitted."""
        d: dict[str, Any] = {
            "flight_icao": self.flight_icao,
            "airline_icao": self.airline_icao,
            "dep_icao": self.dep_icao,
            "arr_icao": self.arr_icao,
            "lat": self.lat,
            "lng": self.lng,
            "alt": self.alt,
            "dir": self.dir,
            "speed": self.speed,
            "status": self.status,
            "updated": int(self.updated),
        }
        if self.reg_number is not None:
            d["reg_number"] = self.reg_number
        if self.flight_iata is not None:
            d["flight_iata"] = self.flight_iata
        return d


_REQUIRED_STR = ("flight_icao", "airline_icao", "dep_icao", "arr_icao", "status")
_REQUIRED_NUM = ("lat", "lng", "alt", "dir", "speed")


def _require_number(raw: Mapping[str, Any], field: str) -> float:
    if field not in raw or raw[field] is None:
        raise MissingKeyField(f"missing {field}")
    value = raw[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise OutOfRange(f"{field} is not numeric: {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise OutOfRange(f"{field} is not finite")
    return value


def validate_position(raw: Mapping[str, Any] | FlightPosition) -> FlightPosition:
    """Normalize a raw field map into a FlightPosition or raise ValidationError.

    Total over inputs: every map yields exactly one of a valid position or a
    ValidationError subclass (MissingKeyField / OutOfRange). Heading is
    normalized modulo 360; longitude -180 becomes +180. Idempotent: feeding an
    already-valid FlightPosition back in returns an equal value.
    """
    if isinstance(raw, FlightPosition):
        raw = raw.as_dict()

    for field in _REQUIRED_STR:
        value = raw.get(field)
        if value is None or value == "":
            raise MissingKeyField(f"missing {field}")
        if not isinstance(value, str):
            raise OutOfRange(f"{field} is not a string: {value!r}")

    status = raw["status"]
    if status not in FLIGHT_STATUSES:
        raise OutOfRange(f"status {status!r} not one of {FLIGHT_STATUSES}")

    lat = _require_number(raw, "lat")
    lng = _require_number(raw, "lng")
    alt = _require_number(raw, "alt")
    direction = _require_number(raw, "dir")
    speed = _require_number(raw, "speed")

    if not (-90.0 <= lat <= 90.0):
        raise OutOfRange(f"lat {lat} outside [-90, 90]")
    if not (-180.0 <= lng <= 180.0):
        raise OutOfRange(f"lng {lng} outside [-180, 180]")
    if lng == -180.0:
        lng = 180.0
    if alt < 0.0:
        raise OutOfRange(f"alt {alt} negative")
    if speed < 0.0:
        raise OutOfRange(f"speed {speed} negative")
    direction = direction % 360.0
    if direction == 360.0:
        # % can round up to the modulus for tiny negative inputs
        direction = 0.0

    if "updated" not in raw or raw["updated"] is None:
        raise MissingKeyField("missing updated")
    updated_raw = raw["updated"]
    if isinstance(updated_raw, bool) or not isinstance(updated_raw, (int, float)):
        raise OutOfRange(f"updated is not numeric: {updated_raw!r}")
    if isinstance(updated_raw, float):
        if not updated_raw.is_integer():
            raise OutOfRange(f"updated {updated_raw} is not integral seconds")
        updated_raw = int(updated_raw)
    if updated_raw < 0:
        raise OutOfRange(f"updated {updated_raw} negative")

    def optional_str(field: str) -> Optional[str]:
        value = raw.get(field)
        if value is None or value == "":
            return None
        if not isinstance(value, str):
            raise OutOfRange(f"{field} is not a string: {value!r}")
        return value

    return FlightPosition(
        flight_icao=raw["flight_icao"],
        airline_icao=raw["airline_icao"],
        dep_icao=raw["dep_icao"],
        arr_icao=raw["arr_icao"],
        lat=lat,
        lng=lng,
        alt=alt,
        dir=direction,
        speed=speed,
        status=status,
        updated=EventTime(updated_raw),
        reg_number=optional_str("reg_number"),
        flight_iata=optional_str("flight_iata"),
    )
