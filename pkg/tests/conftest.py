from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES = TESTS_DIR / "fixtures"

# make `import oracles` work from any test module
sys.path.insert(0, str(TESTS_DIR))

from skystream.model import EventTime, FlightPosition  # noqa: E402


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def make_position(flight_icao: str = "UAL123", *, updated: int = 1_700_000_000,
                  lat: float = 40.0, lng: float = -74.0, alt: float = 10000.0,
                  speed: float = 820.0, direction: float = 270.0,
                  status: str = "en-route", airline: str = "UAL",
                  dep: str = "KJFK", arr: str = "KLAX",
                  reg_number: str | None = None,
                  flight_iata: str | None = None) -> FlightPosition:
    return FlightPosition(
        flight_icao=flight_icao,
        airline_icao=airline,
        dep_icao=dep,
        arr_icao=arr,
        lat=lat,
        lng=lng,
        alt=alt,
        dir=direction,
        speed=speed,
        status=status,
        updated=EventTime(updated),
        reg_number=reg_number,
        flight_iata=flight_iata,
    )
