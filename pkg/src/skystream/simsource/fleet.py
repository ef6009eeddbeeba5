"""Deterministic synthetic flight traffic.

A fleet of flight plans is generated from a seed; positions at any instant
follow great-circle kinematics with a trapezoidal altitude profile. The whole
stream is a pure function of (SimConfig, t): same seed, same bytes, every run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from skystream.model import EventTime, FlightPosition, GeoPoint, validate_position
from skystream.simsource.geo import (
    DegenerateRoute,
    haversine_km,
    initial_bearing,
    intermediate_point,
)
from skystream.simsource.rng import Xoshiro256StarStar


class InsufficientAirports(Exception):
    """Fleet generation needs at least two distinct airports."""


@dataclass(frozen=True, slots=True)
class Airport:
    icao: str
    location: GeoPoint
    state: str


@dataclass(frozen=True, slots=True)
class FlightPlan:
    flight_icao: str
    airline_icao: str
    dep: Airport
    arr: Airport
    depart_time: EventTime
    cruise_speed: float  # km/h
    cruise_alt: float  # meters
    climb_fraction: float
    descent_fraction: float
    reg_number: Optional[str] = None
    flight_iata: Optional[str] = None

    def __post_init__(self) -> None:
        if self.dep.icao == self.arr.icao:
            raise ValueError("departure and arrival airports must differ")
        if self.cruise_speed <= 0 or self.cruise_alt <= 0:
            raise ValueError("cruise speed and altitude must be positive")
        if not (0 < self.climb_fraction < 0.5) or not (0 < self.descent_fraction < 0.5):
            raise ValueError("climb/descent fractions must be in (0, 0.5)")


@dataclass(frozen=True, slots=True)
class SimConfig:
    seed: int
    flight_count: int
    tick_seconds: int
    start_time: EventTime

    def __post_init__(self) -> None:
        if self.flight_count <= 0:
            raise ValueError("flight_count must be positive")
        if self.tick_seconds <= 0:
            raise ValueError("tick_seconds must be positive")


def load_airports(path: Optional[Path] = None) -> list[Airport]:
    """Load the airport table (header icao,lat,lng,state); bundled table by default."""
    if path is None:
        text = resources.files("skystream").joinpath("data/airports.csv").read_text("utf-8")
        lines = text.splitlines()
    else:
        lines = Path(path).read_text("utf-8").splitlines()
    rows = list(csv.DictReader(lines))
    airports = []
    seen = set()
    for row in rows:
        icao = row["icao"].strip()
        if icao in seen:
            raise ValueError(f"duplicate airport {icao}")
        seen.add(icao)
        airports.append(
            Airport(
                icao=icao,
                location=GeoPoint(float(row["lat"]), float(row["lng"])),
                state=row["state"].strip(),
            )
        )
    return airports


_AIRLINES = (
    ("UAL", "UA"),
    ("AAL", "AA"),
    ("DAL", "DL"),
    ("SWA", "WN"),
    ("JBU", "B6"),
    ("ASA", "AS"),
    ("SKW", "OO"),
    ("FFT", "F9"),
    ("NKS", "NK"),
    ("AAY", "G4"),
)

_REG_LETTERS = "ABCDEFGHJKLMNPQRSTUVWXYZ"


def altitude_at(plan: FlightPlan, route_fraction: float) -> float:
    """Trapezoidal profile: linear climb, level cruise, linear descent."""
    f = route_fraction
    if f <= 0.0 or f >= 1.0:
        return 0.0
    if f < plan.climb_fraction:
        return plan.cruise_alt * (f / plan.climb_fraction)
    if f > 1.0 - plan.descent_fraction:
        return plan.cruise_alt * ((1.0 - f) / plan.descent_fraction)
    return plan.cruise_alt


def route_fraction_at(plan: FlightPlan, t: EventTime | int) -> float:
    """Fraction of the route covered at t, clamped to [0, 1]."""
    elapsed = int(t) - int(plan.depart_time)
    if elapsed <= 0:
        return 0.0
    route_km = haversine_km(plan.dep.location, plan.arr.location)
    covered = plan.cruise_speed * (elapsed / 3600.0)
    return min(1.0, covered / route_km)


def position_at(plan: FlightPlan, t: EventTime | int) -> FlightPosition:
    """State report for the plan at t: scheduled before departure, en-route
    while the route fraction is strictly inside (0, 1), landed once clamped."""
    t_int = int(t)
    if t_int < int(plan.depart_time):
        status = "scheduled"
        point = plan.dep.location
        alt = 0.0
        speed = 0.0
        direction = initial_bearing(plan.dep.location, plan.arr.location)
    else:
        fraction = route_fraction_at(plan, t_int)
        if fraction >= 1.0:
            status = "landed"
            point = plan.arr.location
            alt = 0.0
            speed = 0.0
            # arrival course: the heading the aircraft was on reaching arr
            direction = (initial_bearing(plan.arr.location, plan.dep.location) + 180.0) % 360.0
        else:
            status = "en-route"
            point = intermediate_point(plan.dep.location, plan.arr.location, fraction)
            alt = altitude_at(plan, fraction)
            speed = plan.cruise_speed
            try:
                direction = initial_bearing(point, plan.arr.location)
            except DegenerateRoute:
                direction = (initial_bearing(plan.arr.location, plan.dep.location) + 180.0) % 360.0
    return FlightPosition(
        flight_icao=plan.flight_icao,
        airline_icao=plan.airline_icao,
        dep_icao=plan.dep.icao,
        arr_icao=plan.arr.icao,
        lat=point.lat,
        lng=point.lng,
        alt=alt,
        dir=direction,
        speed=speed,
        status=status,
        updated=EventTime(t_int),
        reg_number=plan.reg_number,
        flight_iata=plan.flight_iata,
    )


def is_airborne(plan: FlightPlan, t: EventTime | int) -> bool:
    if int(t) < int(plan.depart_time):
        return False
    return 0.0 < route_fraction_at(plan, t) < 1.0


def generate_fleet(
    cfg: SimConfig,
    airports: Iterable[Airport],
    departure_window_seconds: int = 3600,
) -> list[FlightPlan]:
    """Deterministic fleet of cfg.flight_count plans drawn from the airport table.

    Departures are spread uniformly over departure_window_seconds after
    cfg.start_time. Flight codes are unique by construction; dep != arr is
    enforced by redraw. Antipodal pairs are rejected the same way (none exist
    in the bundled table, but the table is caller-replaceable).
    """
    table = list(airports)
    if len(table) < 2:
        raise InsufficientAirports("need at least 2 airports")
    rng = Xoshiro256StarStar(cfg.seed)
    plans: list[FlightPlan] = []
    for i in range(cfg.flight_count):
        dep = rng.choice(table)
        while True:
            arr = rng.choice(table)
            if arr.icao == dep.icao:
                continue
            d = haversine_km(dep.location, arr.location)
            if abs(d - 20015.086796020572) < 1.0:  # antipodal: no unique path
                continue
            break
        airline_icao, airline_iata = _AIRLINES[rng.below(len(_AIRLINES))]
        number = 100 + i
        reg = None
        if rng.below(8) != 0:  # one in eight tails unknown
            reg = "N" + str(100 + rng.below(900)) + "".join(
                _REG_LETTERS[rng.below(len(_REG_LETTERS))] for _ in range(2)
            )
        iata = None
        if rng.below(7) != 0:
            iata = f"{airline_iata}{number}"
        plans.append(
            FlightPlan(
                flight_icao=f"{airline_icao}{number}",
                airline_icao=airline_icao,
                dep=dep,
                arr=arr,
                depart_time=EventTime(int(cfg.start_time) + rng.below(departure_window_seconds)),
                cruise_speed=750.0 + rng.below(201),
                cruise_alt=9000.0 + rng.below(3001),
                climb_fraction=0.08 + rng.below(13) / 100.0,
                descent_fraction=0.08 + rng.below(13) / 100.0,
                reg_number=reg,
                flight_iata=iata,
            )
        )
    return plans


def tick(fleet: Iterable[FlightPlan], t: EventTime | int) -> list[FlightPosition]:
    """One validated position per flight airborne at t."""
    out = []
    for plan in fleet:
        if is_airborne(plan, t):
            out.append(validate_position(position_at(plan, t)))
    return out
