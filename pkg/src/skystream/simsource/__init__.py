"""Flight position sources: deterministic synthetic traffic and the API adapter."""

from skystream.simsource.apifeed import MalformedEnvelope, fetch_live, parse_api_response
from skystream.simsource.fleet import (
    Airport,
    FlightPlan,
    InsufficientAirports,
    SimConfig,
    altitude_at,
    generate_fleet,
    is_airborne,
    load_airports,
    position_at,
    route_fraction_at,
    tick,
)
from skystream.simsource.geo import (
    EARTH_RADIUS_KM,
    DegenerateRoute,
    haversine_km,
    initial_bearing,
    intermediate_point,
)
from skystream.simsource.rng import Xoshiro256StarStar

__all__ = [
    "Airport",
    "DegenerateRoute",
    "EARTH_RADIUS_KM",
    "FlightPlan",
    "InsufficientAirports",
    "MalformedEnvelope",
    "SimConfig",
    "Xoshiro256StarStar",
    "altitude_at",
    "fetch_live",
    "generate_fleet",
    "haversine_km",
    "initial_bearing",
    "intermediate_point",
    "is_airborne",
    "load_airports",
    "parse_api_response",
    "position_at",
    "route_fraction_at",
    "tick",
]
