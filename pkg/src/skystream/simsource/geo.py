"""Great-circle math on a spherical Earth, radius 6371.0 km.

Standard haversine distance, forward azimuth, and spherical interpolation.
Antipodal endpoints have no unique great circle, so interpolation and bearing
reject them instead of returning an arbitrary path.
"""

from __future__ import annotations

import math

from skystream.model import GeoPoint

EARTH_RADIUS_KM = 6371.0

# Angular separations below this (radians) count as coincident; within this
# of pi count as antipodal.
_DEGENERATE_RAD = 1e-12


class DegenerateRoute(Exception):
    """Endpoints are identical or antipodal: no unique great circle."""


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km; symmetric and total."""
    la1 = math.radians(a.lat)
    la2 = math.radians(b.lat)
    dlat = math.radians(b.lat - a.lat)
    dlng = math.radians(b.lng - a.lng)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(la1) * math.cos(la2) * math.sin(dlng / 2.0) ** 2
    return EARTH_RADIUS_KM * 2.0 * math.asin(min(1.0, math.sqrt(h)))


def _angular_distance(a: GeoPoint, b: GeoPoint) -> float:
    return haversine_km(a, b) / EARTH_RADIUS_KM


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth from a toward b, degrees in [0, 360)."""
    d = _angular_distance(a, b)
    if d < _DEGENERATE_RAD or abs(math.pi - d) < _DEGENERATE_RAD:
        raise DegenerateRoute(f"no unique bearing between {a} and {b}")
    la1 = math.radians(a.lat)
    la2 = math.radians(b.lat)
    dlng = math.radians(b.lng - a.lng)
    x = math.sin(dlng) * math.cos(la2)
    y = math.cos(la1) * math.sin(la2) - math.sin(la1) * math.cos(la2) * math.cos(dlng)
    return (math.degrees(math.atan2(x, y)) + 360.0) % 360.0


def intermediate_point(a: GeoPoint, b: GeoPoint, f: float) -> GeoPoint:
    """Point the fraction f of the way from a to b along the great circle.

    f=0 and f=1 return the endpoints exactly (no float drift at the ends).
    """
    if not (0.0 <= f <= 1.0):
        raise ValueError(f"fraction {f} outside [0, 1]")
    d = _angular_distance(a, b)
    if abs(math.pi - d) < _DEGENERATE_RAD:
        raise DegenerateRoute(f"antipodal endpoints {a} and {b}")
    if f == 0.0 or d < _DEGENERATE_RAD:
        return a
    if f == 1.0:
        return b
    la1 = math.radians(a.lat)
    lo1 = math.radians(a.lng)
    la2 = math.radians(b.lat)
    lo2 = math.radians(b.lng)
    sin_d = math.sin(d)
    wa = math.sin((1.0 - f) * d) / sin_d
    wb = math.sin(f * d) / sin_d
    x = wa * math.cos(la1) * math.cos(lo1) + wb * math.cos(la2) * math.cos(lo2)
    y = wa * math.cos(la1) * math.sin(lo1) + wb * math.cos(la2) * math.sin(lo2)
    z = wa * math.sin(la1) + wb * math.sin(la2)
    lat = math.degrees(math.atan2(z, math.sqrt(x * x + y * y)))
    lng = math.degrees(math.atan2(y, x))
    return GeoPoint(lat, lng)
