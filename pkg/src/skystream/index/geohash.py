"""Geohash encoding over the standard base32 alphabet.

Bits interleave longitude first. Truncating a hash widens its cell, so a
shared prefix certifies containment, which is what the spatial prefilter
in the document store relies on.
"""

from __future__ import annotations

BASE32 = "0123456789bcdefghjkmnpqrstuvwxyz"
_DECODE = {c: i for i, c in enumerate(BASE32)}


def encode(lat: float, lng: float, precision: int = 12) -> str:
    if not 1 <= precision <= 22:
        raise ValueError("precision must be in [1, 22]")
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} out of range")
    if not -180.0 <= lng <= 180.0:
        raise ValueError(f"longitude {lng} out of range")
    lat_lo, lat_hi = -90.0, 90.0
    lng_lo, lng_hi = -180.0, 180.0
    chars: list[str] = []
    bit = 0
    ch = 0
    even = True  # longitude bit next
    while len(chars) < precision:
        if even:
            mid = (lng_lo + lng_hi) / 2
            if lng >= mid:
                ch = (ch << 1) | 1
                lng_lo = mid
            else:
                ch <<= 1
                lng_hi = mid
        else:
            mid = (lat_lo + lat_hi) / 2
            if lat >= mid:
                ch = (ch << 1) | 1
                lat_lo = mid
            else:
                ch <<= 1
                lat_hi = mid
        even = not even
        bit += 1
        if bit == 5:
            chars.append(BASE32[ch])
            bit = 0
            ch = 0
    return "".join(chars)


def decode_bounds(geohash: str) -> tuple[float, float, float, float]:
    """Cell bounds as (lat_min, lat_max, lng_min, lng_max)."""
    if not geohash:
        raise ValueError("empty geohash")
    lat_lo, lat_hi = -90.0, 90.0
    lng_lo, lng_hi = -180.0, 180.0
    even = True
    for c in geohash:
        try:
            value = _DECODE[c]
        except KeyError:
            raise ValueError(f"invalid geohash character {c!r}") from None
        for shift in range(4, -1, -1):
            bit = (value >> shift) & 1
            if even:
                mid = (lng_lo + lng_hi) / 2
                if bit:
                    lng_lo = mid
                else:
                    lng_hi = mid
            else:
                mid = (lat_lo + lat_hi) / 2
                if bit:
                    lat_lo = mid
                else:
                    lat_hi = mid
            even = not even
    return lat_lo, lat_hi, lng_lo, lng_hi


def decode(geohash: str) -> tuple[float, float]:
    """Cell center as (lat, lng)."""
    lat_lo, lat_hi, lng_lo, lng_hi = decode_bounds(geohash)
    return (lat_lo + lat_hi) / 2, (lng_lo + lng_hi) / 2
