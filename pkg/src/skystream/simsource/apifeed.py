"""Adapter for the external flight-position API wire format.

The feed is a JSON object {"response": [entry, ...]} where each entry carries
one aircraft state. Entries that fail validation are counted as dead letters
rather than failing the page; only a wrong top-level shape is fatal.
"""

from __future__ import annotations

import json
import urllib.request

from skystream.model import FlightPosition, ValidationError, validate_position


class MalformedEnvelope(Exception):
    """Top-level payload is not the documented {"response": [...]} object."""


def parse_api_response(payload: bytes) -> tuple[list[FlightPosition], int]:
    """Parse one API page; returns (validated positions, dead-letter count)."""
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedEnvelope(f"payload is not JSON: {e}") from e
    if not isinstance(doc, dict) or not isinstance(doc.get("response"), list):
        raise MalformedEnvelope('expected {"response": [...]}')
    positions: list[FlightPosition] = []
    dead = 0
    for entry in doc["response"]:
        if not isinstance(entry, dict):
            dead += 1
            continue
        try:
            positions.append(validate_position(entry))
        except ValidationError:
            dead += 1
    return positions, dead


def fetch_live(url: str, api_key: str, timeout: float = 10.0) -> tuple[list[FlightPosition], int]:
    """Fetch one live page with a bearer-style key header and parse it."""
    req = urllib.request.Request(url, headers={"Authorization": f"Bearer {api_key}"})
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        payload = resp.read()
    return parse_api_response(payload)
