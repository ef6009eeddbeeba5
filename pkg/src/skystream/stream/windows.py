"""Event-time tumbling windows with a watermark.

Windows are half-open [start, start + width) and start on multiples of the
width, so every event time lands in exactly one window. The watermark
trails the largest event time seen by the allowed lateness and never moves
backwards.

Lateness is judged per batch: every event is tested against the watermark
as it stood when the batch arrived, and the batch advances it only after
ingest. The late set therefore cannot depend on how a batch was merged
from partition workers, and an in-order stream never loses events no
matter how it is batched. A window closes once the post-batch watermark
reaches its end.

Snapshot means are computed with math.fsum at close time, which rounds
once over the exact sum, so they are identical however the same events
were grouped into batches or interleaved across partition workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..index import geohash
from ..model import FlightPosition

GEO_CELL_PRECISION = 4


def assign_window(event_time: int, window_seconds: int) -> int:
    """Start of the window containing event_time."""
    if window_seconds < 1:
        raise ValueError("window_seconds must be >= 1")
    return (int(event_time) // window_seconds) * window_seconds


class WatermarkState:
    """Monotonic watermark: max observed event time minus allowed lateness."""

    def __init__(self, allowed_lateness_seconds: int):
        if allowed_lateness_seconds < 0:
            raise ValueError("allowed_lateness_seconds must be >= 0")
        self.allowed_lateness = allowed_lateness_seconds
        self.max_event_time: Optional[int] = None
        self.late_dropped = 0

    def observe(self, event_time: int) -> None:
        t = int(event_time)
        if self.max_event_time is None or t > self.max_event_time:
            self.max_event_time = t

    @property
    def watermark(self) -> Optional[int]:
        if self.max_event_time is None:
            return None
        return self.max_event_time - self.allowed_lateness

    def is_late(self, event_time: int) -> bool:
        wm = self.watermark
        return wm is not None and int(event_time) < wm


def advance_watermark(state: WatermarkState,
                      events: Iterable[FlightPosition]) -> WatermarkState:
    """Folds a whole batch into the state; returns it for chaining."""
    for event in events:
        state.observe(event.updated)
    return state


@dataclass(frozen=True, slots=True)
class WindowSnapshot:
    """Closed-window aggregate. flight_count counts observations, not
    aircraft; distinct_flights counts aircraft. Count maps are sorted
    tuples so snapshots compare by value."""

    window_start: int
    window_end: int
    flight_count: int
    distinct_flights: int
    avg_speed: Optional[float]
    max_alt: Optional[float]
    status_counts: tuple[tuple[str, int], ...]
    airline_counts: tuple[tuple[str, int], ...]
    geo_cell_counts: tuple[tuple[str, int], ...]


@dataclass
class _OpenWindow:
    start: int
    flights: set[str] = field(default_factory=set)
    speeds: list[float] = field(default_factory=list)
    max_alt: Optional[float] = None
    statuses: dict[str, int] = field(default_factory=dict)
    airlines: dict[str, int] = field(default_factory=dict)
    cells: dict[str, int] = field(default_factory=dict)

    def add(self, event: FlightPosition) -> None:
        self.flights.add(event.flight_icao)
        self.speeds.append(event.speed)
        if self.max_alt is None or event.alt > self.max_alt:
            self.max_alt = event.alt
        self.statuses[event.status] = self.statuses.get(event.status, 0) + 1
        self.airlines[event.airline_icao] = self.airlines.get(event.airline_icao, 0) + 1
        cell = geohash.encode(event.lat, event.lng, GEO_CELL_PRECISION)
        self.cells[cell] = self.cells.get(cell, 0) + 1

    def seal(self, window_seconds: int) -> WindowSnapshot:
        n = len(self.speeds)
        return WindowSnapshot(
            window_start=self.start,
            window_end=self.start + window_seconds,
            flight_count=n,
            distinct_flights=len(self.flights),
            avg_speed=math.fsum(self.speeds) / n if n else None,
            max_alt=self.max_alt,
            status_counts=tuple(sorted(self.statuses.items())),
            airline_counts=tuple(sorted(self.airlines.items())),
            geo_cell_counts=tuple(sorted(self.cells.items())),
        )


class TumblingWindower:
    """Buffers events into open windows and emits snapshots as they close."""

    def __init__(self, window_seconds: int, allowed_lateness_seconds: int):
        if window_seconds < 1:
            raise ValueError("window_seconds must be >= 1")
        self.window_seconds = window_seconds
        self.watermark_state = WatermarkState(allowed_lateness_seconds)
        self._open: dict[int, _OpenWindow] = {}

    @property
    def open_count(self) -> int:
        return len(self._open)

    @property
    def late_dropped(self) -> int:
        return self.watermark_state.late_dropped

    def ingest(self, events: Iterable[FlightPosition]) -> tuple[int, int]:
        """Feeds one batch; returns (accepted, dropped_late).

        The whole batch is judged against the watermark as it stood on
        arrival, and only then does the batch advance it. Freezing the
        watermark for the batch makes the late set independent of how the
        batch was assembled from partition workers, so snapshot contents
        never depend on worker interleaving.
        """
        state = self.watermark_state
        arrival_watermark = state.watermark
        accepted = 0
        dropped = 0
        for event in events:
            state.observe(event.updated)
            if arrival_watermark is not None and int(event.updated) < arrival_watermark:
                dropped += 1
                continue
            start = assign_window(event.updated, self.window_seconds)
            window = self._open.get(start)
            if window is None:
                window = self._open[start] = _OpenWindow(start)
            window.add(event)
            accepted += 1
        state.late_dropped += dropped
        return accepted, dropped

    def close_due(self) -> list[WindowSnapshot]:
        """Seals every open window whose end the watermark has reached."""
        wm = self.watermark_state.watermark
        if wm is None:
            return []
        due = sorted(
            start for start in self._open if start + self.window_seconds <= wm
        )
        return [self._open.pop(start).seal(self.window_seconds) for start in due]

    def flush_all(self) -> list[WindowSnapshot]:
        """Seals every open window regardless of the watermark (drain)."""
        due = sorted(self._open)
        return [self._open.pop(start).seal(self.window_seconds) for start in due]
