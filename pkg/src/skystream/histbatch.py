"""Batch analytics over airline on-time performance CSV exports.

The input is the reporting-carrier on-time file: one row per scheduled
flight with departure delay, a cancellation flag, and five delay-cause
columns in minutes. Classification is three-way: a cancelled flight is
"cancelled" no matter what the delay columns say, a departure delay of
15 minutes or more is "delayed", everything else (including rows with no
recorded departure delay) is "on_time".

Percentages are taken over non-cancelled flights only. on_time_pct is
rounded to two decimals first and delayed_pct is defined as its exact
complement, so the pair always sums to 100.00.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date
from typing import Any, Iterable, Optional, TextIO, Union

DELAY_THRESHOLD_MINUTES = 15.0

REQUIRED_COLUMNS = (
    "FL_DATE",
    "OP_CARRIER",
    "OP_CARRIER_FL_NUM",
    "ORIGIN",
    "ORIGIN_STATE_ABR",
    "DEST",
    "DEP_DELAY",
    "CANCELLED",
    "CARRIER_DELAY",
    "WEATHER_DELAY",
    "NAS_DELAY",
    "SECURITY_DELAY",
    "LATE_AIRCRAFT_DELAY",
)

CAUSE_FIELDS = (
    ("carrier", "carrier_delay"),
    ("weather", "weather_delay"),
    ("nas", "nas_delay"),
    ("security", "security_delay"),
    ("late_aircraft", "late_aircraft_delay"),
)

WEEKDAY_NAMES = (
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday",
)


class HistBatchError(Exception):
    pass


class MissingColumns(HistBatchError):
    def __init__(self, columns: Iterable[str]):
        self.columns = tuple(columns)
        super().__init__(f"missing required columns: {', '.join(self.columns)}")


class MalformedRow(HistBatchError):
    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


@dataclass(frozen=True, slots=True)
class BtsRecord:
    """One flight row, normalized.

    A cancelled flight carries no departure delay and no cause minutes;
    cause minutes are kept only on delayed flights, matching how the
    source files populate them.
    """

    fl_date: str
    carrier: str
    flight_num: str
    origin: str
    origin_state: str
    dest: str
    dep_delay: Optional[float]
    cancelled: bool
    carrier_delay: float = 0.0
    weather_delay: float = 0.0
    nas_delay: float = 0.0
    security_delay: float = 0.0
    late_aircraft_delay: float = 0.0

    def __post_init__(self) -> None:
        if self.cancelled and self.dep_delay is not None:
            object.__setattr__(self, "dep_delay", None)
        keep_causes = (
            not self.cancelled
            and self.dep_delay is not None
            and self.dep_delay >= DELAY_THRESHOLD_MINUTES
        )
        if not keep_causes:
            for _, attr in CAUSE_FIELDS:
                if getattr(self, attr):
                    object.__setattr__(self, attr, 0.0)

    @property
    def total_cause_minutes(self) -> float:
        return (self.carrier_delay + self.weather_delay + self.nas_delay
                + self.security_delay + self.late_aircraft_delay)

    @property
    def weekday(self) -> str:
        return WEEKDAY_NAMES[date.fromisoformat(self.fl_date).weekday()]


def classify(record: BtsRecord) -> str:
    if record.cancelled:
        return "cancelled"
    if record.dep_delay is not None and record.dep_delay >= DELAY_THRESHOLD_MINUTES:
        return "delayed"
    return "on_time"


def _number(raw: Optional[str]) -> Optional[float]:
    if raw is None:
        return None
    text = raw.strip()
    if not text:
        return None
    return float(text)


def parse_bts_csv(source: Union[str, TextIO]) -> list[BtsRecord]:
    """Reads and normalizes every row; raises on structural problems."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as f:
            return parse_bts_csv(f)
    reader = csv.DictReader(source)
    header = reader.fieldnames or []
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise MissingColumns(missing)
    records: list[BtsRecord] = []
    for row in reader:
        line = reader.line_num
        if all(not (v or "").strip() for k, v in row.items() if k is not None):
            continue
        try:
            cancelled_raw = _number(row["CANCELLED"])
            if cancelled_raw is None:
                raise ValueError("CANCELLED is empty")
            records.append(BtsRecord(
                fl_date=row["FL_DATE"].strip(),
                carrier=row["OP_CARRIER"].strip(),
                flight_num=row["OP_CARRIER_FL_NUM"].strip(),
                origin=row["ORIGIN"].strip(),
                origin_state=row["ORIGIN_STATE_ABR"].strip(),
                dest=row["DEST"].strip(),
                dep_delay=_number(row["DEP_DELAY"]),
                cancelled=cancelled_raw != 0.0,
                carrier_delay=_number(row["CARRIER_DELAY"]) or 0.0,
                weather_delay=_number(row["WEATHER_DELAY"]) or 0.0,
                nas_delay=_number(row["NAS_DELAY"]) or 0.0,
                security_delay=_number(row["SECURITY_DELAY"]) or 0.0,
                late_aircraft_delay=_number(row["LATE_AIRCRAFT_DELAY"]) or 0.0,
            ))
        except (KeyError, ValueError) as exc:
            raise MalformedRow(line, str(exc)) from exc
    return records


@dataclass(frozen=True)
class DelaySummary:
    dataset: str
    total_flights: int
    cancelled: int
    on_time: int
    delayed: int
    on_time_pct: float
    delayed_pct: float
    cause_minutes: dict[str, float]
    external_cause_minutes: dict[str, float]
    by_weekday: dict[str, dict[str, Any]]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "total_flights": self.total_flights,
            "cancelled": self.cancelled,
            "on_time": self.on_time,
            "delayed": self.delayed,
            "on_time_pct": self.on_time_pct,
            "delayed_pct": self.delayed_pct,
            "cause_minutes": dict(self.cause_minutes),
            "external_cause_minutes": dict(self.external_cause_minutes),
            "by_weekday": {k: dict(v) for k, v in self.by_weekday.items()},
        }


def summarize(records: Iterable[BtsRecord], dataset: str) -> DelaySummary:
    total = cancelled = on_time = delayed = 0
    cause_minutes = {name: 0.0 for name, _ in CAUSE_FIELDS}
    weekday_counts = {
        name: {"on_time": 0, "delayed": 0} for name in WEEKDAY_NAMES
    }
    for record in records:
        total += 1
        bucket = classify(record)
        if bucket == "cancelled":
            cancelled += 1
            continue
        day = weekday_counts[record.weekday]
        if bucket == "delayed":
            delayed += 1
            day["delayed"] += 1
            for name, attr in CAUSE_FIELDS:
                cause_minutes[name] += getattr(record, attr)
        else:
            on_time += 1
            day["on_time"] += 1
    non_cancelled = on_time + delayed
    if non_cancelled:
        on_time_pct = round(100.0 * on_time / non_cancelled, 2)
        delayed_pct = round(100.0 - on_time_pct, 2)
    else:
        on_time_pct = delayed_pct = 0.0
    by_weekday: dict[str, dict[str, Any]] = {}
    for name in WEEKDAY_NAMES:
        counts = weekday_counts[name]
        day_total = counts["on_time"] + counts["delayed"]
        by_weekday[name] = {
            "on_time": counts["on_time"],
            "delayed": counts["delayed"],
            "delayed_pct": round(100.0 * counts["delayed"] / day_total, 2)
            if day_total else 0.0,
        }
    return DelaySummary(
        dataset=dataset,
        total_flights=total,
        cancelled=cancelled,
        on_time=on_time,
        delayed=delayed,
        on_time_pct=on_time_pct,
        delayed_pct=delayed_pct,
        cause_minutes=cause_minutes,
        external_cause_minutes={
            "weather": cause_minutes["weather"],
            "nas": cause_minutes["nas"],
            "security": cause_minutes["security"],
        },
        by_weekday=by_weekday,
    )


def rank_dimension(records: Iterable[BtsRecord], dimension: str,
                   top: Optional[int] = None) -> list[dict[str, Any]]:
    """Delayed-flight ranking along one dimension, over non-cancelled rows.

    Sorted by delayed count descending, then key ascending.
    """
    extractors = {
        "carrier": lambda r: r.carrier,
        "origin": lambda r: r.origin,
        "origin_state": lambda r: r.origin_state,
        "weekday": lambda r: r.weekday,
    }
    try:
        extract = extractors[dimension]
    except KeyError:
        raise ValueError(
            f"unknown dimension {dimension!r}; expected one of "
            f"{sorted(extractors)}"
        ) from None
    buckets: dict[str, dict[str, int]] = {}
    for record in records:
        if classify(record) == "cancelled":
            continue
        key = extract(record)
        bucket = buckets.setdefault(key, {"flights": 0, "delayed": 0})
        bucket["flights"] += 1
        if classify(record) == "delayed":
            bucket["delayed"] += 1
    rows = [
        {
            "key": key,
            "flights": bucket["flights"],
            "delayed": bucket["delayed"],
            "delayed_pct": round(100.0 * bucket["delayed"] / bucket["flights"], 2),
        }
        for key, bucket in buckets.items()
    ]
    rows.sort(key=lambda r: (-r["delayed"], r["key"]))
    return rows[:top] if top is not None else rows


def treemap_data(records: Iterable[BtsRecord]) -> dict[str, Any]:
    """Two-level hierarchy of delay-cause minutes: carrier, then flight.

    Leaf weight is the flight's summed cause minutes; zero-weight flights
    are omitted. Every node's value is computed from its children, so
    sums are exact at each level.
    """
    per_flight: dict[str, dict[str, float]] = {}
    for record in records:
        minutes = record.total_cause_minutes
        if minutes <= 0:
            continue
        flights = per_flight.setdefault(record.carrier, {})
        name = f"{record.carrier}{record.flight_num}"
        flights[name] = flights.get(name, 0.0) + minutes
    children = []
    for carrier in sorted(per_flight):
        leaves = [
            {"name": name, "value": per_flight[carrier][name]}
            for name in sorted(per_flight[carrier])
        ]
        children.append({
            "name": carrier,
            "value": sum(leaf["value"] for leaf in leaves),
            "children": leaves,
        })
    return {
        "name": "delay_minutes",
        "value": sum(child["value"] for child in children),
        "children": children,
    }


def export_summary(summary: DelaySummary, path: Optional[str] = None) -> str:
    """Canonical JSON: sorted keys, compact separators. Writes path if given."""
    text = json.dumps(summary.to_json_dict(), sort_keys=True,
                      separators=(",", ":"))
    if path is not None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
            f.write("\n")
    return text
