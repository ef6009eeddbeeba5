"""Regenerates the synthetic on-time-performance fixture.

Run from the repository root:

    python3 tests/fixtures/make_bts_fixture.py

Writes bts_synthetic_10k.csv (10,000 data rows, December 2023 dates) and
bts_synthetic_summary.json (the tabulation oracle's summary of it). All
minute values are integral so float accumulation order cannot matter.
The generator is deterministic; the files are committed so tests never
depend on running it.
"""

from __future__ import annotations

import csv
import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from oracles import bts_tabulation_oracle  # noqa: E402

HERE = Path(__file__).resolve().parent

CARRIERS = {
    # share of rows, probability a non-cancelled flight is delayed
    "WN": (0.22, 0.26),
    "AA": (0.15, 0.20),
    "DL": (0.15, 0.13),
    "UA": (0.12, 0.17),
    "OO": (0.09, 0.18),
    "B6": (0.07, 0.24),
    "AS": (0.06, 0.11),
    "NK": (0.06, 0.21),
    "F9": (0.04, 0.22),
    "9E": (0.04, 0.15),
}

AIRPORTS = [
    ("ATL", "GA"), ("DFW", "TX"), ("DEN", "CO"), ("ORD", "IL"),
    ("LAX", "CA"), ("JFK", "NY"), ("LAS", "NV"), ("MCO", "FL"),
    ("MIA", "FL"), ("CLT", "NC"), ("SEA", "WA"), ("PHX", "AZ"),
    ("EWR", "NJ"), ("SFO", "CA"), ("IAH", "TX"), ("BOS", "MA"),
    ("FLL", "FL"), ("MSP", "MN"), ("LGA", "NY"), ("DTW", "MI"),
    ("SLC", "UT"), ("PHL", "PA"), ("BWI", "MD"), ("SAN", "CA"),
    ("TPA", "FL"), ("AUS", "TX"), ("BNA", "TN"), ("MDW", "IL"),
]

HEADER = [
    "FL_DATE", "OP_CARRIER", "OP_CARRIER_FL_NUM", "ORIGIN",
    "ORIGIN_STATE_ABR", "DEST", "DEP_DELAY", "CANCELLED",
    "CARRIER_DELAY", "WEATHER_DELAY", "NAS_DELAY", "SECURITY_DELAY",
    "LATE_AIRCRAFT_DELAY",
]


def _pick_carrier(rng: random.Random) -> str:
    roll = rng.random()
    acc = 0.0
    for code, (share, _) in CARRIERS.items():
        acc += share
        if roll < acc:
            return code
    return "9E"


def make_rows(count: int, seed: int) -> list[dict[str, str]]:
    rng = random.Random(seed)
    rows = []
    for i in range(count):
        carrier = _pick_carrier(rng)
        day = rng.randint(1, 31)
        origin, origin_state = rng.choice(AIRPORTS)
        dest = rng.choice([a for a in AIRPORTS if a[0] != origin])[0]
        row = {
            "FL_DATE": f"2023-12-{day:02d}",
            "OP_CARRIER": carrier,
            "OP_CARRIER_FL_NUM": str(rng.randint(1, 7999)),
            "ORIGIN": origin,
            "ORIGIN_STATE_ABR": origin_state,
            "DEST": dest,
            "CARRIER_DELAY": "",
            "WEATHER_DELAY": "",
            "NAS_DELAY": "",
            "SECURITY_DELAY": "",
            "LATE_AIRCRAFT_DELAY": "",
        }
        if rng.random() < 0.02:
            row["CANCELLED"] = "1.00"
            # the raw files sometimes carry junk on cancelled rows; the
            # parser must ignore it
            if rng.random() < 0.3:
                row["DEP_DELAY"] = str(rng.randint(20, 90)) + ".00"
                row["CARRIER_DELAY"] = str(rng.randint(1, 60)) + ".00"
            else:
                row["DEP_DELAY"] = ""
            rows.append(row)
            continue
        row["CANCELLED"] = "0.00"
        delay_p = CARRIERS[carrier][1]
        if i % 997 == 0:
            # pin threshold boundaries
            delay = 15 if i % 2 == 0 else 14
        elif rng.random() < delay_p:
            delay = rng.randint(15, 240)
        else:
            delay = rng.randint(-12, 14)
        if rng.random() < 0.01:
            row["DEP_DELAY"] = ""
            delay = 0
        else:
            row["DEP_DELAY"] = f"{delay}.00"
        if delay >= 15:
            remaining = delay
            for column in ("LATE_AIRCRAFT_DELAY", "CARRIER_DELAY",
                           "NAS_DELAY", "WEATHER_DELAY", "SECURITY_DELAY"):
                if remaining <= 0:
                    if rng.random() < 0.5:
                        row[column] = "0.00"
                    continue
                part = rng.randint(0, remaining)
                if column == "SECURITY_DELAY":
                    part = part if rng.random() < 0.02 else 0
                row[column] = f"{part}.00"
                remaining -= part
        rows.append(row)
    return rows


def main() -> None:
    rows = make_rows(10_000, seed=20231201)
    csv_path = HERE / "bts_synthetic_10k.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=HEADER)
        writer.writeheader()
        for i, row in enumerate(rows):
            writer.writerow(row)
            if i == 5000:
                f.write("\n")  # parser must skip a stray blank line
    with open(csv_path, "r", encoding="utf-8", newline="") as f:
        summary = bts_tabulation_oracle(csv.DictReader(f), "bts_synthetic_10k")
    golden_path = HERE / "bts_synthetic_summary.json"
    with open(golden_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
    print(f"wrote {csv_path.name} ({len(rows)} rows) and {golden_path.name}")


if __name__ == "__main__":
    main()
