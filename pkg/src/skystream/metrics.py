"""Process-wide counters and gauges, exposed verbatim by /api/metrics."""

from __future__ import annotations

import threading

COUNTER_NAMES = (
    "records_produced",
    "records_consumed",
    "dead_letter",
    "late_dropped",
    "batches_processed",
)
GAUGE_NAMES = (
    "last_batch_latency_ms",
    "index_doc_count",
)


class Metrics:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counters: dict[str, int] = {name: 0 for name in COUNTER_NAMES}
        self._gauges: dict[str, float] = {name: 0 for name in GAUGE_NAMES}

    def inc(self, name: str, n: int = 1) -> None:
        with self._lock:
            self._counters[name] = self._counters.get(name, 0) + n

    def set_gauge(self, name: str, value: float) -> None:
        with self._lock:
            self._gauges[name] = value

    def get(self, name: str) -> float:
        with self._lock:
            if name in self._counters:
                return self._counters[name]
            return self._gauges.get(name, 0)

    def snapshot(self) -> dict[str, float]:
        with self._lock:
            out: dict[str, float] = dict(self._counters)
            out.update(self._gauges)
            return out
