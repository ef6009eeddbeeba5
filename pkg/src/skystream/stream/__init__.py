"""Micro-batch stream processing: watermarks, tumbling windows, pipeline."""

from .pipeline import (
    BatchStats,
    MicroBatch,
    Pipeline,
    SimulatedCrash,
    StreamConfig,
    decode_position,
    encode_position,
    position_doc,
    publish_positions,
    to_index_actions,
    window_doc,
)
from .windows import (
    TumblingWindower,
    WatermarkState,
    WindowSnapshot,
    advance_watermark,
    assign_window,
)

__all__ = [
    "BatchStats",
    "MicroBatch",
    "Pipeline",
    "SimulatedCrash",
    "StreamConfig",
    "TumblingWindower",
    "WatermarkState",
    "WindowSnapshot",
    "advance_watermark",
    "assign_window",
    "decode_position",
    "encode_position",
    "position_doc",
    "publish_positions",
    "to_index_actions",
    "window_doc",
]
