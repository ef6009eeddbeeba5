"""Embedded partitioned commit log with segment files and consumer groups."""

from .broker import (
    Broker,
    Consumer,
    CorruptRecord,
    FlushPolicy,
    InvalidConfig,
    LogError,
    OffsetOutOfRange,
    Producer,
    RecordTooLarge,
    RegressingCommit,
    RetentionPolicy,
    TopicConfig,
    TopicExists,
    UnknownTopic,
    assign_partition,
    fnv1a64,
    segment_filename,
)
from .framing import CrcMismatch, FrameError, LogRecord, ShortFrame, decode_record, encode_record, scan_segment

__all__ = [
    "Broker",
    "Consumer",
    "CorruptRecord",
    "CrcMismatch",
    "FlushPolicy",
    "FrameError",
    "InvalidConfig",
    "LogError",
    "LogRecord",
    "OffsetOutOfRange",
    "Producer",
    "RecordTooLarge",
    "RegressingCommit",
    "RetentionPolicy",
    "ShortFrame",
    "TopicConfig",
    "TopicExists",
    "UnknownTopic",
    "assign_partition",
    "decode_record",
    "encode_record",
    "fnv1a64",
    "scan_segment",
    "segment_filename",
]
