"""Bit-exact record framing for log segment files.

Frame layout, all integers big-endian:

    length   u32   count of bytes after this field
    offset   u64
    timestamp u64  epoch seconds
    key_len  u32   0xFFFFFFFF marks an absent key (distinct from empty)
    key      key_len bytes (omitted when absent)
    value_len u32
    value    value_len bytes
    crc      u32   CRC-32 (IEEE) over every preceding frame byte

Explicit framing makes torn-write recovery a byte-level scan: a frame is
complete iff its declared length fits and the trailing CRC matches.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import Optional

_NO_KEY = 0xFFFFFFFF
_HEADER = struct.Struct(">IQQ")  # length, offset, timestamp
_U32 = struct.Struct(">I")


@dataclass(frozen=True, slots=True)
class LogRecord:
    offset: int
    timestamp: int
    key: Optional[bytes]
    value: bytes
    crc: int


def encode_record(offset: int, timestamp: int, key: Optional[bytes], value: bytes) -> bytes:
    key_len = _NO_KEY if key is None else len(key)
    key_bytes = b"" if key is None else key
    body_len = 8 + 8 + 4 + len(key_bytes) + 4 + len(value) + 4
    head = _HEADER.pack(body_len, offset, timestamp)
    payload = b"".join(
        (head, _U32.pack(key_len), key_bytes, _U32.pack(len(value)), value)
    )
    return payload + _U32.pack(zlib.crc32(payload))


class FrameError(Exception):
    """Structural damage: a frame that cannot be parsed at all."""


class ShortFrame(FrameError):
    """The buffer ends before the declared frame does (torn write)."""


class CrcMismatch(FrameError):
    """Frame parsed but the stored CRC does not match the bytes."""


def decode_record(buf: bytes | memoryview, pos: int, verify_crc: bool = True) -> tuple[LogRecord, int]:
    """Decode one frame at pos; returns (record, position after frame).

    Raises ShortFrame when the buffer truncates mid-frame, CrcMismatch when
    verify_crc is set and the checksum disagrees, FrameError on impossible
    internal lengths.
    """
    view = memoryview(buf)
    if pos + 4 > len(view):
        raise ShortFrame("truncated length field")
    (body_len,) = _U32.unpack_from(view, pos)
    end = pos + 4 + body_len
    if body_len < 8 + 8 + 4 + 4 + 4:
        raise FrameError(f"frame length {body_len} impossibly small")
    if end > len(view):
        raise ShortFrame("truncated frame body")
    offset, timestamp = struct.unpack_from(">QQ", view, pos + 4)
    cursor = pos + 20
    (key_len,) = _U32.unpack_from(view, cursor)
    cursor += 4
    if key_len == _NO_KEY:
        key = None
    else:
        if cursor + key_len > end - 8:
            raise FrameError("key length exceeds frame")
        key = bytes(view[cursor : cursor + key_len])
        cursor += key_len
    (value_len,) = _U32.unpack_from(view, cursor)
    cursor += 4
    if cursor + value_len != end - 4:
        raise FrameError("value length inconsistent with frame length")
    value = bytes(view[cursor : cursor + value_len])
    (crc,) = _U32.unpack_from(view, end - 4)
    if verify_crc and zlib.crc32(view[pos : end - 4]) != crc:
        raise CrcMismatch(f"crc mismatch at byte {pos}")
    return LogRecord(offset, timestamp, key, value, crc), end


def scan_segment(data: bytes, verify_crc: bool) -> tuple[list[int], list[int], int, int]:
    """Walk frames from byte 0; returns (byte positions, timestamps, valid end, count).

    Stops at the first short or unparseable frame; with verify_crc it also
    stops at the first checksum failure, which is the recovery truncation
    point for an active segment.
    """
    positions: list[int] = []
    timestamps: list[int] = []
    pos = 0
    view = memoryview(data)
    while pos < len(data):
        try:
            record, nxt = decode_record(view, pos, verify_crc=verify_crc)
        except FrameError:
            break
        positions.append(pos)
        timestamps.append(record.timestamp)
        pos = nxt
    return positions, timestamps, pos, len(positions)
