"""Time-tag streams and their binary / CSV file formats.

Binary layout (little-endian)::

    header   magic "TTG1" | version u16 | resolution_ps u32 | channel_count u8 | duration_ps u64
    record   channel u8 | 3 pad bytes | timestamp_ps i64            (12 bytes)
"""
from __future__ import annotations

import io
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (BadMagic, EmptyChannel, NonPositiveDuration, ParseError,
                         TruncatedRecord, UnknownChannel, UnsortedInput,
                         UnsupportedVersion)

PS_PER_S = 10 ** 12

SIGNAL, IDLER, IDLER1, IDLER2 = 0, 1, 2, 3
CHANNEL_NAMES = {SIGNAL: "signal", IDLER: "idler", IDLER1: "idler1", IDLER2: "idler2"}

MAGIC = b"TTG1"
VERSION = 1
RESOLUTION_PS = 1
HEADER = struct.Struct("<4sHIBQ")
RECORD_DTYPE = np.dtype([("channel", "u1"), ("pad", "V3"), ("timestamp", "<i8")])
assert RECORD_DTYPE.itemsize == 12


@dataclass(frozen=True, eq=False)
class TagStream:
    """Time-ordered detection records.

    ``timestamps`` are integer picoseconds since stream start and ``duration``
    is the observation length in picoseconds. ``detectors`` maps channel id to
    the detector parameters used to produce it (informational only, not
    serialized). ``n_channels`` declares channels 0..n-1 as present even when
    they recorded nothing; it comes from the file header on read.
    """

    channels: np.ndarray
    timestamps: np.ndarray
    duration: int
    detectors: dict = field(default_factory=dict)
    n_channels: int = 0

    def __post_init__(self):
        ch = np.ascontiguousarray(self.channels, dtype=np.uint8)
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        if ch.shape != ts.shape or ch.ndim != 1:
            raise ValueError("channels and timestamps must be 1-D arrays of equal length")
        if int(self.duration) <= 0:
            raise NonPositiveDuration(f"duration must be > 0 ps, got {self.duration}")
        ch.flags.writeable = False
        ts.flags.writeable = False
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "duration", int(self.duration))
        object.__setattr__(self, "n_channels", int(self.n_channels))

    @classmethod
    def from_channels(cls, tags, duration, detectors=None):
        """Build a sorted stream from ``{channel: timestamps}``."""
        chans = [np.full(len(t), c, dtype=np.uint8) for c, t in tags.items()]
        times = [np.asarray(t, dtype=np.int64) for t in tags.values()]
        if chans:
            ch, ts = merge_sorted(np.concatenate(chans), np.concatenate(times))
        else:
            ch, ts = np.empty(0, np.uint8), np.empty(0, np.int64)
        return cls(ch, ts, duration, dict(detectors or {}))

    def __len__(self):
        return len(self.timestamps)

    def __eq__(self, other):
        if not isinstance(other, TagStream):
            return NotImplemented
        return (self.duration == other.duration
                and np.array_equal(self.channels, other.channels)
                and np.array_equal(self.timestamps, other.timestamps))

    @property
    def duration_s(self):
        return self.duration / PS_PER_S

    @property
    def channel_ids(self):
        present = set(np.unique(self.channels).tolist())
        return sorted(present | set(self.detectors) | set(range(self.n_channels)))

    def channel(self, ch):
        """Sorted timestamps of one channel."""
        return self.timestamps[self.channels == ch]

    def count(self, ch):
        return int(np.count_nonzero(self.channels == ch))

    def is_sorted(self):
        return bool(np.all(np.diff(self.timestamps) >= 0))


def merge_sorted(channels, timestamps):
    """Sort records by (timestamp, channel). Timestamps must be non-negative."""
    timestamps = np.asarray(timestamps, dtype=np.int64)
    if len(timestamps) and timestamps.min() < 0:
        raise ValueError("timestamps must be non-negative")
    key = (timestamps << 8) | np.asarray(channels, dtype=np.int64)
    key.sort()
    return (key & 0xFF).astype(np.uint8), key >> 8


def check_stream(stream, channels=(), require_events=False):
    """Validate that ``channels`` exist in ``stream`` (and are non-empty if asked)."""
    if not isinstance(stream, TagStream):
        raise TypeError(f"expected TagStream, got {type(stream).__name__}")
    known = set(stream.channel_ids)
    for ch in channels:
        if ch not in known and require_events and len(stream) == 0:
            raise EmptyChannel(f"stream has no events (channel {ch} requested); rates are undefined")
        if ch not in known:
            raise UnknownChannel(f"channel {ch} not present in stream (channels: {sorted(known)})")
        if require_events and stream.count(ch) == 0:
            raise EmptyChannel(f"channel {ch} has no events; rates are undefined")
    return stream


def atomic_write(path, data: bytes):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _declared_channels(stream):
    ids = stream.channel_ids
    return min(max(ids) + 1, 255) if ids else 0


def encode_binary(stream):
    if not stream.is_sorted():
        raise UnsortedInput("timestamps must be non-decreasing before writing")
    ids = stream.channel_ids
    n_channels = _declared_channels(stream)
    header = HEADER.pack(MAGIC, VERSION, RESOLUTION_PS, n_channels, stream.duration)
    records = np.zeros(len(stream), dtype=RECORD_DTYPE)
    records["channel"] = stream.channels
    records["timestamp"] = stream.timestamps
    return header + records.tobytes()


def decode_binary(data: bytes):
    if len(data) < HEADER.size:
        if data[:4] != MAGIC[:len(data[:4])]:
            raise BadMagic(f"bad magic {data[:4]!r}")
        raise TruncatedRecord(len(data), f"truncated header at byte offset {len(data)}")
    magic, version, resolution, n_channels, duration = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"tag file version {version} not supported (expected {VERSION})")
    body = memoryview(data)[HEADER.size:]
    n_full, rest = divmod(len(body), RECORD_DTYPE.itemsize)
    if rest:
        raise TruncatedRecord(HEADER.size + n_full * RECORD_DTYPE.itemsize)
    records = np.frombuffer(body, dtype=RECORD_DTYPE, count=n_full)
    timestamps = records["timestamp"].astype(np.int64) * resolution
    channels = records["channel"].copy()
    if len(timestamps) and np.any(np.diff(timestamps) < 0):
        bad = int(np.argmax(np.diff(timestamps) < 0)) + 1
        raise UnsortedInput(f"record {bad} (byte offset {HEADER.size + bad * 12}) goes back in time")
    return TagStream(channels, timestamps, duration, n_channels=n_channels)


def write_tags(path, stream, format="bin"):
    """Write ``stream`` atomically in ``bin`` or ``csv`` format."""
    if format == "bin":
        atomic_write(path, encode_binary(stream))
    elif format == "csv":
        atomic_write(path, encode_csv(stream).encode())
    else:
        raise ValueError(f"unknown tag format {format!r}")


def read_tags(path):
    """Read a tag file; the format is chosen by content (binary magic or CSV)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:1] == b"#":
        return decode_csv(data.decode())
    return decode_binary(data)


def encode_csv(stream):
    if not stream.is_sorted():
        raise UnsortedInput("timestamps must be non-decreasing before writing")
    buf = io.StringIO()
    buf.write(f"# duration_ps: {stream.duration}\n")
    buf.write(f"# channels: {_declared_channels(stream)}\n")
    buf.write("# columns: channel,timestamp_ps\n")
    if len(stream):
        np.savetxt(buf, np.column_stack([stream.channels.astype(np.int64), stream.timestamps]),
                   fmt="%d", delimiter=",")
    return buf.getvalue()


def decode_csv(text):
    duration = None
    n_channels = 0
    channels, timestamps = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            if key.strip() == "duration_ps":
                try:
                    duration = int(value)
                except ValueError:
                    raise ParseError(lineno, f"bad duration {value.strip()!r}") from None
            elif key.strip() == "channels":
                try:
                    n_channels = int(value)
                except ValueError:
                    raise ParseError(lineno, f"bad channel count {value.strip()!r}") from None
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(lineno, f"expected 'channel,timestamp_ps', got {line!r}")
        try:
            channels.append(int(parts[0]))
            timestamps.append(int(parts[1]))
        except ValueError:
            raise ParseError(lineno, f"non-integer field in {line!r}") from None
    if duration is None:
        raise ParseError(None, "missing '# duration_ps:' header")
    ts = np.asarray(timestamps, dtype=np.int64)
    if len(ts) and np.any(np.diff(ts) < 0):
        raise UnsortedInput("CSV tag records are not time ordered")
    ch = np.asarray(channels, dtype=np.int64)
    if len(ch) and (ch.min() < 0 or ch.max() > 255):
        raise ParseError(None, "channel ids must be in [0, 255]")
    return TagStream(ch.astype(np.uint8), ts, duration, n_channels=n_channels)
