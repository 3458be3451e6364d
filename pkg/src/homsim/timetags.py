"""Time-tag streams: data model, bit-exact file formats, histogramming.

A stream is a time-ordered sequence of (time_ps, channel) detection
records plus acquisition metadata.  Timestamps are unsigned 64-bit
picoseconds since acquisition start (100 ps tagger accuracy over
multi-hour runs needs the full range); channel ids are 8-bit, with ids
beyond the two detectors reserved for future nodes.

Binary format ``HTT1`` (all integers little-endian, packed):

    offset  size  field
    0       4     magic b"HTT1"
    4       2     u16  format version (= 1)
    6       8     u64  resolution_ps
    14      8     u64  trigger_period_ps
    22      8     u64  n_triggers
    30      1     u8   has_master_seed (0 or 1)
    31      8     u64  master_seed (0 when absent)
    39      1     u8   n_channels
    --      --    per channel: u8 label length + UTF-8 label bytes
    --      8     u64  n_records
    --      9*n   records: u64 time_ps + u8 channel

The CSV alternative carries the same metadata in ``# key=value`` comment
lines followed by a ``time_ps,channel`` table; both formats round-trip
losslessly and parse to equal streams.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

MAGIC = b"HTT1"
FORMAT_VERSION = 1


class TimeTagError(Exception):
    """Base class for stream format violations."""


class BadMagicError(TimeTagError):
    """File does not start with the HTT1 magic (or the CSV header is wrong)."""


class TruncatedRecordError(TimeTagError):
    """File ends mid-header or mid-record, or record count disagrees."""


class UnsortedTagsError(TimeTagError):
    """Tag times are not non-decreasing."""


class TimeTag(NamedTuple):
    time_ps: int
    channel: int


@dataclass(frozen=True)
class StreamHeader:
    trigger_period_ps: int
    n_triggers: int
    resolution_ps: int = 100
    channel_labels: tuple[str, ...] = ("det0", "det1")
    master_seed: int | None = None

    def __post_init__(self) -> None:
        if self.trigger_period_ps <= 0:
            raise ValueError("trigger_period_ps must be > 0")
        if self.resolution_ps <= 0:
            raise ValueError("resolution_ps must be > 0")
        if self.n_triggers < 0:
            raise ValueError("n_triggers must be >= 0")
        if not self.channel_labels:
            raise ValueError("at least one channel label required")


@dataclass
class TimeTagStream:
    """Header plus parallel arrays of tag times (uint64 ps) and channels
    (uint8).  Construction enforces the non-decreasing-time invariant."""

    header: StreamHeader
    times_ps: np.ndarray
    channels: np.ndarray

    def __post_init__(self) -> None:
        self.times_ps = np.ascontiguousarray(self.times_ps, dtype=np.uint64)
        self.channels = np.ascontiguousarray(self.channels, dtype=np.uint8)
        if self.times_ps.shape != self.channels.shape or self.times_ps.ndim != 1:
            raise ValueError("times_ps and channels must be 1-d arrays of equal length")
        if self.times_ps.size and np.any(np.diff(self.times_ps.astype(np.int64)) < 0):
            raise UnsortedTagsError("tag times must be non-decreasing")
        if self.channels.size and int(self.channels.max()) >= len(self.header.channel_labels):
            raise ValueError("channel id outside the header's channel list")

    def __len__(self) -> int:
        return int(self.times_ps.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeTagStream):
            return NotImplemented
        return (self.header == other.header
                and np.array_equal(self.times_ps, other.times_ps)
                and np.array_equal(self.channels, other.channels))

    @classmethod
    def from_tags(cls, header: StreamHeader, tags: Iterable[TimeTag]) -> "TimeTagStream":
        tags = list(tags)
        times = np.array([t.time_ps for t in tags], dtype=np.uint64)
        chans = np.array([t.channel for t in tags], dtype=np.uint8)
        return cls(header, times, chans)

    def tags(self) -> list[TimeTag]:
        return [TimeTag(int(t), int(c)) for t, c in zip(self.times_ps, self.channels)]


# ---------------------------------------------------------------------------
# binary format
# ---------------------------------------------------------------------------

def _encode_binary(stream: TimeTagStream) -> bytes:
    h = stream.header
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", FORMAT_VERSION)
    out += struct.pack("<QQQ", h.resolution_ps, h.trigger_period_ps, h.n_triggers)
    out += struct.pack("<BQ", 1 if h.master_seed is not None else 0,
                       h.master_seed if h.master_seed is not None else 0)
    out += struct.pack("<B", len(h.channel_labels))
    for label in h.channel_labels:
        raw = label.encode("utf-8")
        if len(raw) > 255:
            raise ValueError(f"channel label too long: {label!r}")
        out += struct.pack("<B", len(raw)) + raw
    out += struct.pack("<Q", len(stream))
    records = np.empty(len(stream), dtype=np.dtype([("t", "<u8"), ("c", "u1")]))
    records["t"] = stream.times_ps
    records["c"] = stream.channels
    out += records.tobytes()
    return bytes(out)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedRecordError(f"file truncated while reading {what}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _decode_binary(data: bytes) -> TimeTagStream:
    cur = _Cursor(data)
    if cur.take(4, "magic") != MAGIC:
        raise BadMagicError("not an HTT1 time-tag file")
    (version,) = cur.unpack("<H", "version")
    if version != FORMAT_VERSION:
        raise TimeTagError(f"unsupported HTT version {version}")
    resolution, period, n_triggers = cur.unpack("<QQQ", "header")
    has_seed, seed = cur.unpack("<BQ", "seed")
    (n_channels,) = cur.unpack("<B", "channel count")
    labels = []
    for i in range(n_channels):
        (ln,) = cur.unpack("<B", f"label {i} length")
        labels.append(cur.take(ln, f"label {i}").decode("utf-8"))
    (n_records,) = cur.unpack("<Q", "record count")
    body = cur.take(9 * n_records, "records")
    if cur.pos != len(data):
        raise TruncatedRecordError("trailing bytes after the declared records")
    records = np.frombuffer(body, dtype=np.dtype([("t", "<u8"), ("c", "u1")]))
    header = StreamHeader(trigger_period_ps=int(period), n_triggers=int(n_triggers),
                          resolution_ps=int(resolution), channel_labels=tuple(labels),
                          master_seed=int(seed) if has_seed else None)
    return TimeTagStream(header, records["t"].copy(), records["c"].copy())


# ---------------------------------------------------------------------------
# CSV format
# ---------------------------------------------------------------------------

def _encode_csv(stream: TimeTagStream) -> str:
    h = stream.header
    lines = [
        f"# htt_version={FORMAT_VERSION}",
        f"# resolution_ps={h.resolution_ps}",
        f"# trigger_period_ps={h.trigger_period_ps}",
        f"# n_triggers={h.n_triggers}",
    ]
    if h.master_seed is not None:
        lines.append(f"# master_seed={h.master_seed}")
    lines.append("# channels=" + ",".join(h.channel_labels))
    lines.append("time_ps,channel")
    for t, c in zip(stream.times_ps, stream.channels):
        lines.append(f"{int(t)},{int(c)}")
    return "\n".join(lines) + "\n"


def _decode_csv(text: str) -> TimeTagStream:
    meta: dict[str, str] = {}
    times: list[int] = []
    chans: list[int] = []
    saw_column_header = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if not saw_column_header:
            if line != "time_ps,channel":
                raise BadMagicError("CSV stream must start with a time_ps,channel header")
            saw_column_header = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TruncatedRecordError(f"malformed record line: {raw!r}")
        try:
            times.append(int(parts[0]))
            chans.append(int(parts[1]))
        except ValueError as exc:
            raise TruncatedRecordError(f"malformed record line: {raw!r}") from exc
    if "trigger_period_ps" not in meta or not saw_column_header:
        raise BadMagicError("missing HTT metadata in CSV stream")
    header = StreamHeader(
        trigger_period_ps=int(meta["trigger_period_ps"]),
        n_triggers=int(meta.get("n_triggers", 0)),
        resolution_ps=int(meta.get("resolution_ps", 100)),
        channel_labels=tuple(meta.get("channels", "det0,det1").split(",")),
        master_seed=int(meta["master_seed"]) if "master_seed" in meta else None,
    )
    return TimeTagStream(header, np.array(times, dtype=np.uint64),
                         np.array(chans, dtype=np.uint8))


# ---------------------------------------------------------------------------
# public I/O
# ---------------------------------------------------------------------------

def _format_for(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("binary", "csv"):
            raise ValueError(f"unknown format {fmt!r}")
        return fmt
    return "csv" if path.suffix.lower() == ".csv" else "binary"


def write_stream(path, stream: TimeTagStream, fmt: str | None = None) -> None:
    """Write a stream losslessly; format from ``fmt`` or the file suffix
    (``.csv`` selects CSV, anything else the HTT1 binary layout)."""
    path = Path(path)
    if _format_for(path, fmt) == "csv":
        path.write_text(_encode_csv(stream))
    else:
        path.write_bytes(_encode_binary(stream))


def read_stream(path, fmt: str | None = None) -> TimeTagStream:
    """Read a stream written by :func:`write_stream`.

    Raises :class:`BadMagicError`, :class:`TruncatedRecordError` or
    :class:`UnsortedTagsError` for the corresponding corruptions.
    """
    path = Path(path)
    if _format_for(path, fmt) == "csv":
        return _decode_csv(path.read_text())
    return _decode_binary(path.read_bytes())


# ---------------------------------------------------------------------------
# histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    """Counts of one channel's tags folded over the trigger cycle."""

    bin_edges_ns: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    channel: int
    bin_ns: float

    @property
    def centers_ns(self) -> np.ndarray:
        return 0.5 * (self.bin_edges_ns[:-1] + self.bin_edges_ns[1:])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def fold_histogram(stream: TimeTagStream, channel: int, bin_ns: float) -> Histogram:
    """Histogram a channel's tags by time modulo the trigger period.

    ``bin_ns`` must divide the trigger period exactly after rounding to
    the picosecond grid.
    """
    if bin_ns <= 0.0:
        raise ValueError("bin_ns must be > 0")
    period_ps = stream.header.trigger_period_ps
    bin_ps = int(round(bin_ns * 1000.0))
    if bin_ps <= 0 or period_ps % bin_ps != 0:
        raise ValueError(
            f"bin_ns={bin_ns} does not divide the trigger period "
            f"{period_ps / 1000.0} ns")
    n_bins = period_ps // bin_ps
    mask = stream.channels == channel
    folded = stream.times_ps[mask] % np.uint64(period_ps)
    idx = (folded // np.uint64(bin_ps)).astype(np.int64)
    counts = np.bincount(idx, minlength=n_bins).astype(np.int64)
    edges = np.arange(n_bins + 1, dtype=float) * (bin_ps / 1000.0)
    return Histogram(edges, counts, channel, bin_ns)
