"""Bit-exact file formats: PTG1 binary time tags, CSV tables, JSON reports.

PTG1 layout (all little-endian): magic "PTG1" (4 bytes), version u16 = 1,
resolution_ps u64, record_count u64 — a 22-byte header — followed by
record_count fixed 16-byte records: time u64, channel u8, 7 reserved zero
bytes. Fixed-stride records allow chunked/memory-mapped reads; the reader
reports malformed input with exact byte offsets.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .correlate import CorrelationHistogram, Timetrace
from .model import ValidationError
from .simulate import TimeTagStream

PTG1_MAGIC = b"PTG1"
PTG1_VERSION = 1
_HEADER = struct.Struct("<4sHQQ")
_RECORD_DTYPE = np.dtype([("time", "<u8"), ("channel", "u1"), ("reserved", "u1", (7,))])
assert _RECORD_DTYPE.itemsize == 16


def write_ptg1(path, stream: TimeTagStream) -> None:
    """Write a tag stream; times must be sorted non-negative integers."""
    times = np.asarray(stream.times_ps)
    channels = np.asarray(stream.channels)
    if times.size and (np.any(times < 0) or np.any(np.diff(times) < 0)):
        raise ValidationError("tag times must be sorted and non-negative")
    records = np.zeros(times.size, dtype=_RECORD_DTYPE)
    records["time"] = times.astype(np.uint64)
    records["channel"] = channels.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(PTG1_MAGIC, PTG1_VERSION, int(stream.resolution_ps), times.size))
        fh.write(records.tobytes())


def read_ptg1(path) -> TimeTagStream:
    """Read a tag file, rejecting malformed content with byte offsets."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidationError(
            "truncated header: file is %d bytes, need %d (at byte offset %d)"
            % (len(raw), _HEADER.size, len(raw))
        )
    magic, version, resolution, count = _HEADER.unpack_from(raw, 0)
    if magic != PTG1_MAGIC:
        raise ValidationError(
            "bad magic %r at byte offset 0 (expected %r)" % (magic, PTG1_MAGIC)
        )
    if version != PTG1_VERSION:
        raise ValidationError(
            "unsupported version %d at byte offset 4" % version
        )
    body = raw[_HEADER.size :]
    expected = count * _RECORD_DTYPE.itemsize
    if len(body) != expected:
        raise ValidationError(
            "truncated records: header promises %d records (%d bytes) but %d "
            "bytes follow; file breaks at byte offset %d"
            % (count, expected, len(body), _HEADER.size + len(body))
        )
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    times = records["time"].astype(np.int64)
    channels = records["channel"].copy()
    bad = np.flatnonzero(np.diff(times) < 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise ValidationError(
            "unsorted record %d at byte offset %d: time %d follows %d"
            % (i, _HEADER.size + i * _RECORD_DTYPE.itemsize, times[i], times[i - 1])
        )
    bad_ch = np.flatnonzero(channels > 1)
    if bad_ch.size:
        i = int(bad_ch[0])
        raise ValidationError(
            "invalid channel %d in record %d at byte offset %d"
            % (channels[i], i, _HEADER.size + i * _RECORD_DTYPE.itemsize + 8)
        )
    return TimeTagStream(
        times_ps=times, channels=channels, resolution_ps=int(resolution)
    )


def write_histogram_csv(path, hist: CorrelationHistogram) -> None:
    edges = hist.bin_edges_ps[:-1]
    with open(path, "w") as fh:
        fh.write("# bin_width_ps=%g\n" % hist.bin_width_ps)
        fh.write("# window_ps=%g\n" % hist.window_ps)
        for start, c in zip(edges, hist.counts):
            fh.write("%g,%d\n" % (start, c))


def read_histogram_csv(path) -> CorrelationHistogram:
    meta = _read_comment_meta(path)
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if "bin_width_ps" not in meta or "window_ps" not in meta:
        raise ValidationError(
            "histogram CSV must carry '# bin_width_ps=' and '# window_ps=' headers"
        )
    return CorrelationHistogram(
        bin_width_ps=float(meta["bin_width_ps"]),
        window_ps=float(meta["window_ps"]),
        counts=data[:, 1].astype(np.int64),
        total_pairs=int(data[:, 1].sum()),
    )


def write_timetrace_csv(path, trace: Timetrace) -> None:
    with open(path, "w") as fh:
        fh.write("# bin_width_ps=%g\n" % trace.bin_width_ps)
        fh.write("# period_ps=%g\n" % trace.period_ps)
        if trace.channel is not None:
            fh.write("# channel=%d\n" % trace.channel)
        for i, c in enumerate(trace.counts):
            fh.write("%g,%d\n" % (i * trace.bin_width_ps, c))


def read_timetrace_csv(path) -> Timetrace:
    meta = _read_comment_meta(path)
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if "bin_width_ps" not in meta or "period_ps" not in meta:
        raise ValidationError(
            "timetrace CSV must carry '# bin_width_ps=' and '# period_ps=' headers"
        )
    channel = int(meta["channel"]) if "channel" in meta else None
    return Timetrace(
        bin_width_ps=float(meta["bin_width_ps"]),
        period_ps=float(meta["period_ps"]),
        counts=data[:, 1].astype(np.int64),
        channel=channel,
    )


def _read_comment_meta(path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
    return meta


def read_xy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column numeric CSV ('#' comments allowed) -> (x, y) arrays."""
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as exc:
        raise ValidationError("could not parse %s as numeric CSV: %s" % (path, exc))
    if data.shape[1] < 2:
        raise ValidationError("%s must have two numeric columns" % (path,))
    return data[:, 0], data[:, 1]


def write_report(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
