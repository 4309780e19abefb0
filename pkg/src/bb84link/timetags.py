"""Detection-event containers and the time-tag CSV format.

The file format is shared by simulated and recorded data: UTF-8 CSV with
header ``detector_id,timestamp_ps``, one event per row, non-negative
integer picosecond timestamps, rows sorted by timestamp.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, OutputError, TimeTagFormatError

HEADER = "detector_id,timestamp_ps"
FORMAT_VERSION = 1
DETECTOR_IDS = (0, 1, 2, 3)


class DetectionEvent(NamedTuple):
    detector_id: int
    timestamp: int


# a single row of a time-tag file; same shape as a simulated event
TimeTagRecord = DetectionEvent


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-ordered detection events stored as parallel arrays."""

    detector_id: np.ndarray
    timestamp_ps: np.ndarray

    def __post_init__(self):
        det = np.asarray(self.detector_id, dtype=np.int64)
        ts = np.asarray(self.timestamp_ps, dtype=np.int64)
        if det.shape != ts.shape or det.ndim != 1:
            raise ArgumentError("detector_id and timestamp_ps must be 1-D and equal length")
        object.__setattr__(self, "detector_id", det)
        object.__setattr__(self, "timestamp_ps", ts)

    def __len__(self) -> int:
        return len(self.timestamp_ps)

    def __iter__(self):
        for d, t in zip(self.detector_id.tolist(), self.timestamp_ps.tolist()):
            yield DetectionEvent(d, t)

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (np.array_equal(self.detector_id, other.detector_id)
                and np.array_equal(self.timestamp_ps, other.timestamp_ps))

    @classmethod
    def empty(cls) -> "EventStream":
        return cls(np.empty(0, np.int64), np.empty(0, np.int64))

    @classmethod
    def from_events(cls, events) -> "EventStream":
        events = list(events)
        if not events:
            return cls.empty()
        det, ts = zip(*events)
        return cls(np.array(det), np.array(ts))

    def for_detector(self, detector_id: int) -> np.ndarray:
        return self.timestamp_ps[self.detector_id == detector_id]


def write_timetags(events: EventStream, path_or_buf) -> None:
    lines = [HEADER]
    lines += [f"{d},{t}" for d, t in zip(events.detector_id.tolist(), events.timestamp_ps.tolist())]
    text = "\n".join(lines) + "\n"
    if isinstance(path_or_buf, (str, os.PathLike)):
        try:
            with open(path_or_buf, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OutputError(f"cannot write time tags to {os.fspath(path_or_buf)}: {exc.strerror}") from exc
    else:
        path_or_buf.write(text)


def parse_timetags(text: str, detector_ids=DETECTOR_IDS) -> EventStream:
    """Parse time-tag CSV text; errors carry the 1-based line number."""
    lines = text.splitlines()
    if not lines or lines[0].strip().lstrip("﻿") != HEADER:
        raise TimeTagFormatError(f"expected header {HEADER!r}", line=1)
    allowed = set(detector_ids)
    det, ts = [], []
    last = -1
    for lineno, raw in enumerate(lines[1:], start=2):
        row = raw.strip()
        if not row:
            continue
        fields = row.split(",")
        if len(fields) != 2:
            raise TimeTagFormatError(f"expected 2 fields, got {len(fields)}", line=lineno)
        try:
            d, t = int(fields[0]), int(fields[1])
        except ValueError:
            raise TimeTagFormatError(f"non-integer field in {row!r}", line=lineno) from None
        if d not in allowed:
            raise TimeTagFormatError(f"unknown detector id {d}", line=lineno)
        if t < 0:
            raise TimeTagFormatError(f"negative timestamp {t}", line=lineno)
        if t < last:
            raise TimeTagFormatError(f"timestamp {t} precedes previous row ({last})", line=lineno)
        last = t
        det.append(d)
        ts.append(t)
    return EventStream(np.array(det, dtype=np.int64), np.array(ts, dtype=np.int64))


def read_timetags(path_or_buf, detector_ids=DETECTOR_IDS) -> EventStream:
    if isinstance(path_or_buf, (str, os.PathLike)):
        try:
            with open(path_or_buf, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OutputError(f"cannot read time tags from {os.fspath(path_or_buf)}: {exc.strerror}") from exc
    else:
        text = path_or_buf.read()
    return parse_timetags(text, detector_ids)


def timetags_to_string(events: EventStream) -> str:
    buf = io.StringIO()
    write_timetags(events, buf)
    return buf.getvalue()
