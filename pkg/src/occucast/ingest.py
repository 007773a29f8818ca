"""Wi-Fi session log parsing and occupancy counting.

A session log is comma-delimited text with one association event per line::

    start_epoch_seconds,duration_seconds,device_id,ap_id

An optional ``start,duration,device,ap`` header is skipped.  Occupancy for an
interval is the number of distinct devices whose ``[start, start + duration)``
window overlaps the interval by a nonzero length.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DataError, ParseError

SCALES = (15, 30, 60)
SESSION_HEADER = ("start", "duration", "device", "ap")


@dataclass(frozen=True)
class SessionRecord:
    start: int
    duration: int
    device_id: str
    ap_id: str

    def __post_init__(self):
        if self.duration < 0:
            raise DataError(f"negative duration {self.duration}")
        if not self.device_id or not self.ap_id:
            raise DataError("device_id and ap_id must be non-empty")

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class Scope:
    """Aggregation target: the whole building (``ap_id is None``) or one AP."""

    ap_id: str | None = None

    def __post_init__(self):
        if self.ap_id is not None and not self.ap_id:
            raise DataError("access-point scope needs a non-empty ap_id")

    @classmethod
    def building(cls) -> Scope:
        return cls(None)

    @classmethod
    def access_point(cls, ap_id: str) -> Scope:
        return cls(ap_id)

    @classmethod
    def parse(cls, text: str) -> Scope:
        """Parse ``building`` or ``ap:<id>``."""
        text = text.strip()
        if text.lower() == "building":
            return cls.building()
        if text.lower().startswith("ap:"):
            return cls.access_point(text[3:])
        raise DataError(f"invalid scope {text!r}; expected 'building' or 'ap:<id>'")

    @property
    def is_building(self) -> bool:
        return self.ap_id is None

    def __str__(self) -> str:
        return "building" if self.ap_id is None else f"ap:{self.ap_id}"


@dataclass(frozen=True, eq=False)
class OccupancySeries:
    """Occupant counts on a gap-free grid of ``scale_minutes`` intervals.

    ``counts[k]`` covers ``[start + k*step, start + (k+1)*step)``.
    """

    scale_minutes: int
    scope: Scope
    start: int
    counts: np.ndarray

    def __post_init__(self):
        check_scale(self.scale_minutes)
        if self.start % self.step:
            raise DataError(f"series start {self.start} not aligned to {self.scale_minutes} min")
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise DataError("counts must be one-dimensional")
        if counts.size and (counts.min() < 0 or not np.all(counts == np.round(counts))):
            raise DataError("counts must be non-negative integers")
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def step(self) -> int:
        return self.scale_minutes * 60

    @property
    def end(self) -> int:
        return self.start + len(self.counts) * self.step

    @property
    def values(self) -> np.ndarray:
        return self.counts.astype(float)

    def timestamps(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self.counts), dtype=np.int64)

    def slice_time(self, t0: int, t1: int) -> OccupancySeries:
        """Sub-series covering ``[t0, t1)``; both bounds must lie on the grid."""
        if (t0 - self.start) % self.step or (t1 - self.start) % self.step:
            raise DataError("slice bounds not on the series grid")
        lo = max(0, (t0 - self.start) // self.step)
        hi = min(len(self.counts), (t1 - self.start) // self.step)
        return OccupancySeries(self.scale_minutes, self.scope, self.start + lo * self.step,
                               self.counts[lo:max(lo, hi)])

    def __len__(self) -> int:
        return len(self.counts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancySeries):
            return NotImplemented
        return (self.scale_minutes == other.scale_minutes and self.scope == other.scope
                and self.start == other.start and np.array_equal(self.counts, other.counts))

    __hash__ = None


def check_scale(scale_minutes: int) -> None:
    if scale_minutes not in SCALES:
        raise DataError(f"scale must be one of {SCALES}, got {scale_minutes}")


def _parse_timestamp(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    ts = dt.timestamp()
    if ts != int(ts):
        raise ValueError("sub-second timestamps are not supported")
    return int(ts)


def _text_lines(source: IO[bytes] | IO[str] | bytes | str) -> Iterable[str]:
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    elif isinstance(source, str):
        source = io.StringIO(source)
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, bytes) else raw


def parse_sessions(source: IO[bytes] | IO[str] | bytes | str) -> list[SessionRecord]:
    """Parse a session log into records, in file order.

    ``source`` may be a binary or text stream, or the raw log content.
    Blank lines are ignored.  Start times may be epoch seconds or ISO-8601
    (naive values are taken as UTC).

    Raises
    ------
    ParseError
        On the first malformed line, with its 1-based line number.
    """
    records = []
    seen_content = False
    for lineno, line in enumerate(_text_lines(source), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if not seen_content:
            seen_content = True
            if tuple(f.lower() for f in fields) == SESSION_HEADER:
                continue
        if len(fields) != 4:
            raise ParseError(lineno, f"expected 4 fields, found {len(fields)}")
        start_s, dur_s, device, ap = fields
        try:
            start = _parse_timestamp(start_s)
        except ValueError:
            raise ParseError(lineno, f"bad start time {start_s!r}") from None
        try:
            duration = int(dur_s)
        except ValueError:
            raise ParseError(lineno, f"bad duration {dur_s!r}") from None
        if duration < 0:
            raise ParseError(lineno, f"negative duration {duration}")
        if not device or not ap:
            raise ParseError(lineno, "empty device or ap id")
        records.append(SessionRecord(start, duration, device, ap))
    return records


def read_sessions(path) -> list[SessionRecord]:
    with open(path, "rb") as fh:
        return parse_sessions(fh)


def format_sessions(sessions: Iterable[SessionRecord], header: bool = True) -> str:
    lines = [",".join(SESSION_HEADER)] if header else []
    lines += [f"{s.start},{s.duration},{s.device_id},{s.ap_id}" for s in sessions]
    return "\n".join(lines) + "\n"


def ap_ids(sessions: Iterable[SessionRecord]) -> list[str]:
    return sorted({s.ap_id for s in sessions})


def infer_range(sessions: Sequence[SessionRecord], scale_minutes: int) -> tuple[int, int]:
    """Smallest scale-aligned ``[t0, t1)`` covering every session."""
    check_scale(scale_minutes)
    if not sessions:
        raise DataError("cannot infer a time range from an empty log")
    step = scale_minutes * 60
    lo = min(s.start for s in sessions)
    hi = max(max(s.end for s in sessions), lo + 1)
    return lo // step * step, -(-hi // step) * step


def count_occupancy(sessions: Sequence[SessionRecord], scale_minutes: int, scope: Scope,
                    t0: int, t1: int) -> OccupancySeries:
    """Count distinct devices present in each interval of ``[t0, t1)``.

    Building scope de-duplicates a device seen on several APs within one
    interval.  Zero-duration sessions are never counted.
    """
    check_scale(scale_minutes)
    step = scale_minutes * 60
    if t0 % step or t1 % step:
        raise DataError(f"range [{t0}, {t1}) not aligned to {scale_minutes}-minute boundaries")
    if t0 >= t1:
        raise DataError("empty range: t0 must be < t1")
    n = (t1 - t0) // step

    rows = [s for s in sessions
            if s.duration > 0 and (scope.ap_id is None or s.ap_id == scope.ap_id)
            and s.start < t1 and s.end > t0]
    if not rows:
        return OccupancySeries(scale_minutes, scope, t0, np.zeros(n, dtype=np.int64))

    starts = np.fromiter((s.start for s in rows), dtype=np.int64, count=len(rows))
    ends = np.fromiter((s.end for s in rows), dtype=np.int64, count=len(rows))
    _, device_codes = np.unique([s.device_id for s in rows], return_inverse=True)

    lo = np.maximum((starts - t0) // step, 0)
    hi = np.minimum((ends - t0 - 1) // step, n - 1)
    spans = hi - lo + 1
    # one (device, interval) pair per covered interval, then de-duplicate
    offsets = np.arange(spans.sum()) - np.repeat(np.cumsum(spans) - spans, spans)
    intervals = np.repeat(lo, spans) + offsets
    pairs = np.unique(np.repeat(device_codes.astype(np.int64), spans) * n + intervals)
    counts = np.bincount(pairs % n, minlength=n)
    return OccupancySeries(scale_minutes, scope, t0, counts)


def format_series(series: OccupancySeries) -> str:
    return "".join(f"{t},{c}\n" for t, c in zip(series.timestamps(), series.counts))


def parse_series(source: IO[bytes] | IO[str] | bytes | str, scale_minutes: int | None = None,
                 scope: Scope | None = None) -> OccupancySeries:
    """Read the two-column ``interval_start_epoch,count`` format.

    The scale is inferred from timestamp spacing when not given.  A leading
    non-numeric header line is skipped.
    """
    times, counts = [], []
    for lineno, line in enumerate(_text_lines(source), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise ParseError(lineno, f"expected 2 fields, found {len(fields)}")
        try:
            t, c = int(fields[0]), int(fields[1])
        except ValueError:
            if not times:
                continue
            raise ParseError(lineno, f"non-integer field in {line!r}") from None
        times.append(t)
        counts.append(c)
    if scale_minutes is None:
        if len(times) < 2:
            raise DataError("need at least two rows to infer the series scale")
        scale_minutes = (times[1] - times[0]) // 60
    check_scale(scale_minutes)
    step = scale_minutes * 60
    if not times:
        raise DataError("series file is empty")
    expected = times[0] + step * np.arange(len(times))
    if not np.array_equal(np.asarray(times), expected):
        raise DataError("series has gaps or irregular spacing")
    return OccupancySeries(scale_minutes, scope or Scope.building(), times[0], np.asarray(counts))


def read_series(path, scale_minutes: int | None = None, scope: Scope | None = None) -> OccupancySeries:
    with open(path, "rb") as fh:
        return parse_series(fh, scale_minutes, scope)


def write_series(series: OccupancySeries, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_series(series))
