"""Time axis primitives: resolutions, signals, recurring seasons, CSV ingest.

Conventions used throughout the toolkit:

* timestamps are plain :class:`datetime.date` values at daily resolution;
* a monthly observation is represented by the first day of its month, and
  season membership of a monthly point is decided by that representative day;
* regular grids are mandatory -- gaps are rejected at ingestion, never
  imputed.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import GridGapError, IngestError, ValidationError

Date = dt.date


def _month_index(d: Date) -> int:
    return d.year * 12 + d.month - 1


def _from_month_index(i: int) -> Date:
    return dt.date(i // 12, i % 12 + 1, 1)


@dataclass(frozen=True)
class Resolution:
    """Grid spacing of a signal: daily, monthly, or a custom step in days."""

    kind: str  # "daily" | "monthly" | "custom"
    step_days: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("daily", "monthly", "custom"):
            raise ValidationError(f"unknown resolution kind {self.kind!r}")
        if self.kind == "custom":
            if not self.step_days or self.step_days < 1:
                raise ValidationError("custom resolution needs step_days >= 1")
        elif self.step_days is not None:
            raise ValidationError(f"{self.kind} resolution takes no step_days")

    @classmethod
    def daily(cls) -> "Resolution":
        return cls("daily")

    @classmethod
    def monthly(cls) -> "Resolution":
        return cls("monthly")

    @classmethod
    def custom(cls, step_days: int) -> "Resolution":
        return cls("custom", step_days)

    @classmethod
    def parse(cls, text: str) -> "Resolution":
        if text == "daily":
            return cls.daily()
        if text == "monthly":
            return cls.monthly()
        if text.startswith("custom:"):
            return cls.custom(int(text.split(":", 1)[1]))
        raise ValidationError(
            f"unknown resolution {text!r} (expected daily, monthly or custom:N)"
        )

    def __str__(self) -> str:
        if self.kind == "custom":
            return f"custom:{self.step_days}"
        return self.kind

    # --- grid arithmetic -------------------------------------------------

    def shift(self, d: Date, steps: int) -> Date:
        if self.kind == "monthly":
            return _from_month_index(_month_index(d) + steps)
        span = steps if self.kind == "daily" else steps * self.step_days
        return d + dt.timedelta(days=span)

    def steps_between(self, earlier: Date, later: Date) -> int:
        """Number of grid steps from `earlier` to `later` (exact or error)."""
        if self.kind == "monthly":
            if earlier.day != 1 or later.day != 1:
                raise ValidationError(
                    f"monthly grid dates must be first-of-month: {earlier}, {later}"
                )
            return _month_index(later) - _month_index(earlier)
        days = (later - earlier).days
        step = 1 if self.kind == "daily" else self.step_days
        if days % step:
            raise ValidationError(
                f"{later} is not a whole number of {step}-day steps from {earlier}"
            )
        return days // step

    def on_grid(self, anchor: Date, d: Date) -> bool:
        try:
            self.steps_between(anchor, d)
        except ValidationError:
            return False
        return True

    def parse_timestamp(self, text: str) -> Date:
        text = text.strip()
        try:
            if self.kind == "monthly":
                if len(text) == 7:
                    y, m = text.split("-")
                    return dt.date(int(y), int(m), 1)
                d = dt.date.fromisoformat(text)
                if d.day != 1:
                    raise ValidationError(
                        f"monthly timestamp {text!r} must be YYYY-MM or first-of-month"
                    )
                return d
            return dt.date.fromisoformat(text)
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"cannot parse timestamp {text!r}: {exc}") from exc

    def format_timestamp(self, d: Date) -> str:
        if self.kind == "monthly":
            return f"{d.year:04d}-{d.month:02d}"
        return d.isoformat()


@dataclass(frozen=True)
class Season:
    """Annually recurring month-day window, end-inclusive, may wrap the year.

    ``Season((11, 15), (2, 10))`` covers Nov 15 through Feb 10 of the
    following year.
    """

    start: tuple  # (month, day)
    end: tuple  # (month, day)

    def __post_init__(self):
        for label, (month, day) in (("start", self.start), ("end", self.end)):
            try:
                dt.date(2000, month, day)  # leap year: permits (2, 29)
            except ValueError as exc:
                raise ValidationError(f"invalid season {label} {month:02d}-{day:02d}") from exc

    @classmethod
    def parse(cls, text: str) -> "Season":
        """Parse ``MM-DD:MM-DD``, e.g. ``06-01:08-31``."""
        try:
            lo, hi = text.split(":")
            sm, sd = (int(x) for x in lo.split("-"))
            em, ed = (int(x) for x in hi.split("-"))
        except ValueError as exc:
            raise ValidationError(f"cannot parse season {text!r} (want MM-DD:MM-DD)") from exc
        return cls((sm, sd), (em, ed))

    def __str__(self) -> str:
        return "{:02d}-{:02d}:{:02d}-{:02d}".format(*self.start, *self.end)

    @property
    def wraps(self) -> bool:
        return self.end < self.start

    def contains(self, d: Date) -> bool:
        md = (d.month, d.day)
        if self.wraps:
            return md >= self.start or md <= self.end
        return self.start <= md <= self.end

    def complement(self) -> "Season":
        """The rest of the year; only defined for non-wrapping seasons."""
        if self.wraps:
            raise ValidationError("complement of a wrapping season is not supported")
        after = _next_month_day(self.end)
        before = _prev_month_day(self.start)
        return Season(after, before)


def _next_month_day(md: tuple) -> tuple:
    d = dt.date(2000, md[0], md[1]) + dt.timedelta(days=1)
    return (d.month, d.day)


def _prev_month_day(md: tuple) -> tuple:
    d = dt.date(2000, md[0], md[1]) - dt.timedelta(days=1)
    return (d.month, d.day)


def season_overlap_length(timestamps: Sequence[Date], season: Season) -> int:
    """Count timestamps whose month-day falls inside the season.

    Counted across all years spanned; the unit is the native resolution
    unit of the series the timestamps came from.
    """
    if not timestamps:
        raise ValidationError("season_overlap_length needs at least one timestamp")
    return sum(1 for t in timestamps if season.contains(t))


@dataclass(frozen=True)
class Signal:
    """A gap-free, strictly increasing regular time series of one variable."""

    name: str
    resolution: Resolution
    timestamps: tuple
    values: tuple

    def __post_init__(self):
        if len(self.timestamps) != len(self.values):
            raise ValidationError("timestamps and values differ in length")
        if not self.timestamps:
            raise ValidationError("empty signal")
        _check_grid(self.timestamps, self.resolution)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def start(self) -> Date:
        return self.timestamps[0]

    @property
    def end(self) -> Date:
        return self.timestamps[-1]

    def index_of(self, d: Date) -> int:
        return self.resolution.steps_between(self.timestamps[0], d)

    def slice_dates(self, start: Date, end: Date) -> "tuple":
        """(timestamps, values) for start <= t <= end (grid-aligned)."""
        i = max(0, self.index_of(start))
        j = min(len(self) - 1, self.index_of(end))
        return self.timestamps[i : j + 1], self.values[i : j + 1]


def _check_grid(timestamps: Sequence[Date], resolution: Resolution) -> None:
    prev = None
    for t in timestamps:
        if prev is not None:
            if t <= prev:
                raise ValidationError(f"timestamps not strictly increasing at {t}")
            steps = resolution.steps_between(prev, t)
            if steps != 1:
                missing = resolution.format_timestamp(resolution.shift(prev, 1))
                raise GridGapError(
                    f"gap in {resolution} grid: missing {missing} "
                    f"between {resolution.format_timestamp(prev)} and "
                    f"{resolution.format_timestamp(t)}",
                    missing=missing,
                )
        elif resolution.kind == "monthly" and t.day != 1:
            raise ValidationError(f"monthly timestamp {t} must be first-of-month")
        prev = t


def ingest_signal(path, schema=None, resolution="monthly", name=None) -> Signal:
    """Read a signal CSV (header required), sort, and validate the grid.

    `schema` maps logical column names to file column names, e.g.
    ``{"timestamp": "date", "value": "soi"}``. Defaults to columns named
    ``timestamp`` and ``value``.
    """
    if isinstance(resolution, str):
        resolution = Resolution.parse(resolution)
    schema = schema or {}
    ts_col = schema.get("timestamp", "timestamp")
    val_col = schema.get("value", "value")

    rows = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: empty file, header row required")
        for col in (ts_col, val_col):
            if col not in reader.fieldnames:
                raise IngestError(
                    f"{path}: column {col!r} not found (have {reader.fieldnames})"
                )
        for lineno, row in enumerate(reader, start=2):
            try:
                ts = resolution.parse_timestamp(row[ts_col])
                value = float(row[val_col])
            except (ValidationError, ValueError, TypeError) as exc:
                raise IngestError(f"{path}:{lineno}: malformed row: {exc}") from exc
            if value != value or value in (float("inf"), float("-inf")):
                raise IngestError(f"{path}:{lineno}: non-finite value {row[val_col]!r}")
            rows.append((ts, value))

    if not rows:
        raise IngestError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    for (t1, _), (t2, _) in zip(rows, rows[1:]):
        if t1 == t2:
            raise IngestError(
                f"{path}: duplicate timestamp {resolution.format_timestamp(t1)}"
            )
    return Signal(
        name=name or str(path),
        resolution=resolution,
        timestamps=tuple(t for t, _ in rows),
        values=tuple(v for _, v in rows),
    )


def write_signal(signal: Signal, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "value"])
        for t, v in zip(signal.timestamps, signal.values):
            writer.writerow([signal.resolution.format_timestamp(t), repr(float(v))])
