"""Episode extraction: threshold runs, climatology exceedances, periodic
seasons, and user-supplied lists.

An episode is a maximal contiguous run of observations satisfying the set's
defining predicate. Runs still in progress at the end of the signal are kept
(flagged ``ongoing``) so that recent anchors see unfolding events.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import IngestError, ValidationError
from .timeline import Date, Resolution, Season, Signal, season_overlap_length


@dataclass(frozen=True)
class Episode:
    """A contiguous run of observations with duration and season overlap."""

    id: int
    start_ts: Date
    end_ts: Date
    values: tuple
    n: int
    tau: int = 0
    ongoing: bool = False
    intensity_mean: Optional[float] = None  # precomputed intensity, if any

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"episode {self.id}: duration must be >= 1")
        if not (0 <= self.tau <= self.n):
            raise ValidationError(f"episode {self.id}: tau outside [0, n]")


@dataclass(frozen=True)
class EpisodeSet:
    """Ordered, pairwise-disjoint episodes plus the parameters that define them."""

    source: str  # "threshold" | "climatology" | "periodic" | "user"
    resolution: Resolution
    episodes: tuple
    direction: str = "n/a"  # "up" | "down" | "n/a"
    threshold: Optional[float] = None
    min_duration: int = 1
    season: Optional[Season] = None

    def __post_init__(self):
        prev_end = None
        for ep in self.episodes:
            steps = self.resolution.steps_between(ep.start_ts, ep.end_ts)
            if steps != ep.n - 1:
                raise ValidationError(
                    f"episode {ep.id}: span {ep.start_ts}..{ep.end_ts} does not "
                    f"match duration {ep.n}"
                )
            if prev_end is not None and ep.start_ts <= prev_end:
                raise ValidationError(
                    f"episodes overlap or are out of order at {ep.start_ts}"
                )
            prev_end = ep.end_ts

    def __len__(self) -> int:
        return len(self.episodes)

    def member_timestamps(self, ep: Episode) -> List[Date]:
        return [self.resolution.shift(ep.start_ts, i) for i in range(ep.n)]


def _tau(timestamps: Sequence[Date], season: Optional[Season]) -> int:
    if season is None:
        return 0
    return season_overlap_length(timestamps, season)


def _scan_runs(flags: Sequence[bool]) -> List[Tuple[int, int]]:
    """Maximal runs of True as (start, length) pairs."""
    runs = []
    start = None
    for i, flag in enumerate(flags):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(flags) - start))
    return runs


def extract_threshold(
    signal: Signal,
    threshold: float,
    direction: str,
    min_duration: int = 1,
    season: Optional[Season] = None,
) -> EpisodeSet:
    """Maximal runs where value >= threshold (up) or <= threshold (down).

    Comparisons are threshold-inclusive; runs shorter than `min_duration`
    are discarded. E.g. on a monthly SOI series, up/8 with min_duration 5
    yields La Nina episodes and down/-8 El Nino episodes.
    """
    if direction not in ("up", "down"):
        raise ValidationError(f"direction must be 'up' or 'down', got {direction!r}")
    if min_duration < 1:
        raise ValidationError("min_duration must be >= 1")
    if direction == "up":
        flags = [v >= threshold for v in signal.values]
    else:
        flags = [v <= threshold for v in signal.values]

    episodes = []
    for start, length in _scan_runs(flags):
        if length < min_duration:
            continue
        ts = signal.timestamps[start : start + length]
        episodes.append(
            Episode(
                id=len(episodes) + 1,
                start_ts=ts[0],
                end_ts=ts[-1],
                values=tuple(signal.values[start : start + length]),
                n=length,
                tau=_tau(ts, season),
                ongoing=(start + length == len(signal)),
            )
        )
    return EpisodeSet(
        source="threshold",
        resolution=signal.resolution,
        episodes=tuple(episodes),
        direction=direction,
        threshold=threshold,
        min_duration=min_duration,
        season=season,
    )


def _doy_key(d: Date) -> tuple:
    # Feb 29 folds into Feb 28 so every year has the same 365 keys.
    if d.month == 2 and d.day == 29:
        return (2, 28)
    return (d.month, d.day)


_ALL_DOY_KEYS = [
    _doy_key(dt.date(2001, 1, 1) + dt.timedelta(days=i)) for i in range(365)
]
_DOY_POS = {k: i for i, k in enumerate(_ALL_DOY_KEYS)}


def day_of_year_climatology(
    signal: Signal, baseline: Tuple[int, int], percentile: float = 90.0, window: int = 11
):
    """Per-day-of-year (threshold, mean) from baseline values in a centered window.

    Returns two dicts keyed by (month, day): the given percentile and the
    mean of baseline observations whose day-of-year falls within the
    `window`-day window centered on that key.
    """
    if signal.resolution.kind != "daily":
        raise ValidationError("climatology requires a daily-resolution signal")
    start_year, end_year = baseline
    if end_year < start_year:
        raise ValidationError("baseline end year before start year")
    if end_year - start_year + 1 < 1 or (
        dt.date(end_year, 12, 31) - dt.date(start_year, 1, 1)
    ).days < 364:
        raise ValidationError("baseline must span at least one full year")
    if not (signal.start <= dt.date(start_year, 1, 1) and dt.date(end_year, 12, 31) <= signal.end):
        raise ValidationError(
            f"baseline {start_year}-{end_year} outside signal span "
            f"{signal.start}..{signal.end}"
        )

    by_pos = [[] for _ in range(365)]
    for t, v in zip(signal.timestamps, signal.values):
        if start_year <= t.year <= end_year:
            by_pos[_DOY_POS[_doy_key(t)]].append(v)

    half = window // 2
    thresholds = {}
    means = {}
    for pos, key in enumerate(_ALL_DOY_KEYS):
        pool = []
        for off in range(-half, half + 1):
            pool.extend(by_pos[(pos + off) % 365])
        if not pool:
            raise ValidationError(f"no baseline observations around {key}")
        arr = np.asarray(pool, dtype=float)
        thresholds[key] = float(np.percentile(arr, percentile))
        means[key] = float(arr.mean())
    return thresholds, means


def extract_climatology(
    signal: Signal,
    baseline: Tuple[int, int],
    percentile: float = 90.0,
    min_duration: int = 5,
    season: Optional[Season] = None,
) -> EpisodeSet:
    """Runs above a day-of-year climatological percentile threshold.

    A simplified prolonged-warm-event detector: per-day thresholds come from
    an 11-day centered window over the baseline years; no gap-joining and no
    severity categories. Each episode records its mean anomaly (value minus
    the day-of-year climatological mean) as a precomputed intensity.
    """
    if not (0 < percentile < 100):
        raise ValidationError("percentile must be in (0, 100)")
    thresholds, means = day_of_year_climatology(signal, baseline, percentile)
    # Strictly above: a value equal to its own climatological percentile
    # (e.g. a constant signal) is not anomalous.
    flags = [v > thresholds[_doy_key(t)] for t, v in zip(signal.timestamps, signal.values)]

    episodes = []
    for start, length in _scan_runs(flags):
        if length < min_duration:
            continue
        ts = signal.timestamps[start : start + length]
        vals = signal.values[start : start + length]
        anomaly = float(
            np.mean([v - means[_doy_key(t)] for t, v in zip(ts, vals)])
        )
        episodes.append(
            Episode(
                id=len(episodes) + 1,
                start_ts=ts[0],
                end_ts=ts[-1],
                values=tuple(vals),
                n=length,
                tau=_tau(ts, season),
                ongoing=(start + length == len(signal)),
                intensity_mean=anomaly,
            )
        )
    return EpisodeSet(
        source="climatology",
        resolution=signal.resolution,
        episodes=tuple(episodes),
        min_duration=min_duration,
        season=season,
    )


def _season_date(year: int, md: tuple) -> Date:
    month, day = md
    if month == 2 and day == 29:
        try:
            return dt.date(year, 2, 29)
        except ValueError:
            return dt.date(year, 2, 28)
    return dt.date(year, month, day)


def _ceil_steps(signal: Signal, d: Date) -> int:
    """Smallest grid position k with timestamp(k) >= d (k may be negative)."""
    res = signal.resolution
    k = _approx_steps(res, signal.start, d)
    while res.shift(signal.start, k) < d:
        k += 1
    while k > -10_000 and res.shift(signal.start, k - 1) >= d:
        k -= 1
    return k


def _floor_steps(signal: Signal, d: Date) -> int:
    """Largest grid position k with timestamp(k) <= d."""
    return _ceil_steps(signal, d + dt.timedelta(days=1)) - 1


def _approx_steps(res: Resolution, origin: Date, d: Date) -> int:
    days = (d - origin).days
    if res.kind == "monthly":
        return round(days / 30.44)
    step = 1 if res.kind == "daily" else res.step_days
    return days // step


def extract_periodic(signal: Signal, season: Season) -> EpisodeSet:
    """One episode per complete annual occurrence of the season.

    Occurrences truncated by the signal's start or end are dropped, so all
    episodes have equal duration (up to leap-day effects on daily grids).
    """
    res = signal.resolution
    episodes = []
    for year in range(signal.start.year - 1, signal.end.year + 1):
        window_start = _season_date(year, season.start)
        window_end = _season_date(year + 1 if season.wraps else year, season.end)
        if window_end < signal.start or window_start > signal.end:
            continue
        # theoretical grid points inside this occurrence window (the grid
        # extends beyond the signal by stepping from its first timestamp)
        first_k = _ceil_steps(signal, window_start)
        last_k = _floor_steps(signal, window_end)
        if last_k < first_k:
            continue
        # complete occurrences only: every expected point must be observed
        if first_k < 0 or last_k >= len(signal):
            continue
        ts = signal.timestamps[first_k : last_k + 1]
        episodes.append(
            Episode(
                id=len(episodes) + 1,
                start_ts=ts[0],
                end_ts=ts[-1],
                values=tuple(signal.values[first_k : last_k + 1]),
                n=last_k - first_k + 1,
                tau=last_k - first_k + 1,  # by construction fully in-season
            )
        )
    if not episodes:
        raise ValidationError("signal does not span one complete season occurrence")
    return EpisodeSet(
        source="periodic",
        resolution=signal.resolution,
        episodes=tuple(episodes),
        season=season,
    )


EPISODE_CSV_COLUMNS = ["id", "start", "end", "n", "tau", "ongoing", "intensity_mean"]


def write_episodes(episode_set: EpisodeSet, path) -> None:
    res = episode_set.resolution
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_CSV_COLUMNS)
        for ep in episode_set.episodes:
            writer.writerow(
                [
                    ep.id,
                    res.format_timestamp(ep.start_ts),
                    res.format_timestamp(ep.end_ts),
                    ep.n,
                    ep.tau,
                    "true" if ep.ongoing else "false",
                    "" if ep.intensity_mean is None else repr(ep.intensity_mean),
                ]
            )


def load_episodes(
    path,
    season: Optional[Season] = None,
    signal: Optional[Signal] = None,
    resolution: Optional[Resolution] = None,
) -> EpisodeSet:
    """Read a user-supplied episode CSV (columns `start`, `end`, optionally
    `intensity_mean`).

    Member values are sliced from `signal` when given; otherwise episodes
    must carry a precomputed intensity and are only usable with the
    `precomputed` intensity kind. tau is recomputed against `season`.
    Only contiguous-run episodes are supported.
    """
    if signal is not None:
        resolution = signal.resolution
    if resolution is None:
        raise ValidationError("load_episodes needs a signal or an explicit resolution")

    raw = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"start", "end"} <= set(reader.fieldnames):
            raise IngestError(f"{path}: episode CSV needs 'start' and 'end' columns")
        for lineno, row in enumerate(reader, start=2):
            try:
                start = resolution.parse_timestamp(row["start"])
                end = resolution.parse_timestamp(row["end"])
            except ValidationError as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from exc
            pre = row.get("intensity_mean")
            pre_val = float(pre) if pre not in (None, "") else None
            raw.append((lineno, start, end, pre_val))

    if not raw:
        raise IngestError(f"{path}: no episodes")
    raw.sort(key=lambda r: r[1])

    episodes = []
    for i, (lineno, start, end, pre_val) in enumerate(raw):
        if end < start:
            raise IngestError(f"{path}:{lineno}: end {end} before start {start}")
        n = resolution.steps_between(start, end) + 1
        ts = [resolution.shift(start, k) for k in range(n)]
        if signal is not None:
            if not (signal.start <= start and end <= signal.end) or not (
                resolution.on_grid(signal.start, start)
            ):
                raise IngestError(
                    f"{path}:{lineno}: episode {start}..{end} not on the grid of "
                    f"signal {signal.name!r}"
                )
            _, values = signal.slice_dates(start, end)
        else:
            if pre_val is None:
                raise IngestError(
                    f"{path}:{lineno}: no reference signal and no intensity_mean; "
                    "episode has no usable intensity"
                )
            values = ()
        episodes.append(
            Episode(
                id=i + 1,
                start_ts=start,
                end_ts=end,
                values=tuple(values),
                n=n,
                tau=_tau(ts, season),
                intensity_mean=pre_val,
            )
        )

    for a, b in zip(episodes, episodes[1:]):
        if b.start_ts <= a.end_ts:
            raise IngestError(
                f"{path}: episodes {a.id} and {b.id} overlap "
                f"({a.start_ts}..{a.end_ts} vs {b.start_ts}..{b.end_ts})"
            )
    return EpisodeSet(
        source="user",
        resolution=resolution,
        episodes=tuple(episodes),
        season=season,
    )


def load_episode_csv(path, season=None, signal=None, resolution=None) -> EpisodeSet:
    """Alias kept for symmetry with write_episodes."""
    return load_episodes(path, season=season, signal=signal, resolution=resolution)
