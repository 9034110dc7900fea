"""Index assembly: weighted sums of episode intensities over a memory window.

At each evaluation anchor the window is the `m` most recent grid steps
ending at the anchor (inclusive). Episodes straddling a window edge are
truncated and re-measured inside the window; positions are counted
backwards from the anchor, with s = 1 meaning the grid step at the anchor
itself.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .episodes import EpisodeSet
from .errors import ValidationError
from .intensity import IntensityKind, intensity
from .timeline import Date, Season, season_overlap_length
from .weights import WeightParams, w1_persistence, w2_recency, w3_timing


@dataclass(frozen=True)
class EvaluationSchedule:
    """Strictly increasing anchors at which the index is evaluated."""

    anchors: tuple

    def __post_init__(self):
        if not self.anchors:
            raise ValidationError("schedule needs at least one anchor")
        for a, b in zip(self.anchors, self.anchors[1:]):
            if b <= a:
                raise ValidationError(f"anchors not strictly increasing at {b}")

    @classmethod
    def yearly(cls, start_year: int, end_year: int, month: int = 12, day: int = 1):
        """December-first of each year by default (annual responses)."""
        return cls(tuple(dt.date(y, month, day) for y in range(start_year, end_year + 1)))

    def __len__(self) -> int:
        return len(self.anchors)


@dataclass(frozen=True)
class EpisodeView:
    """One episode as seen from one anchor's window (possibly truncated)."""

    episode_id: int
    n: int  # in-window duration
    s: int  # recency of the newest in-window member, 1 = at the anchor
    tau: int  # in-window season overlap
    value: float  # intensity on the in-window members
    truncated: bool


@dataclass(frozen=True)
class Contribution(EpisodeView):
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0

    @property
    def term(self) -> float:
        return self.w1 * self.w2 * self.w3 * self.value


@dataclass(frozen=True)
class IndexSeries:
    anchors: tuple
    values: tuple
    params: WeightParams
    kind: IntensityKind
    episode_source: str
    diagnostics: tuple  # per anchor: tuple of Contribution

    def __post_init__(self):
        if not (len(self.anchors) == len(self.values) == len(self.diagnostics)):
            raise ValidationError("index series fields differ in length")

    def __len__(self) -> int:
        return len(self.anchors)


def anchor_views(
    episode_set: EpisodeSet,
    m: int,
    schedule: EvaluationSchedule,
    kind: IntensityKind,
    season: Optional[Season] = None,
    edge: str = "truncate",
) -> List[List[EpisodeView]]:
    """Per-anchor truncated episode views; independent of (a, b, c, d).

    `season` overrides the episode set's own season for overlap counting
    (used by calibration stage 3). `edge="drop"` discards episodes not
    fully contained in the window instead of truncating them.
    """
    if edge not in ("truncate", "drop"):
        raise ValidationError(f"edge must be 'truncate' or 'drop', got {edge!r}")
    if m < 1:
        raise ValidationError("memory m must be >= 1")
    res = episode_set.resolution
    if season is None:
        season = episode_set.season

    views: List[List[EpisodeView]] = []
    for anchor in schedule.anchors:
        window_start = res.shift(anchor, -(m - 1))
        per_anchor: List[EpisodeView] = []
        for ep in episode_set.episodes:
            if ep.start_ts > anchor or ep.end_ts < window_start:
                continue
            if edge == "drop" and (ep.start_ts < window_start or ep.end_ts > anchor):
                continue
            # steps_between also validates that the episode grid and the
            # anchor are mutually aligned.
            offset_lo = max(0, res.steps_between(ep.start_ts, window_start))
            offset_hi = min(ep.n - 1, res.steps_between(ep.start_ts, anchor))
            if offset_hi < offset_lo:
                continue
            n_in = offset_hi - offset_lo + 1
            newest = res.shift(ep.start_ts, offset_hi)
            s = res.steps_between(newest, anchor) + 1
            truncated = n_in != ep.n
            if season is not None:
                member_ts = [res.shift(ep.start_ts, k) for k in range(offset_lo, offset_hi + 1)]
                tau_in = season_overlap_length(member_ts, season)
            else:
                tau_in = 0
            if kind == IntensityKind.PRECOMPUTED:
                # Stored per-episode intensity: used untruncated by design.
                val = intensity((), kind, precomputed=ep.intensity_mean, episode_id=ep.id)
            else:
                val = intensity(
                    ep.values[offset_lo : offset_hi + 1], kind, episode_id=ep.id
                )
            per_anchor.append(
                EpisodeView(
                    episode_id=ep.id, n=n_in, s=s, tau=tau_in, value=val,
                    truncated=truncated,
                )
            )
        views.append(per_anchor)
    return views


def combine(views: Sequence[Sequence[EpisodeView]], params: WeightParams):
    """Apply weights to precomputed views; returns (values, diagnostics)."""
    values = []
    diagnostics = []
    for per_anchor in views:
        contribs = []
        total = 0.0
        for v in per_anchor:
            f1 = w1_persistence(v.n, params)
            f2 = w2_recency(min(v.s, params.m), params)
            f3 = w3_timing(v.tau, v.n, params)
            contribs.append(
                Contribution(
                    episode_id=v.episode_id, n=v.n, s=v.s, tau=v.tau,
                    value=v.value, truncated=v.truncated, w1=f1, w2=f2, w3=f3,
                )
            )
            total += f1 * f2 * f3 * v.value
        values.append(total)
        diagnostics.append(tuple(contribs))
    return values, diagnostics


def evaluate(
    episode_set: EpisodeSet,
    params: WeightParams,
    kind: IntensityKind,
    schedule: EvaluationSchedule,
    season: Optional[Season] = None,
    edge: str = "truncate",
    source_label: Optional[str] = None,
) -> IndexSeries:
    """Evaluate the weighted episodic index at every anchor of the schedule.

    An anchor whose window contains no episode members contributes 0.
    """
    views = anchor_views(episode_set, params.m, schedule, kind, season=season, edge=edge)
    values, diagnostics = combine(views, params)
    return IndexSeries(
        anchors=tuple(schedule.anchors),
        values=tuple(values),
        params=params,
        kind=kind,
        episode_source=source_label or episode_set.source,
        diagnostics=tuple(diagnostics),
    )


def write_index(series: IndexSeries, path, resolution=None) -> None:
    fmt = resolution.format_timestamp if resolution else (lambda d: d.isoformat())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["anchor", "value", "K"])
        for anchor, value, diag in zip(series.anchors, series.values, series.diagnostics):
            writer.writerow([fmt(anchor), repr(float(value)), len(diag)])


def write_diagnostics(series: IndexSeries, path, resolution=None) -> None:
    fmt = resolution.format_timestamp if resolution else (lambda d: d.isoformat())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["anchor", "episode_id", "n", "s", "tau", "w1", "w2", "w3",
             "intensity", "term", "truncated"]
        )
        for anchor, diag in zip(series.anchors, series.diagnostics):
            for c in diag:
                writer.writerow(
                    [
                        fmt(anchor), c.episode_id, c.n, c.s, c.tau,
                        repr(float(c.w1)), repr(float(c.w2)), repr(float(c.w3)),
                        repr(float(c.value)), repr(float(c.term)),
                        "true" if c.truncated else "false",
                    ]
                )
