"""Association analysis: alignment, Pearson correlation with significance,
least-squares line, and a centered moving-average smoother.

Significance is two-sided; the p-value comes from the exact Student-t
relationship through the regularized incomplete beta function. No
multiple-comparison adjustment is applied (the calibration report carries
the number of grid cells evaluated so users can adjust themselves).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .errors import IngestError, UndefinedCorrelationError, ValidationError
from .index import IndexSeries
from .timeline import Date


@dataclass(frozen=True)
class ResponseSeries:
    """Observed response variable (catch rate, yield, ...) at its own dates."""

    timestamps: tuple
    values: tuple
    transform: str = "none"  # "none" | "log"
    label: str = "response"

    def __post_init__(self):
        if len(self.timestamps) != len(self.values):
            raise ValidationError("response timestamps/values differ in length")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if b <= a:
                raise ValidationError(f"response timestamps not increasing at {b}")
        if self.transform not in ("none", "log"):
            raise ValidationError(f"unknown transform {self.transform!r}")
        if self.transform == "log" and any(v <= 0 for v in self.values):
            raise ValidationError("log transform requires strictly positive values")

    def transformed_values(self) -> Tuple[float, ...]:
        if self.transform == "log":
            return tuple(math.log(v) for v in self.values)
        return self.values


def load_response(path, transform: str = "none", label: Optional[str] = None) -> ResponseSeries:
    """Read a response CSV with `timestamp,value` columns (ISO or YYYY / YYYY-MM dates)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"timestamp", "value"} <= set(reader.fieldnames):
            raise IngestError(f"{path}: response CSV needs 'timestamp' and 'value' columns")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((_parse_loose_date(row["timestamp"]), float(row["value"])))
            except (ValueError, TypeError) as exc:
                raise IngestError(f"{path}:{lineno}: malformed row: {exc}") from exc
    rows.sort(key=lambda r: r[0])
    return ResponseSeries(
        timestamps=tuple(t for t, _ in rows),
        values=tuple(v for _, v in rows),
        transform=transform,
        label=label or str(path),
    )


def _parse_loose_date(text: str) -> Date:
    import datetime as dt

    text = text.strip()
    parts = text.split("-")
    if len(parts) == 1:
        return dt.date(int(parts[0]), 1, 1)
    if len(parts) == 2:
        return dt.date(int(parts[0]), int(parts[1]), 1)
    return dt.date.fromisoformat(text)


@dataclass(frozen=True)
class JoinReport:
    pairs: tuple  # ((x, y), ...) ordered by time
    timestamps: tuple
    dropped_left: int  # unmatched index anchors
    dropped_right: int  # unmatched response points


def align(index: IndexSeries, response: ResponseSeries, tolerance_steps: int = 0,
          resolution=None) -> JoinReport:
    """Exact-timestamp join of index anchors against response observations.

    With `tolerance_steps` > 0 (and a resolution), a response point within
    that many grid steps of an anchor matches the nearest anchor.
    """
    resp_vals = dict(zip(response.timestamps, response.transformed_values()))
    pairs = []
    stamps = []
    matched_resp = set()
    for anchor, value in zip(index.anchors, index.values):
        hit = None
        if anchor in resp_vals:
            hit = anchor
        elif tolerance_steps > 0 and resolution is not None:
            for k in range(1, tolerance_steps + 1):
                for cand in (resolution.shift(anchor, -k), resolution.shift(anchor, k)):
                    if cand in resp_vals and cand not in matched_resp:
                        hit = cand
                        break
                if hit:
                    break
        if hit is not None and hit not in matched_resp:
            matched_resp.add(hit)
            pairs.append((float(value), float(resp_vals[hit])))
            stamps.append(anchor)
    if len(pairs) < 3:
        raise ValidationError(
            f"only {len(pairs)} matched pairs; need at least 3 "
            f"(index {len(index)} anchors vs {len(response.timestamps)} response points)"
        )
    return JoinReport(
        pairs=tuple(pairs),
        timestamps=tuple(stamps),
        dropped_left=len(index) - len(pairs),
        dropped_right=len(response.timestamps) - len(pairs),
    )


@dataclass(frozen=True)
class AssociationResult:
    r: float
    p: float
    n: int
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "r": self.r, "p": self.p, "n": self.n,
            "slope": self.slope, "intercept": self.intercept,
            "r_squared": self.r_squared,
        }


def t_pvalue(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t via the regularized
    incomplete beta function."""
    if df < 1:
        raise ValidationError("degrees of freedom must be >= 1")
    t = float(t)
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def pearson(pairs: Sequence[Tuple[float, float]]) -> AssociationResult:
    """Sample Pearson r with two-sided p, plus the least-squares line."""
    n = len(pairs)
    if n < 3:
        raise ValidationError(f"need at least 3 pairs, got {n}")
    x = np.asarray([p[0] for p in pairs], dtype=float)
    y = np.asarray([p[1] for p in pairs], dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError(
            "correlation undefined: " + ("x" if sxx == 0.0 else "y") + " is constant"
        )
    sxy = float(dx @ dy)
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = t_pvalue(t, n - 2)
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    return AssociationResult(
        r=r, p=p, n=n, slope=slope, intercept=intercept, r_squared=r * r
    )


def moving_average(series: Sequence[Tuple], window: int) -> List[Tuple]:
    """Centered moving average; endpoints use shrunken one-sided windows.

    Window must be odd and no longer than the series; length is preserved.
    """
    if window % 2 == 0:
        raise ValidationError("window must be odd")
    if window < 1 or window > len(series):
        raise ValidationError("window must be in [1, series length]")
    half = window // 2
    values = [float(v) for _, v in series]
    out = []
    for i, (t, _) in enumerate(series):
        chunk = values[max(0, i - half) : min(len(values), i + half + 1)]
        out.append((t, sum(chunk) / len(chunk)))
    return out
