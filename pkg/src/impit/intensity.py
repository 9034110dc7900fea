"""Scalar intensity of an episode's member values."""

from __future__ import annotations

import math
from enum import Enum
from typing import Optional, Sequence

from .errors import ConfigError, DomainError, ValidationError


class IntensityKind(str, Enum):
    MEAN = "mean"
    LOG_SUM = "log_sum"
    MEDIAN = "median"
    MIN = "min"
    MAX = "max"
    SUM = "sum"
    PRECOMPUTED = "precomputed"

    @classmethod
    def parse(cls, text: str) -> "IntensityKind":
        try:
            return cls(text)
        except ValueError as exc:
            raise ValidationError(
                f"unknown intensity kind {text!r} "
                f"(choose from {[k.value for k in cls]})"
            ) from exc


def intensity(
    values: Sequence[float],
    kind: IntensityKind,
    precomputed: Optional[float] = None,
    episode_id=None,
) -> float:
    """Collapse member values to one number.

    log_sum is the natural log of the sum and requires a strictly positive
    sum. `precomputed` returns the stored per-episode value (e.g. a mean
    temperature anomaly from an external event list) and ignores `values`.
    """
    if kind == IntensityKind.PRECOMPUTED:
        if precomputed is None:
            raise ConfigError(
                f"episode {episode_id}: no precomputed intensity stored"
            )
        return float(precomputed)

    if not values:
        raise ValidationError(f"episode {episode_id}: no member values")
    vals = [float(v) for v in values]

    if kind == IntensityKind.MEAN:
        return sum(vals) / len(vals)
    if kind == IntensityKind.SUM:
        return sum(vals)
    if kind == IntensityKind.MIN:
        return min(vals)
    if kind == IntensityKind.MAX:
        return max(vals)
    if kind == IntensityKind.MEDIAN:
        ordered = sorted(vals)
        mid = len(ordered) // 2
        if len(ordered) % 2:
            return ordered[mid]
        return 0.5 * (ordered[mid - 1] + ordered[mid])
    if kind == IntensityKind.LOG_SUM:
        total = sum(vals)
        if total <= 0:
            raise DomainError(
                f"episode {episode_id}: log_sum undefined, sum {total} <= 0"
            )
        return math.log(total)
    raise ValidationError(f"unknown intensity kind {kind!r}")
