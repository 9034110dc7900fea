"""Importance-weight factors: persistence, recency, timing.

All three factors live in [0, 1] and combine multiplicatively. The recency
factor peaks where the episode's position in the memory equals the skew
parameter times the memory length.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError


class DegenerateTimingWarning(UserWarning):
    """d = 0 with timing enabled: every timing weight, hence the whole
    index, is identically zero."""


@dataclass(frozen=True)
class WeightParams:
    """Calibration vector (m, a, b, c, d) plus the timing on/off switch.

    m: memory length in resolution units; a: persistence dampening;
    b: recency dampening; c: recency skew in [0, 1]; d: timing dampening.
    The recency normalization constant is derived, never stored.
    """

    m: int
    a: float = 0.0
    b: float = 0.0
    c: float = 0.5
    d: float = 1.0
    timing_enabled: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("memory m must be >= 1")
        if self.a < 0 or self.b < 0 or self.d < 0:
            raise ValidationError("a, b and d must be >= 0")
        if not (0.0 <= self.c <= 1.0):
            raise ValidationError("c must lie in [0, 1]")
        if self.timing_enabled and self.d == 0:
            warnings.warn(
                "d = 0 with timing enabled makes every timing weight zero; "
                "the index will vanish identically",
                DegenerateTimingWarning,
                stacklevel=2,
            )

    def with_(self, **changes) -> "WeightParams":
        return replace(self, **changes)


def _xlogx(x: float) -> float:
    # x log x with the 0^0 = 1 convention (limit value 0).
    return 0.0 if x == 0.0 else x * math.log(x)


def recency_scale(c: float) -> float:
    """Normalizing constant 1 / (c^c (1-c)^(1-c)); makes the recency peak 1."""
    return math.exp(-(_xlogx(c) + _xlogx(1.0 - c)))


def nu_profile(r, c: float):
    """Normalized recency profile at real relative position r in [0, 1].

    Peaks (value 1) at r = c; degenerates to 1 - r at c = 0 and to r at
    c = 1 (0^0 := 1 throughout).
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0) or np.any(r_arr > 1.0):
        raise ValidationError("relative position outside [0, 1]")
    # numpy evaluates 0.0 ** 0.0 as 1.0, matching the convention
    out = recency_scale(c) * r_arr**c * (1.0 - r_arr) ** (1.0 - c)
    return float(out) if np.isscalar(r) else out


def nu(s, params: WeightParams):
    """Recency profile at integer positions s in [1, m], 1 = most recent."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 1) or np.any(s_arr > params.m):
        raise ValidationError(f"position s outside [1, m={params.m}]")
    out = nu_profile(s_arr / params.m, params.c)
    return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out


def w1_persistence(n, params: WeightParams):
    """exp(-a (1 - n/m)): low weight on short episodes, 1 at n = m or a = 0.

    Durations longer than the memory are clamped to m (the evaluation
    window truncates such episodes anyway).
    """
    n_arr = np.minimum(np.asarray(n, dtype=float), params.m)
    if np.any(n_arr < 1):
        raise ValidationError("duration n must be >= 1")
    out = np.exp(-params.a * (1.0 - n_arr / params.m))
    return float(out) if np.isscalar(n) else out


def w2_recency(s, params: WeightParams):
    """exp(-b (1 - nu(s))): equals 1 at the recency peak, floored at exp(-b)."""
    out = np.exp(-params.b * (1.0 - nu(s, params)))
    return float(out) if np.isscalar(s) else out


def w3_timing(tau, n, params: WeightParams):
    """1 - exp(-d tau/n): zero without season overlap, saturating in tau/n.

    Returns 1 identically while timing is disabled (stage 1/2 semantics).
    """
    tau_arr = np.asarray(tau, dtype=float)
    n_arr = np.asarray(n, dtype=float)
    if np.any(tau_arr < 0) or np.any(tau_arr > n_arr):
        raise ValidationError("overlap tau must lie in [0, n]")
    if not params.timing_enabled:
        out = np.ones_like(tau_arr)
    else:
        out = 1.0 - np.exp(-params.d * tau_arr / n_arr)
    return float(out) if np.isscalar(tau) else out


def combined_weight(n, s, tau, params: WeightParams):
    """Product w1 * w2 * w3 for one episode view (or arrays of views)."""
    return (
        w1_persistence(n, params)
        * w2_recency(s, params)
        * w3_timing(tau, n, params)
    )
