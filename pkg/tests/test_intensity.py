import math

import pytest
from hypothesis import given, strategies as st

from impit.errors import ConfigError, DomainError, ValidationError
from impit.intensity import IntensityKind, intensity

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_mean_constant():
    assert intensity([9, 9, 9], IntensityKind.MEAN) == 9.0


def test_log_sum_closed_form():
    assert intensity([1.0, math.e - 1.0], IntensityKind.LOG_SUM) == pytest.approx(1.0, rel=1e-12)


def test_log_sum_negative_sum_rejected():
    with pytest.raises(DomainError, match="log_sum"):
        intensity([-9, -10], IntensityKind.LOG_SUM, episode_id=3)


def test_median_even_uses_central_mean():
    assert intensity([1, 2, 3, 10], IntensityKind.MEDIAN) == 2.5


def test_min_max_sum():
    vals = [3.0, -1.0, 7.0]
    assert intensity(vals, IntensityKind.MIN) == -1.0
    assert intensity(vals, IntensityKind.MAX) == 7.0
    assert intensity(vals, IntensityKind.SUM) == 9.0


def test_precomputed():
    assert intensity([], IntensityKind.PRECOMPUTED, precomputed=2.5) == 2.5
    with pytest.raises(ConfigError):
        intensity([1.0], IntensityKind.PRECOMPUTED)


def test_empty_rejected():
    with pytest.raises(ValidationError):
        intensity([], IntensityKind.MEAN)


def test_parse():
    assert IntensityKind.parse("log_sum") is IntensityKind.LOG_SUM
    with pytest.raises(ValidationError):
        IntensityKind.parse("geometric_mean")


@given(values=st.lists(finite, min_size=1, max_size=30), shift=finite)
def test_translation_equivariance(values, shift):
    for kind in (IntensityKind.MEAN, IntensityKind.MEDIAN, IntensityKind.MIN, IntensityKind.MAX):
        base = intensity(values, kind)
        moved = intensity([v + shift for v in values], kind)
        assert moved == pytest.approx(base + shift, abs=1e-6)


@given(values=st.lists(finite, min_size=1, max_size=30))
def test_bounds(values):
    lo = intensity(values, IntensityKind.MIN)
    hi = intensity(values, IntensityKind.MAX)
    assert lo <= intensity(values, IntensityKind.MEAN) <= hi
    assert lo <= intensity(values, IntensityKind.MEDIAN) <= hi


@given(values=st.lists(st.floats(0.001, 1e6), min_size=1, max_size=30))
def test_log_sum_exp_inverse(values):
    got = intensity(values, IntensityKind.LOG_SUM)
    assert math.exp(got) == pytest.approx(sum(values), rel=1e-12)
