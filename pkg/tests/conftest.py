import datetime as dt

import numpy as np
import pytest

from impit.timeline import Resolution, Signal


def monthly_signal(values, start=dt.date(1990, 1, 1), name="sig"):
    res = Resolution.monthly()
    stamps = tuple(res.shift(start, i) for i in range(len(values)))
    return Signal(name=name, resolution=res, timestamps=stamps, values=tuple(float(v) for v in values))


def daily_signal(values, start=dt.date(1990, 1, 1), name="sig"):
    res = Resolution.daily()
    stamps = tuple(start + dt.timedelta(days=i) for i in range(len(values)))
    return Signal(name=name, resolution=res, timestamps=stamps, values=tuple(float(v) for v in values))


@pytest.fixture
def rng():
    return np.random.default_rng(20230815)


@pytest.fixture
def soi_like(rng):
    # monthly series with intermittent high/low excursions, 1988-2019
    n = 32 * 12
    base = rng.normal(0.0, 6.0, size=n)
    # inject a few sustained high runs
    for start, length, level in ((30, 7, 12.0), (95, 5, 10.0), (160, 9, 14.0), (300, 6, 11.0)):
        base[start : start + length] = level + rng.normal(0, 1.0, size=length)
    return monthly_signal(base, start=dt.date(1988, 1, 1), name="soi_like")
