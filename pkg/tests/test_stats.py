import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import gammaln

from impit.errors import UndefinedCorrelationError, ValidationError
from impit.index import IndexSeries
from impit.intensity import IntensityKind
from impit.stats import (
    ResponseSeries,
    align,
    load_response,
    moving_average,
    pearson,
    t_pvalue,
)
from impit.weights import WeightParams


def t_density(x, df):
    logc = gammaln((df + 1) / 2) - gammaln(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(logc) * (1 + x * x / df) ** (-(df + 1) / 2)


def two_sided_p_by_quadrature(t, df):
    tail, _ = integrate.quad(t_density, abs(t), np.inf, args=(df,))
    return 2 * tail


def index_series(anchors, values):
    return IndexSeries(
        anchors=tuple(anchors), values=tuple(values),
        params=WeightParams(m=1), kind=IntensityKind.MEAN,
        episode_source="test", diagnostics=tuple(() for _ in anchors),
    )


def years(start, n):
    return [dt.date(start + i, 12, 1) for i in range(n)]


class TestPearson:
    def test_perfect_line(self):
        pairs = [(x, 2 * x + 1) for x in range(10)]
        res = pearson(pairs)
        assert res.r == 1.0
        assert res.p == pytest.approx(0.0, abs=1e-12)
        assert res.slope == pytest.approx(2.0)
        assert res.intercept == pytest.approx(1.0)
        assert res.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_perfect_negative(self):
        pairs = [(x, -x) for x in range(8)]
        assert pearson(pairs).r == -1.0

    def test_t_table_anchor(self):
        # df = 10, t = 2.228 is the classic 5% two-sided critical value
        assert t_pvalue(2.228, 10) == pytest.approx(0.05, abs=5e-4)

    @pytest.mark.parametrize("df", [5, 10, 30])
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 3.0])
    def test_pvalue_matches_quadrature(self, df, t):
        assert t_pvalue(t, df) == pytest.approx(
            two_sided_p_by_quadrature(t, df), abs=1e-6
        )

    def test_constant_rejected(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([(1.0, y) for y in (1.0, 2.0, 3.0)])
        with pytest.raises(UndefinedCorrelationError):
            pearson([(x, 5.0) for x in (1.0, 2.0, 3.0)])

    def test_too_few(self):
        with pytest.raises(ValidationError):
            pearson([(0, 0), (1, 1)])

    @given(
        alpha=st.floats(0.01, 50),
        beta=st.floats(-100, 100),
        seed=st.integers(0, 2**16),
    )
    def test_affine_invariance(self, alpha, beta, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=12)
        y = rng.normal(size=12)
        base = pearson(list(zip(x, y)))
        pos = pearson(list(zip(alpha * x + beta, y)))
        neg = pearson(list(zip(-alpha * x + beta, y)))
        assert pos.r == pytest.approx(base.r, abs=1e-9)
        assert neg.r == pytest.approx(-base.r, abs=1e-9)

    def test_p_monotone_in_abs_r(self):
        rs = [0.1, 0.3, 0.5, 0.7, 0.9]
        n = 20
        ps = []
        for r in rs:
            t = r * math.sqrt((n - 2) / (1 - r * r))
            ps.append(t_pvalue(t, n - 2))
        assert ps == sorted(ps, reverse=True)


class TestAlign:
    def test_exact_join(self):
        anchors = years(1988, 31)
        idx = index_series(anchors, np.arange(31.0))
        resp = ResponseSeries(tuple(anchors), tuple(np.arange(31.0) * 2))
        join = align(idx, resp)
        assert len(join.pairs) == 31
        assert join.dropped_left == 0 and join.dropped_right == 0

    def test_intersection(self):
        idx = index_series(years(1993, 27), np.arange(27.0))
        resp = ResponseSeries(tuple(years(1988, 32)), tuple(np.arange(32.0) + 1))
        join = align(idx, resp)
        assert len(join.pairs) == 27
        assert join.dropped_right == 5

    def test_disjoint_errors(self):
        idx = index_series(years(1990, 5), np.arange(5.0))
        resp = ResponseSeries(tuple(years(2010, 5)), tuple(np.arange(5.0) + 1))
        with pytest.raises(ValidationError):
            align(idx, resp)

    def test_log_transform_applied(self):
        anchors = years(1990, 5)
        idx = index_series(anchors, [1, 2, 3, 4, 5])
        resp = ResponseSeries(tuple(anchors), (1.0, math.e, 1.0, 1.0, 1.0), transform="log")
        join = align(idx, resp)
        assert join.pairs[1][1] == pytest.approx(1.0)

    def test_log_requires_positive(self):
        with pytest.raises(ValidationError):
            ResponseSeries(tuple(years(1990, 3)), (1.0, -2.0, 3.0), transform="log")


class TestMovingAverage:
    def test_constant_identity(self):
        series = [(i, 4.2) for i in range(9)]
        assert [v for _, v in moving_average(series, 5)] == pytest.approx([4.2] * 9)

    def test_window_one_identity(self):
        series = [(i, float(i * i)) for i in range(6)]
        assert moving_average(series, 1) == series

    def test_shrunken_endpoints(self):
        series = list(zip(range(5), [1.0, 2.0, 3.0, 4.0, 5.0]))
        smoothed = [v for _, v in moving_average(series, 3)]
        assert smoothed == pytest.approx([1.5, 2.0, 3.0, 4.0, 4.5])

    def test_even_window_rejected(self):
        with pytest.raises(ValidationError):
            moving_average([(0, 1.0), (1, 2.0)], 2)


class TestLoadResponse:
    def test_year_only_dates(self, tmp_path):
        f = tmp_path / "r.csv"
        f.write_text("timestamp,value\n1990,3.5\n1991,4.0\n")
        resp = load_response(f)
        assert resp.timestamps[0] == dt.date(1990, 1, 1)
        assert resp.values == (3.5, 4.0)
