import datetime as dt
import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from logiwave.numeric_core import logistic_unit_derivative
from logiwave.series import (EmptySelectionError, MalformedDataError, SeriesFrame, UnknownColumnError,
                             central_second_differences, first_differences, load_csv, moving_average,
                             noise_sigma)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def write(path, text):
    path.write_text(text)
    return path


@pytest.fixture
def gap_csv(tmp_path):
    return write(tmp_path / "gap.csv",
                 "location,date,total_deaths\n"
                 "Italy,2020-03-01,10\n"
                 "France,2020-03-01,99\n"
                 "Italy,2020-03-03,30\n"
                 "Italy,2020-03-02,20\n"
                 "Italy,2020-03-05,50\n")


def test_gap_is_forward_filled(gap_csv):
    raw = load_csv(gap_csv, "Italy")
    assert raw.dates == tuple(dt.date(2020, 3, d) for d in range(1, 6))
    assert list(raw.values) == [10, 20, 30, 30, 50]


def test_date_range_and_blank_cells(tmp_path):
    p = write(tmp_path / "b.csv", "date,total_deaths\n2020-01-01,\n2020-01-02,4\n2020-01-03,\n2020-01-04,9\n")
    raw = load_csv(p, date_range=("2020-01-02", "2020-01-03"))
    assert list(raw.values) == [4, 4]
    assert list(load_csv(p).values) == [0, 4, 4, 9]


def test_load_errors(tmp_path, gap_csv):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")
    with pytest.raises(UnknownColumnError):
        load_csv(gap_csv, "Italy", value_column="new_deaths")
    with pytest.raises(EmptySelectionError, match="no rows"):
        load_csv(gap_csv, "Spain")
    with pytest.raises(EmptySelectionError, match="no rows"):
        load_csv(gap_csv, "Italy", date_range=("2021-01-01", "2021-02-01"))
    bad = write(tmp_path / "bad.csv", "location,date,total_deaths\nItaly,2020-03-01,ten\n")
    with pytest.raises(MalformedDataError):
        load_csv(bad, "Italy")
    bad_date = write(tmp_path / "bad2.csv", "location,date,total_deaths\nItaly,03/01/2020,1\n")
    with pytest.raises(MalformedDataError):
        load_csv(bad_date, "Italy")


def test_moving_average_examples():
    assert np.allclose(moving_average(np.full(12, 3.5), 7), 3.5)
    imp = np.zeros(20)
    imp[8] = 7.0  # past the shorter warm-up windows
    out = moving_average(imp, 7)
    assert np.allclose(out[8:15], 1.0) and np.allclose(out[:8], 0) and np.allclose(out[15:], 0)
    assert np.allclose(moving_average(np.arange(10.0), 3), [0, 0.5, 1, 2, 3, 4, 5, 6, 7, 8])
    assert np.array_equal(moving_average(np.arange(5.0), 1), np.arange(5.0))
    with pytest.raises(ValueError):
        moving_average([1.0, 2.0], 0)
    with pytest.raises(ValueError):
        moving_average([1.0, 2.0], 3)


@given(arrays(float, 30, elements=finite), arrays(float, 30, elements=finite), finite, finite,
       st.integers(1, 30))
def test_moving_average_linear(x, y, alpha, beta, window):
    lhs = moving_average(alpha * x + beta * y, window)
    rhs = alpha * moving_average(x, window) + beta * moving_average(y, window)
    scale = 1.0 + np.abs(alpha * x).max() + np.abs(beta * y).max()
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * scale)


def test_differences_examples():
    d = first_differences([0.0, 1.0, 3.0, 6.0])
    assert np.isnan(d[0]) and list(d[1:]) == [1, 2, 3]
    assert np.all(first_differences(np.full(5, 2.0))[1:] == 0)
    d2 = central_second_differences(np.arange(10.0) * 3 + 1)
    assert np.isnan(d2[0]) and np.isnan(d2[-1]) and np.all(d2[1:-1] == 0)
    assert np.all(central_second_differences(np.arange(10.0) ** 2)[1:-1] == 2)
    with pytest.raises(ValueError):
        first_differences([1.0])
    with pytest.raises(ValueError):
        central_second_differences([1.0, 2.0])


@given(arrays(float, st.integers(2, 60), elements=st.integers(-10**6, 10**6).map(float)))
def test_difference_cumsum_round_trip(x):
    d = first_differences(x)
    back = np.concatenate([[x[0]], x[0] + np.cumsum(d[1:])])
    assert np.array_equal(back, x)


@given(arrays(float, st.integers(3, 60), elements=finite))
def test_second_difference_is_difference_of_differences(x):
    d1 = first_differences(x)
    d2 = central_second_differences(x)
    assert np.allclose(d2[1:-1], d1[2:] - d1[1:-1], rtol=0, atol=1e-9 * (1 + np.abs(x).max()))


def test_second_difference_of_logistic():
    n = np.arange(100.0)
    y = 1000.0 / (1.0 + np.exp(-0.2 * (n - 50)))
    exact = 1000.0 * 0.2**2 * logistic_unit_derivative(2, 0.2 * (n - 50))
    d2 = central_second_differences(y)
    assert np.max(np.abs(d2[1:-1] - exact[1:-1])) <= 0.02 * np.abs(exact).max()


def test_noise_sigma():
    rng = np.random.default_rng(3)
    n = np.arange(400.0)
    trend = 5e4 / (1 + np.exp(-(n - 200) / 15))
    est = noise_sigma(trend + rng.normal(0, 20, 400))
    assert est == pytest.approx(20, rel=0.15)
    assert noise_sigma(trend) < 0.05
    with pytest.raises(ValueError):
        noise_sigma(np.arange(7.0))


def test_series_frame(caplog):
    vals = np.array([0, 1, 3, 2, 6, 10, 15, 21, 28, 36], dtype=float)
    with caplog.at_level(logging.WARNING, logger="logiwave.series"):
        f = SeriesFrame.from_values(vals, window=3)
    assert "decreases at 1" in caplog.text
    assert len(f) == 10 and f.d1.shape == f.d2.shape == (10,)
    assert np.isnan(f.d1[0]) and np.isnan(f.d2[0]) and np.isnan(f.d2[-1])
    assert np.allclose(f.smoothed, moving_average(vals, 3))
    with pytest.raises(ValueError):
        f.smoothed[0] = 1.0
    dates = [dt.date(2020, 1, 1) + dt.timedelta(days=k) for k in range(10)]
    assert SeriesFrame.from_values(vals, dates, window=3).dates[0] == dates[0]
    with pytest.raises(ValueError, match="contiguous"):
        SeriesFrame.from_values(vals, dates[:5] + dates[6:] + [dt.date(2021, 1, 1)])


def test_frame_from_raw(gap_csv):
    f = SeriesFrame.from_raw(load_csv(gap_csv, "Italy"), window=2)
    assert list(f.smoothed) == [10, 15, 25, 30, 40]
