"""Loading and preparing cumulative daily series.

Differences are stored as float arrays with ``nan`` at the positions where
they are undefined (index 0 for first differences, both ends for central
second differences).
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "EmptySelectionError",
    "MalformedDataError",
    "RawSeries",
    "SeriesFrame",
    "UnknownColumnError",
    "central_second_differences",
    "first_differences",
    "load_csv",
    "moving_average",
    "noise_sigma",
]

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Base class for input-data problems."""


class UnknownColumnError(DataError):
    pass


class EmptySelectionError(DataError):
    pass


class MalformedDataError(DataError):
    """A date or number cell could not be parsed."""


@dataclass(frozen=True)
class RawSeries:
    dates: tuple
    values: np.ndarray


def _parse_date(text):
    try:
        return dt.date.fromisoformat(text.strip()[:10])
    except (ValueError, AttributeError):
        raise MalformedDataError(f"not an ISO date: {text!r}") from None


def _parse_number(text, line):
    try:
        return float(text)
    except ValueError:
        raise MalformedDataError(f"line {line}: not a number: {text!r}") from None


def load_csv(path, location=None, date_column="date", value_column="total_deaths",
             date_range=None, location_column="location"):
    """Read one location's dated cumulative series from a CSV file.

    Parameters
    ----------
    path : str or Path
        CSV with a header row, ISO-8601 dates and ``.`` decimal points.
    location : str, optional
        Keep rows whose ``location_column`` equals this value. ``None`` keeps
        every row (single-location files).
    date_range : (date, date), optional
        Inclusive bounds; strings are parsed as ISO dates.

    Returns
    -------
    RawSeries
        One value per calendar day, sorted. Days missing from the file, and
        empty cells, take the previous day's cumulative value.

    Raises
    ------
    FileNotFoundError
    UnknownColumnError
    EmptySelectionError
    MalformedDataError
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    lo = hi = None
    if date_range is not None:
        lo, hi = (d if isinstance(d, dt.date) else _parse_date(d) for d in date_range)

    rows = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = [date_column, value_column] + ([location_column] if location is not None else [])
        for col in needed:
            if col not in header:
                raise UnknownColumnError(f"column {col!r} not in {path.name} (have: {', '.join(header)})")
        for rec in reader:
            if location is not None and rec[location_column] != location:
                continue
            day = _parse_date(rec[date_column])
            if (lo is not None and day < lo) or (hi is not None and day > hi):
                continue
            cell = (rec[value_column] or "").strip()
            rows[day] = _parse_number(cell, reader.line_num) if cell else None

    if not rows:
        raise EmptySelectionError(f"no rows for location={location!r} in {path.name}")

    first, last = min(rows), max(rows)
    dates, values = [], []
    current = None
    day = first
    while day <= last:
        v = rows.get(day)
        if v is None:
            if day not in rows:
                log.info("missing day %s forward-filled", day)
            v = current if current is not None else np.nan
        current = v
        dates.append(day)
        values.append(v)
        day += dt.timedelta(days=1)
    values = np.array(values, dtype=float)
    if np.all(np.isnan(values)):
        raise EmptySelectionError(f"no values in column {value_column!r} for location={location!r}")
    # leading blanks before the first reported value count as zero deaths
    values = np.where(np.isnan(values), 0.0, values)
    return RawSeries(tuple(dates), values)


def moving_average(values, window=7):
    """Trailing moving average; the first ``window - 1`` points use shorter windows."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(values, dtype=float)
    if window > len(x):
        raise ValueError("window longer than series")
    out = np.empty_like(x)
    for n in range(min(window - 1, len(x))):
        out[n] = x[: n + 1].mean()
    if len(x) >= window:
        out[window - 1:] = np.lib.stride_tricks.sliding_window_view(x, window).mean(axis=1)
    return out


def first_differences(values):
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        raise ValueError("first differences need at least 2 values")
    out = np.full_like(x, np.nan)
    out[1:] = x[1:] - x[:-1]
    return out


def central_second_differences(values):
    """``y[n+1] - 2 y[n] + y[n-1]``, undefined at both ends."""
    x = np.asarray(values, dtype=float)
    if len(x) < 3:
        raise ValueError("second differences need at least 3 values")
    out = np.full_like(x, np.nan)
    out[1:-1] = x[2:] - 2.0 * x[1:-1] + x[:-2]
    return out


def noise_sigma(values, order=6) -> float:
    """Robust estimate of white-noise standard deviation in ``values``.

    Smooth trends are annihilated by a high-order difference, so the MAD of
    ``diff(values, order)`` rescaled by ``sqrt(comb(2 order, order))`` tracks
    the noise alone. Correlated noise (e.g. after smoothing) is underestimated.
    """
    x = np.asarray(values, dtype=float)
    if len(x) <= order + 1:
        raise ValueError(f"need more than {order + 1} values")
    d = np.diff(x, n=order)
    mad = np.median(np.abs(d - np.median(d)))
    return float(1.4826 * mad / math.sqrt(math.comb(2 * order, order)))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SeriesFrame:
    """Dated cumulative series with its smoothed values and differences."""

    dates: tuple
    cumulative: np.ndarray
    smoothed: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    window: int = 7

    @classmethod
    def from_values(cls, values, dates=None, window=7):
        values = np.asarray(values, dtype=float)
        if dates is None:
            dates = tuple(range(len(values)))
        else:
            dates = tuple(dates)
            if len(dates) != len(values):
                raise ValueError("dates and values differ in length")
            for prev, cur in zip(dates, dates[1:]):
                if isinstance(prev, dt.date) and cur - prev != dt.timedelta(days=1):
                    raise ValueError(f"dates not contiguous at {prev} -> {cur}")
        drops = np.flatnonzero(np.diff(values) < 0)
        if drops.size:
            log.warning("cumulative series decreases at %d of %d steps (first at index %d)",
                        drops.size, len(values) - 1, drops[0] + 1)
        smoothed = moving_average(values, window)
        return cls(
            dates=dates,
            cumulative=_frozen(values),
            smoothed=_frozen(smoothed),
            d1=_frozen(first_differences(smoothed)),
            d2=_frozen(central_second_differences(smoothed)),
            window=window,
        )

    @classmethod
    def from_raw(cls, raw: RawSeries, window=7):
        return cls.from_values(raw.values, raw.dates, window)

    def __len__(self):
        return len(self.cumulative)
