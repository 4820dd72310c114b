"""Synthetic sums of logistic waves, for tests and demonstration fixtures."""
from __future__ import annotations

import csv
import datetime as dt

import numpy as np

from .decompose import LogisticWave, model_eval

__all__ = ["DEFAULT_START", "synthesize", "write_csv"]

DEFAULT_START = dt.date(2020, 2, 28)


def synthesize(waves, n_days=200, sigma=0.0, seed=None):
    """Sample ``sum_i x_i / (1 + exp(-(n - b_i) / a_i))`` at days ``0 .. n_days - 1``.

    Parameters
    ----------
    waves : iterable of LogisticWave or (x_max, a, b) triples
    sigma : float
        Standard deviation of additive white Gaussian noise.
    seed : int, optional
        Seed for :func:`numpy.random.default_rng`.
    """
    ws = [w if isinstance(w, LogisticWave) else LogisticWave(*map(float, w)) for w in waves]
    t = np.arange(n_days, dtype=float)
    y = np.asarray(model_eval(ws, t), dtype=float) if ws else np.zeros(n_days)
    if sigma:
        y = y + np.random.default_rng(seed).normal(0.0, sigma, n_days)
    return y


def write_csv(path, values, start=DEFAULT_START, location="Synthetic",
              value_column="total_deaths"):
    """Write an OWID-shaped CSV (``location,date,<value_column>``)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["location", "date", value_column])
        for k, v in enumerate(values):
            w.writerow([location, (start + dt.timedelta(days=k)).isoformat(), repr(float(v))])
