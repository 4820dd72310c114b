"""Discrete wavelet transform of a second-difference series and peak picking.

The transform is a plain sum over integer days,

    C(a, b) = sum_n d2[n] * psi^{a,b}(n),

restricted to ``|n - b| <= 7 a`` and to the samples that exist. Nothing is
padded at the series edges.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .wavelets import LogisticWavelet, logistic_derivative

__all__ = ["Peak", "RidgeReading", "ScaleGrid", "Scalogram", "coefficient_noise", "cwt", "find_peaks",
           "index_at", "read_ridge", "SUPPORT"]

SUPPORT = 7.0


@dataclass(frozen=True)
class ScaleGrid:
    a_min: float = 1.0
    a_max: float = 40.0
    a_step: float = 0.1
    b_values: tuple | None = None

    def __post_init__(self):
        if self.a_min < 0.5:
            raise ValueError("a_min must be >= 0.5")
        if not self.a_step > 0:
            raise ValueError("a_step must be positive")
        if not self.a_min < self.a_max:
            raise ValueError("a_min must be < a_max")

    @classmethod
    def parse(cls, spec: str, **kw):
        """Build from ``"min:max:step"``."""
        try:
            lo, hi, step = (float(p) for p in spec.split(":"))
        except ValueError:
            raise ValueError(f"scale spec must be min:max:step, got {spec!r}") from None
        return cls(lo, hi, step, **kw)

    @property
    def spec(self) -> str:
        return f"{self.a_min:g}:{self.a_max:g}:{self.a_step:g}"

    @property
    def scales(self) -> np.ndarray:
        count = int(math.floor((self.a_max - self.a_min) / self.a_step + 1e-9)) + 1
        return np.round(self.a_min + self.a_step * np.arange(count), 10)

    def with_days(self, n_days: int) -> "ScaleGrid":
        return ScaleGrid(self.a_min, self.a_max, self.a_step, tuple(range(n_days)))


@dataclass(frozen=True)
class Peak:
    a: float
    b: float
    index_value: float


@dataclass(frozen=True)
class Scalogram:
    grid: ScaleGrid
    coefficients: np.ndarray = field(repr=False)
    source_length: int
    wavelet_order: int = 2

    @property
    def scales(self) -> np.ndarray:
        return self.grid.scales

    @property
    def b_values(self) -> np.ndarray:
        return np.asarray(self.grid.b_values, dtype=float)

    def to_long_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "b", "coefficient"])
            for i, a in enumerate(self.scales):
                for j, b in enumerate(self.grid.b_values):
                    w.writerow([f"{a:.10g}", b, repr(float(self.coefficients[i, j]))])

    def metadata(self) -> dict:
        return {
            "scales": self.grid.spec,
            "a_min": self.grid.a_min,
            "a_max": self.grid.a_max,
            "a_step": self.grid.a_step,
            "n_scales": int(self.coefficients.shape[0]),
            "b_min": int(self.grid.b_values[0]),
            "b_max": int(self.grid.b_values[-1]),
            "n_days": int(self.coefficients.shape[1]),
            "source_length": self.source_length,
            "wavelet_order": self.wavelet_order,
            "support": SUPPORT,
        }

    def to_json(self, path, extra=None):
        doc = {"grid": self.metadata(), "coefficients": self.coefficients.tolist()}
        if extra:
            doc.update(extra)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")


def cwt(d2, wavelet_order=2, grid=None, backend=None) -> Scalogram:
    """Transform a second-difference series; ``nan`` entries are skipped.

    Parameters
    ----------
    d2 : array_like
        Second differences, ``nan`` where undefined.
    wavelet_order : int
        Order of the logistic mother wavelet (2 for growth-wave analysis).
    grid : ScaleGrid, optional
        Scale range; ``b_values`` default to every day of the series.
    backend : {"numba", "numpy"}, optional
        Overrides the module default chosen from ``LOGIWAVE_DISABLE_NUMBA``.
    """
    d2 = np.asarray(d2, dtype=float)
    if d2.ndim != 1 or len(d2) < 3:
        raise ValueError("d2 must be a 1-D series of length >= 3")
    valid = ~np.isnan(d2)
    if not valid.any():
        raise ValueError("d2 has no valid samples")
    grid = grid or ScaleGrid()
    if grid.b_values is None:
        grid = grid.with_days(len(d2))
    if len(grid.b_values) == 0 or len(grid.scales) == 0:
        raise ValueError("empty scale grid")
    w = LogisticWavelet(wavelet_order)
    coeffs = _kernels.cwt_matrix(
        np.where(valid, d2, 0.0), valid, grid.scales, np.asarray(grid.b_values, dtype=float),
        w.coefficients, SUPPORT, backend,
    )
    return Scalogram(grid, coeffs, len(d2), wavelet_order)


def coefficient_noise(scales, sigma=1.0, wavelet_order=2) -> np.ndarray:
    """Standard deviation of ``C(a, b)`` per scale when the cumulative series
    carries white noise of standard deviation ``sigma``.

    Summing by parts, ``C(a, b) = sum_n y[n] (D2 psi^{a,b})(n)`` with ``D2``
    the second difference, so the deviation is ``sigma`` times the l2 norm of
    the twice-differenced sampled child wavelet (taken at an interior ``b``).
    """
    coeffs = LogisticWavelet(wavelet_order).coefficients
    out = np.empty(len(scales))
    for i, a in enumerate(np.asarray(scales, dtype=float)):
        reach = int(math.floor(SUPPORT * a))
        n = np.arange(-reach - 1, reach + 2, dtype=float)
        psi = _kernels.psi_values(n / a, coeffs) / math.sqrt(a)
        psi[np.abs(n) > SUPPORT * a] = 0.0
        out[i] = math.sqrt(float(np.sum(np.diff(psi, 2) ** 2)))
    return sigma * out


def find_peaks(s: Scalogram, threshold_fraction=0.08, min_separation_days=5.0, noise_floor=None,
               cone=None) -> list[Peak]:
    """Positive strict local maxima of the scalogram, strongest first.

    A cell qualifies when it exceeds all of its (up to 8) neighbours, is
    positive and is at least ``threshold_fraction`` of the global maximum.
    ``noise_floor`` (one value per scale) additionally rejects cells below it,
    and ``cone`` rejects cells with ``b`` closer than ``cone * a`` to either
    end of the source series (outside the cone of influence).
    Candidates closer than ``min_separation_days`` in ``b`` to a stronger
    accepted peak are dropped.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    c = s.coefficients
    if c.size == 0:
        return []
    gmax = c.max()
    if not gmax > 0:
        return []
    padded = np.pad(c, 1, constant_values=-np.inf)
    centre = padded[1:-1, 1:-1]
    is_max = np.ones_like(c, dtype=bool)
    rows, cols = c.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = padded[1 + di: 1 + di + rows, 1 + dj: 1 + dj + cols]
            is_max &= centre > nb
    is_max &= (c > 0) & (c >= threshold_fraction * gmax)
    if noise_floor is not None:
        is_max &= c >= np.asarray(noise_floor, dtype=float)[:, None]
    if cone is not None:
        reach = cone * s.scales[:, None]
        bs = s.b_values[None, :]
        is_max &= (bs - reach >= 0) & (bs + reach <= s.source_length - 1)
    ii, jj = np.nonzero(is_max)
    order = np.lexsort((jj, ii, -c[ii, jj]))
    scales, bs = s.scales, s.b_values
    accepted: list[Peak] = []
    for k in order:
        b = float(bs[jj[k]])
        if any(abs(b - p.b) < min_separation_days for p in accepted):
            continue
        accepted.append(Peak(float(scales[ii[k]]), b, float(c[ii[k], jj[k]])))
    return accepted


def index_at(s: Scalogram, a: float, b: float) -> float:
    """Coefficient at the grid node nearest to ``(a, b)``."""
    scales, bs = s.scales, s.b_values
    step = s.grid.a_step
    if not (scales[0] - step / 2 <= a <= scales[-1] + step / 2 and bs[0] - 0.5 <= b <= bs[-1] + 0.5):
        raise ValueError(f"(a={a}, b={b}) outside the scalogram grid")
    i = int(np.argmin(np.abs(scales - a)))
    j = int(np.argmin(np.abs(bs - b)))
    return float(s.coefficients[i, j])


@lru_cache(maxsize=None)
def _width_table():
    # For a logistic wave of scale a0 seen at scale a' = r a0, the scalogram
    # row C(a', .) is positive on (b0 - z a', b0 + z a'). z(r) is the first
    # positive root of G(r, z) = int x''(u) psi(u / r - z) du, found by
    # bisection for all r at once.
    u = np.linspace(-40.0, 40.0, 1601)
    x2 = logistic_derivative(2, u)[None, :]
    coeffs = LogisticWavelet(2).coefficients
    ratios = np.linspace(0.35, 3.0, 266)
    lo = np.full_like(ratios, 0.5)
    hi = np.full_like(ratios, 8.0)

    def g(z):
        return np.sum(x2 * _kernels.psi_values(u[None, :] / ratios[:, None] - z[:, None], coeffs), axis=1)

    assert np.all(g(lo) > 0) and np.all(g(hi) < 0)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return ratios, 0.5 * (lo + hi)


@dataclass(frozen=True)
class RidgeReading:
    """Wave parameters read off one scalogram row.

    ``a`` and ``b`` come from the zero crossings of the row around the peak
    (sub-grid, continuous values); ``index_value`` is the interpolated row
    maximum at the row closest to ``a``.
    """

    a: float
    b: float
    index_value: float


def _row_crossings(row, j):
    n = len(row)
    lo = j
    while lo > 0 and row[lo - 1] > 0:
        lo -= 1
    hi = j
    while hi < n - 1 and row[hi + 1] > 0:
        hi += 1
    if lo == 0 or hi == n - 1:
        return None
    left = lo - 1 + row[lo - 1] / (row[lo - 1] - row[lo])
    right = hi + row[hi] / (row[hi] - row[hi + 1])
    return left, right


def _row_peak(row, j):
    # parabola through the three cells around j
    if 0 < j < len(row) - 1:
        c0, c1, c2 = row[j - 1], row[j], row[j + 1]
        den = c0 - 2 * c1 + c2
        if den < 0:
            shift = 0.5 * (c0 - c2) / den
            if abs(shift) <= 1:
                return float(c1 - 0.25 * (c0 - c2) * shift)
    return float(row[j])


def read_ridge(s: Scalogram, a: float, b: float, sweeps=2):
    """Estimate ``(a, b, Index)`` of a logistic wave near the node ``(a, b)``.

    The Index ridge of a logistic wave is very flat in ``a``, so the location
    of its maximum is easily displaced by noise. The positive lobe of a row
    ``C(a', .)`` has half-width ``z(a'/a0) a'`` with a known, steep function
    ``z``; inverting the measured width gives ``a0``. ``b`` is the midpoint of
    the two zero crossings. Returns ``None`` when the lobe is cut off by the
    edge of the scalogram.
    """
    scales, bs = s.scales, s.b_values
    ratios, half = _width_table()
    i = int(np.argmin(np.abs(scales - a)))
    j = int(np.argmin(np.abs(bs - b)))
    est_a = est_b = None
    for _ in range(sweeps):
        row = s.coefficients[i]
        if not row[j] > 0:
            return None
        cross = _row_crossings(row, j)
        if cross is None:
            return None
        left, right = cross
        step = float(bs[1] - bs[0]) if len(bs) > 1 else 1.0
        width = 0.5 * (right - left) * step / scales[i]
        if not half[-1] <= width <= half[0]:
            return None
        r = float(np.interp(width, half[::-1], ratios[::-1]))
        est_a = float(scales[i] / r)
        est_b = float(bs[0] + 0.5 * (left + right) * step)
        i = int(np.argmin(np.abs(scales - est_a)))
        j = int(np.clip(round((est_b - bs[0]) / step), 0, len(bs) - 1))
    row = s.coefficients[i]
    j = int(np.clip(j, 0, len(row) - 1))
    # walk to the row maximum near the lobe centre
    while j > 0 and row[j - 1] > row[j]:
        j -= 1
    while j < len(row) - 1 and row[j + 1] > row[j]:
        j += 1
    return RidgeReading(est_a, est_b, _row_peak(row, j))
