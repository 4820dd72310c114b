"""Decomposition of a cumulative series into a sum of logistic waves.

Each round transforms the second differences of the current residual,
takes the strongest qualifying scalogram peak ``(a, b)``, converts its Index
into a saturation level and subtracts that logistic wave. Overlapping waves
bias one another's peaks, so after every round all waves are re-read from
the series with the others removed (backfitting), and at the end from the
widths of their scalogram ridges. Amplitudes may then be re-fitted jointly
by nonnegative least squares with every ``(a, b)`` held fixed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cwt import ScaleGrid, coefficient_noise, cwt, find_peaks, read_ridge
from .numeric_core import expit
from .series import SeriesFrame, central_second_differences, noise_sigma

__all__ = [
    "DecompositionConfig",
    "DecompositionResult",
    "LogisticWave",
    "RankDeficiencyError",
    "WAVELENGTH_FACTOR",
    "backfit",
    "extract_waves",
    "model_eval",
    "refine_amplitudes",
    "ridge_correct",
    "rmse",
    "saturation_from_index",
    "subtract_wave",
    "wavelength",
]

log = logging.getLogger(__name__)

SQRT30 = math.sqrt(30.0)
# 2 * 3.66, where 3.66 ~ ln 39 is the distance from b to the 2.5% point in units of a
WAVELENGTH_FACTOR = 7.32


class RankDeficiencyError(np.linalg.LinAlgError):
    """Two or more waves are numerically indistinguishable on the sample grid."""


def saturation_from_index(a: float, index_value: float) -> float:
    """Saturation level ``sqrt(30) a**1.5 * Index`` of a wave with scale ``a``."""
    if not a > 0:
        raise ValueError("a must be positive")
    return SQRT30 * a**1.5 * index_value


def wavelength(a: float) -> float:
    if not a > 0:
        raise ValueError("a must be positive")
    return WAVELENGTH_FACTOR * a


@dataclass(frozen=True)
class LogisticWave:
    x_max: float
    a: float
    b: float
    index_value: float = float("nan")
    wavelength: float = field(init=False)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        object.__setattr__(self, "wavelength", wavelength(self.a))

    def __call__(self, t):
        return self.x_max * expit((np.asarray(t, dtype=float) - self.b) / self.a)

    def with_amplitude(self, x_max: float) -> "LogisticWave":
        return LogisticWave(x_max, self.a, self.b, self.index_value)

    def to_dict(self) -> dict:
        return {"x_max": self.x_max, "a": self.a, "b": self.b,
                "index": self.index_value, "wavelength": self.wavelength}


@dataclass(frozen=True)
class DecompositionConfig:
    max_waves: int = 6
    min_saturation: float | None = None
    threshold_fraction: float = 0.08
    min_separation: float = 5.0
    refine_amplitudes: bool = True
    backfit_passes: int = 8
    noise_significance: float = 5.0
    monotone_index: bool = False
    ridge_sweeps: int = 2
    cone: float | None = 3.0
    grid: ScaleGrid = ScaleGrid()

    def __post_init__(self):
        if self.max_waves < 1:
            raise ValueError("max_waves must be >= 1")
        if self.noise_significance < 0:
            raise ValueError("noise_significance must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = self.grid.spec
        return d


@dataclass
class DecompositionResult:
    waves: list
    residual: np.ndarray
    model_values: np.ndarray
    rmse: float
    iterations: int
    rmse_unrefined: float | None = None

    def to_dict(self) -> dict:
        return {
            "waves": [w.to_dict() for w in self.waves],
            "rmse": self.rmse,
            "rmse_unrefined": self.rmse_unrefined,
            "iterations": self.iterations,
        }


def model_eval(waves, t):
    """Sum of logistic waves at ``t`` (scalar or array)."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for w in waves:
        total = total + w(t)
    return total if total.ndim else float(total)


def rmse(observed, waves, t=None) -> float:
    """Root-mean-square deviation of the wave model from ``observed``.

    ``t`` defaults to the day indices ``0 .. len(observed) - 1``.
    """
    y = np.asarray(observed, dtype=float)
    t = np.arange(len(y), dtype=float) if t is None else np.asarray(t, dtype=float)
    if t.shape != y.shape:
        raise ValueError("observed and t differ in length")
    return float(np.sqrt(np.mean((y - model_eval(waves, t)) ** 2)))


def subtract_wave(values, w: LogisticWave):
    y = np.asarray(values, dtype=float)
    return y - w(np.arange(len(y), dtype=float))


def _values_of(frame_or_values):
    if isinstance(frame_or_values, SeriesFrame):
        return np.asarray(frame_or_values.smoothed)
    return np.asarray(frame_or_values, dtype=float)


def _nnls(A, y, max_iter=None):
    # Lawson-Hanson active set: move the column with the largest gradient into
    # the passive set, step back along the segment whenever the unconstrained
    # subproblem leaves the feasible region.
    m, n = A.shape
    max_iter = max_iter or 3 * n
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    tol = 10 * np.finfo(float).eps * max(m, n) * np.linalg.norm(A, 1) * max(1.0, np.abs(y).max())
    for _ in range(max_iter):
        grad = A.T @ (y - A @ x)
        free = ~passive & (grad > tol)
        if not free.any():
            break
        passive[np.argmax(np.where(free, grad, -np.inf))] = True
        while True:
            z = np.zeros(n)
            z[passive], *_ = np.linalg.lstsq(A[:, passive], y, rcond=None)
            if np.all(z[passive] > 0):
                x = z
                break
            bad = passive & (z <= 0)
            alpha = np.min(x[bad] / (x[bad] - z[bad]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
    return x


def refine_amplitudes(frame, waves, rcond=1e-10):
    """Least-squares amplitudes for fixed ``(a_i, b_i)``, kept nonnegative.

    The model is linear in the amplitudes, so this is a nonnegative linear
    least-squares problem, solved with an active-set method. Waves whose
    amplitude ends at zero are dropped from the result.

    Raises
    ------
    RankDeficiencyError
        If the logistic columns are numerically dependent.
    """
    waves = list(waves)
    if not waves:
        raise ValueError("refine_amplitudes needs at least one wave")
    y = _values_of(frame)
    t = np.arange(len(y), dtype=float)
    A = np.column_stack([LogisticWave(1.0, w.a, w.b)(t) for w in waves])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= rcond * sv[0]:
        raise RankDeficiencyError(
            f"wave columns are rank deficient (condition {sv[0] / max(sv[-1], 1e-300):.3g})"
        )
    coef = _nnls(A, y)
    kept = []
    for w, c in zip(waves, coef):
        if c > 0:
            kept.append(w.with_amplitude(float(c)))
        else:
            log.info("dropping wave at b=%g a=%g (amplitude pinned at zero)", w.b, w.a)
    return kept


def _read_wave(s, a, b, fallback_index):
    # ridge-width reading snapped back onto the scalogram grid, or the raw
    # node when the lobe is cut off
    r = read_ridge(s, a, b)
    if r is None:
        return float(a), float(b), float(fallback_index)
    i = int(np.argmin(np.abs(s.scales - r.a)))
    j = int(np.argmin(np.abs(s.b_values - r.b)))
    idx = float(s.coefficients[i, j])
    if not idx > 0:
        return float(a), float(b), float(fallback_index)
    return float(s.scales[i]), float(s.b_values[j]), idx


def _local_reading(residual, w: LogisticWave, grid: ScaleGrid, ridge=False):
    # strongest cell of the residual's scalogram near (w.a, w.b); with
    # ``ridge`` it is refined from the lobe width, so the box must hold the
    # whole positive lobe
    scales = grid.scales
    box_a = scales[(scales >= 0.6 * w.a - 1e-9) & (scales <= 1.6 * w.a + 1e-9)]
    if box_a.size < 2:
        box_a = scales[np.argsort(np.abs(scales - w.a))[:2]]
        box_a.sort()
    reach = int(math.ceil(4.5 * w.a)) + 2
    lo = max(0, int(round(w.b)) - reach)
    hi = min(len(residual) - 1, int(round(w.b)) + reach)
    local = ScaleGrid(float(box_a[0]), float(box_a[-1]), grid.a_step, tuple(range(lo, hi + 1)))
    s = cwt(central_second_differences(residual), 2, local)
    # search for the maximum only close to the current reading
    near = max(3, int(math.ceil(0.5 * w.a)))
    cols = np.abs(s.b_values - w.b) <= near
    rows = (s.scales >= 0.7 * w.a - 1e-9) & (s.scales <= 1.4 * w.a + 1e-9)
    if not rows.any():
        rows[:] = True
    sub = np.where(rows[:, None] & cols[None, :], s.coefficients, -np.inf)
    i, j = np.unravel_index(np.argmax(sub), sub.shape)
    if not ridge or not s.coefficients[i, j] > 0:
        return float(s.scales[i]), float(s.b_values[j]), float(s.coefficients[i, j])
    return _read_wave(s, s.scales[i], s.b_values[j], s.coefficients[i, j])


def backfit(values, waves, grid: ScaleGrid = ScaleGrid(), passes=8, tol=1e-3):
    """Re-read every wave from the series with all *other* waves removed.

    Overlapping waves bias each other's scalogram maxima. Each pass replaces
    wave ``i`` by the local scalogram maximum of ``values - sum_{j != i} w_j``
    near its current ``(a, b)``; passes stop once no wave moves by more
    than ``tol`` days.
    """
    y = np.asarray(values, dtype=float)
    waves = list(waves)
    if len(waves) < 2:
        return waves
    t = np.arange(len(y), dtype=float)
    for _ in range(passes):
        moved = False
        for i, w in enumerate(waves):
            others = [v for k, v in enumerate(waves) if k != i]
            a, b, idx = _local_reading(y - model_eval(others, t), w, grid)
            if idx <= 0:
                continue
            moved = moved or abs(a - w.a) > tol or abs(b - w.b) > tol
            waves[i] = LogisticWave(saturation_from_index(a, idx), a, b, idx)
        if not moved:
            break
    return waves


# half-width of the positive lobe of a wave's row at its own scale, in units of a
LOBE_HALF_WIDTH = 2.14


def _drop_merged(peaks):
    # Two overlapping waves also produce a coarser maximum between them whose
    # Index can exceed either of theirs. Such a peak has finer peaks on both
    # sides inside its positive lobe.
    out = []
    for p in peaks:
        reach = LOBE_HALF_WIDTH * p.a
        finer = [q for q in peaks if q.a < p.a and abs(q.b - p.b) <= reach]
        if any(q.b < p.b for q in finer) and any(q.b > p.b for q in finer):
            continue
        out.append(p)
    return out


def ridge_correct(values, waves, grid: ScaleGrid = ScaleGrid(), sweeps=2):
    """Re-read all waves from the width of their scalogram ridges.

    Within a sweep every wave is read from ``values`` minus the *previous*
    readings of the others (a simultaneous update). Unlike the argmax reading
    used by :func:`backfit`, repeating this in place is unstable for strongly
    overlapping waves, so only a couple of sweeps are made, starting from the
    converged argmax readings.
    """
    y = np.asarray(values, dtype=float)
    t = np.arange(len(y), dtype=float)
    waves = list(waves)
    for _ in range(sweeps):
        new = []
        for i, w in enumerate(waves):
            others = [v for k, v in enumerate(waves) if k != i]
            a, b, idx = _local_reading(y - model_eval(others, t), w, grid, ridge=True)
            new.append(LogisticWave(saturation_from_index(a, idx), a, b, idx) if idx > 0 else w)
        waves = new
    return waves


def _merge_close(waves, min_separation):
    # backfitting can pull a small wave onto a larger one; keep the larger
    kept = []
    for w in sorted(waves, key=lambda v: -v.x_max):
        if all(abs(w.b - k.b) >= min_separation for k in kept):
            kept.append(w)
    return [w for w in waves if w in kept]


def extract_waves(frame: SeriesFrame, cfg: DecompositionConfig = DecompositionConfig()) -> DecompositionResult:
    """Peel logistic waves off ``frame.smoothed`` one scalogram peak at a time.

    Each round transforms the second differences of the residual and takes
    the highest-Index peak that qualifies as a wave:

    - its saturation reaches ``cfg.min_saturation`` (default 1% of the final
      cumulative value);
    - it stands ``cfg.noise_significance`` standard deviations above the
      coefficient noise implied by a robust noise estimate of the series
      (0 disables this; otherwise white noise at the smallest scales
      outranks weak waves by Index);
    - its ``b`` is at least ``cfg.cone * a`` days from both ends of the
      series, where the transform is truncated;
    - it is not within ``cfg.min_separation`` days of an extracted wave;
    - it is not a merged maximum, i.e. it has no finer peaks on both sides
      inside its positive lobe (two overlapping waves produce such a coarse
      peak whose Index can exceed either of theirs).

    The new wave is added and the whole set re-read by :func:`backfit`.
    The loop stops after ``cfg.max_waves`` waves or when no peak qualifies;
    with ``cfg.monotone_index`` also as soon as the residual's largest
    coefficient fails to decrease strictly. Finally the readings are refined
    from ridge widths (:func:`ridge_correct`, ``cfg.ridge_sweeps`` sweeps)
    and the amplitudes refitted (:func:`refine_amplitudes`).
    """
    y = np.asarray(frame.smoothed, dtype=float)
    if len(y) < 3:
        raise ValueError("series needs at least 3 points")
    floor = cfg.min_saturation
    if floor is None:
        floor = 0.01 * float(frame.cumulative[-1])
    noise_floor = None
    if cfg.noise_significance > 0 and len(y) > 7:
        sigma = noise_sigma(y)
        noise_floor = cfg.noise_significance * coefficient_noise(cfg.grid.scales, sigma)
    t = np.arange(len(y), dtype=float)
    residual = y.copy()
    waves: list[LogisticWave] = []
    iterations = 0
    last_max = math.inf
    while len(waves) < cfg.max_waves:
        iterations += 1
        s = cwt(central_second_differences(residual), 2, cfg.grid)
        current_max = float(s.coefficients.max())
        if cfg.monotone_index and not current_max < last_max:
            log.info("maximum Index %g did not decrease; stopping", current_max)
            break
        last_max = current_max
        peaks = find_peaks(s, cfg.threshold_fraction, cfg.min_separation, noise_floor, cfg.cone)
        peaks = _drop_merged(peaks)
        # a peak next to an extracted wave is leftover misfit of that wave
        top = next((p for p in peaks
                    if saturation_from_index(p.a, p.index_value) >= floor
                    and all(abs(p.b - w.b) >= max(cfg.min_separation, LOBE_HALF_WIDTH * w.a)
                            for w in waves)), None)
        if top is None:
            break
        waves.append(LogisticWave(saturation_from_index(top.a, top.index_value), top.a, top.b, top.index_value))
        if cfg.backfit_passes:
            waves = backfit(y, waves, cfg.grid, cfg.backfit_passes)
        residual = y - model_eval(waves, t)

    if waves and cfg.ridge_sweeps:
        waves = _merge_close(waves, cfg.min_separation)
        waves = ridge_correct(y, waves, cfg.grid, cfg.ridge_sweeps)

    raw_rmse = rmse(y, waves) if waves else float(np.sqrt(np.mean(y**2)))
    final_rmse = raw_rmse
    if waves and cfg.refine_amplitudes:
        refined = refine_amplitudes(y, waves)
        refined_rmse = rmse(y, refined) if refined else float(np.sqrt(np.mean(y**2)))
        # the unrefined amplitudes are feasible for the refit, so it cannot do worse
        assert refined_rmse <= raw_rmse * (1 + 1e-12) + 1e-9, (refined_rmse, raw_rmse)
        waves, final_rmse = refined, refined_rmse
    model = np.asarray(model_eval(waves, t)) if waves else np.zeros_like(y)
    return DecompositionResult(
        waves=waves,
        residual=y - model,
        model_values=model,
        rmse=final_rmse,
        iterations=iterations,
        rmse_unrefined=raw_rmse if cfg.refine_amplitudes else None,
    )
