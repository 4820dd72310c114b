"""Time the numba and numpy transform kernels on the same inputs.

    python benchmarks/bench_cwt.py [--days 200 800] [--repeat 5]

The numba timings exclude the first (compiling) call. Both backends are
checked to agree before anything is timed.
"""
import argparse
import time

import numpy as np

from logiwave import _kernels
from logiwave.cwt import SUPPORT, ScaleGrid
from logiwave.decompose import LogisticWave, model_eval
from logiwave.series import central_second_differences
from logiwave.wavelets import LogisticWavelet


def _inputs(n_days, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n_days, dtype=float)
    waves = [LogisticWave(rng.uniform(2e3, 2e4), rng.uniform(3, 15), rng.uniform(0, n_days)) for _ in range(5)]
    y = model_eval(waves, t) + rng.normal(0, 5, n_days)
    d2 = central_second_differences(y)
    valid = ~np.isnan(d2)
    return np.where(valid, d2, 0.0), valid


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--days", type=int, nargs="+", default=[200, 800])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    grid = ScaleGrid()
    scales = grid.scales
    coeffs = LogisticWavelet(2).coefficients
    print(f"{'days':>6} {'cells':>9} {'numpy s':>9} {'numba s':>9} {'speedup':>8} {'max rel diff':>13}")
    for n in args.days:
        d2, valid = _inputs(n)
        bs = np.arange(n, dtype=float)
        run = {b: (lambda b=b: _kernels.cwt_matrix(d2, valid, scales, bs, coeffs, SUPPORT, b))
               for b in ("numpy", "numba")}
        ref, fast = run["numpy"](), run["numba"]()  # second call also compiles numba
        diff = float(np.max(np.abs(ref - fast)) / np.max(np.abs(ref)))
        t_np = _best(run["numpy"], args.repeat)
        t_nb = _best(run["numba"], args.repeat)
        print(f"{n:>6} {ref.size:>9} {t_np:>9.4f} {t_nb:>9.4f} {t_np / t_nb:>7.1f}x {diff:>13.2e}")


if __name__ == "__main__":
    main()
