"""``logiwave`` command line: wavelet sampling, scalograms, decomposition, self-check.

Exit codes: 0 success, 1 I/O failure, 2 invalid arguments or columns,
3 numerical non-convergence, 4 malformed input data, 5 empty selection.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cwt import ScaleGrid, cwt, find_peaks
from .decompose import DecompositionConfig, RankDeficiencyError, extract_waves
from .numeric_core import bernoulli, expit
from .series import (EmptySelectionError, MalformedDataError, SeriesFrame, UnknownColumnError,
                     load_csv)
from .wavelets import (LogisticWavelet, NonConvergenceError, QuadratureSettings,
                       grosset_veselov_check, logistic_derivative, sample_mother, simpson,
                       unnormalized_l2_norm_squared)

log = logging.getLogger("logiwave")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC, EXIT_MALFORMED, EXIT_EMPTY = 0, 1, 2, 3, 4, 5
DATA_DIR_ENV = "LOGIWAVE_DATA_DIR"


class UsageError(Exception):
    pass


# -- argument types ---------------------------------------------------------

def _range(text):
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must be lower:upper, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("range lower bound must be below the upper bound")
    return lo, hi


def _date(text):
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _grid(text):
    try:
        return ScaleGrid.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fraction(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


# -- parser -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_series_args(p):
    p.add_argument("--input", required=True, help="CSV file (relative paths also tried under $%s)" % DATA_DIR_ENV)
    p.add_argument("--location", default="Italy", help="value of the location column to keep; '' keeps all rows")
    p.add_argument("--location-column", default="location")
    p.add_argument("--date-column", default="date")
    p.add_argument("--value-column", default="total_deaths")
    p.add_argument("--start", type=_date, default=dt.date(2020, 2, 28))
    p.add_argument("--end", type=_date, default=dt.date(2020, 9, 14))
    p.add_argument("--window", type=_positive_int, default=7, help="trailing moving-average window")
    p.add_argument("--scales", type=_grid, default=ScaleGrid(), metavar="MIN:MAX:STEP")
    p.add_argument("--threshold", type=_fraction, default=0.08, help="peak threshold, fraction of the global maximum")
    p.add_argument("--min-separation", type=float, default=5.0, help="days")
    p.add_argument("--out", required=True, metavar="PREFIX")


def build_parser():
    parser = _Parser(prog="logiwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="FILE", help="flat key=value file; keys are long flag names")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("wavelet", help="sample a mother wavelet to CSV")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--range", type=_range, default=(-7.0, 7.0), metavar="LOWER:UPPER")
    p.add_argument("--samples", type=int, default=1001)
    p.add_argument("--out", required=True)

    p = sub.add_parser("scalogram", help="transform a series and list its peaks")
    _add_series_args(p)
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")

    p = sub.add_parser("decompose", help="extract logistic waves")
    _add_series_args(p)
    p.add_argument("--max-waves", type=_positive_int, default=6)
    p.add_argument("--min-saturation", type=_optional_float, default=None)
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True,
                   help="refit amplitudes by nonnegative least squares")
    p.add_argument("--backfit-passes", type=int, default=8)
    p.add_argument("--noise-significance", type=float, default=5.0)
    p.add_argument("--monotone-index", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--ridge-sweeps", type=int, default=2)
    p.add_argument("--cone", type=_optional_float, default=3.0)

    p = sub.add_parser("selfcheck", help="verify norms, admissibility and the sech^2 identity")
    p.add_argument("--max-order", type=_positive_int, default=6)
    p.add_argument("--tolerance", type=float, default=1e-8, help="absolute, for norm and mean")
    p.add_argument("--gv-tolerance", type=float, default=1e-6, help="relative, for the sech^2 identity")
    return parser


def config_args(path):
    """Turn a ``key = value`` file into long-option arguments.

    ``#`` starts a comment. ``true``/``false`` become ``--key``/``--no-key``.
    """
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        low = value.lower()
        if low in ("true", "yes", "on"):
            out.append(flag)
        elif low in ("false", "no", "off"):
            out.append("--no-" + flag[2:])
        else:
            out.extend([flag, value])
    return out


def _split_config(argv):
    # the config file is read before parsing; its options go right after the
    # subcommand so that explicit flags still win
    argv = list(argv)
    path = None
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            path = argv[k + 1]
            del argv[k:k + 2]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            del argv[k]
            break
    if path is None:
        return argv, None
    extra = config_args(path)
    commands = ("wavelet", "scalogram", "decompose", "selfcheck")
    pos = next((k for k, t in enumerate(argv) if t in commands), None)
    if pos is None:
        raise UsageError("a subcommand is required")
    return argv[:pos + 1] + extra + argv[pos + 1:], path


# -- helpers ----------------------------------------------------------------

def _resolve_input(name):
    p = Path(name)
    if p.is_file() or p.is_absolute():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base and (Path(base) / p).is_file():
        return Path(base) / p
    return p


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _effective_config(args):
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("verbose",):
            continue
        if isinstance(v, ScaleGrid):
            v = v.spec
        elif isinstance(v, dt.date):
            v = v.isoformat()
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def _load_frame(args):
    path = _resolve_input(args.input)
    if args.start > args.end:
        raise UsageError("--start is after --end")
    raw = load_csv(path, location=args.location or None, date_column=args.date_column,
                   value_column=args.value_column, date_range=(args.start, args.end),
                   location_column=args.location_column)
    if args.window > len(raw.values):
        raise UsageError(f"--window {args.window} is longer than the {len(raw.values)}-day selection")
    grid = args.scales
    return path, SeriesFrame.from_raw(raw, args.window), grid


def _date_of(frame, b):
    k = int(round(b))
    return frame.dates[k].isoformat() if 0 <= k < len(frame.dates) else ""


# -- commands ---------------------------------------------------------------

def cmd_wavelet(args):
    if args.order < 2:
        raise UsageError("order must be ≥ 2")
    if args.samples < 2:
        raise UsageError("samples must be ≥ 2")
    lo, hi = args.range
    sample = sample_mother(LogisticWavelet(args.order), lo, hi, args.samples)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "psi"])
        for t, v in zip(sample.t, sample.psi):
            w.writerow([repr(float(t)), repr(float(v))])
    print(f"wrote {args.samples} samples of psi_{args.order} on [{lo:g}, {hi:g}] to {args.out}")
    return EXIT_OK


def cmd_scalogram(args):
    path, frame, grid = _load_frame(args)
    s = cwt(frame.d2, 2, grid)
    peaks = find_peaks(s, args.threshold, args.min_separation)
    meta = {"config": _effective_config(args), "input_sha256": _digest(path)}
    prefix = args.out
    if args.format in ("csv", "both"):
        s.to_long_csv(f"{prefix}.csv")
    if args.format in ("json", "both"):
        s.to_json(f"{prefix}.json", meta)
    _write_json(f"{prefix}_peaks.json", {
        **meta,
        "peaks": [{"a": p.a, "b": p.b, "date": _date_of(frame, p.b), "index": p.index_value} for p in peaks],
    })
    if not peaks:
        print("no peaks found")
        return EXIT_OK
    print(f"{'rank':>4} {'a':>6} {'b':>5} {'date':>10} {'index':>12}")
    for k, p in enumerate(peaks[:5], 1):
        print(f"{k:>4} {p.a:>6.1f} {p.b:>5.0f} {_date_of(frame, p.b):>10} {p.index_value:>12.4f}")
    return EXIT_OK


def cmd_decompose(args):
    path, frame, grid = _load_frame(args)
    cfg = DecompositionConfig(
        max_waves=args.max_waves,
        min_saturation=args.min_saturation,
        threshold_fraction=args.threshold,
        min_separation=args.min_separation,
        refine_amplitudes=args.refine,
        backfit_passes=args.backfit_passes,
        noise_significance=args.noise_significance,
        monotone_index=args.monotone_index,
        ridge_sweeps=args.ridge_sweeps,
        cone=args.cone,
        grid=grid,
    )
    res = extract_waves(frame, cfg)
    doc = res.to_dict()
    doc.update(config=_effective_config(args), decomposition=cfg.to_dict(), input_sha256=_digest(path),
               n_days=len(frame))
    for w, d in zip(res.waves, doc["waves"]):
        d["date"] = _date_of(frame, w.b)
    prefix = args.out
    _write_json(f"{prefix}.json", doc)
    for suffix, cols in (("model", ("smoothed", "model")), ("residual", ("residual",))):
        with open(f"{prefix}_{suffix}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["day", "date", *cols])
            for k in range(len(frame)):
                vals = {"smoothed": frame.smoothed[k], "model": res.model_values[k], "residual": res.residual[k]}
                w.writerow([k, frame.dates[k].isoformat(), *(repr(float(vals[c])) for c in cols)])
    if not res.waves:
        print("no waves found")
    else:
        print(f"{'#':>2} {'x_max':>10} {'a':>6} {'b':>5} {'date':>10} {'index':>10} {'wavelength':>10}")
        for k, w in enumerate(res.waves, 1):
            print(f"{k:>2} {w.x_max:>10.0f} {w.a:>6.1f} {w.b:>5.0f} {_date_of(frame, w.b):>10} "
                  f"{w.index_value:>10.2f} {w.wavelength:>10.1f}")
    print(f"RMSE {res.rmse:.2f}")
    return EXIT_OK


def _selfcheck_rows(max_order, tol, gv_tol):
    q = QuadratureSettings()
    rows = []
    for n in range(1, max_order + 1):
        row = {"n": n}
        b2n = abs(float(bernoulli(2 * n)))
        try:
            row["norm"] = unnormalized_l2_norm_squared(n, q).value / b2n
            # the integral of x^(n) is x^(n-1) evaluated at the ends: 1 for n = 1, else 0
            L = q.width_for(n)
            mean = simpson(lambda t: logistic_derivative(n, t), -L, L, q.tolerance, q.max_refinements).value
            if n == 1:
                tails = 2.0 * float(expit(-L))
            else:
                ends = logistic_derivative(n - 1, np.array([-L, L]))
                tails = float(ends[0] - ends[1])
            row["mean"] = (mean + tails) / math.sqrt(b2n)
            row["mean_expected"] = 1.0 / math.sqrt(b2n) if n == 1 else 0.0
            lhs, rhs = grosset_veselov_check(n, q)
            row["gv_lhs"], row["gv_rhs"] = lhs, rhs
        except NonConvergenceError as exc:
            row["error"] = str(exc)
            row["ok"] = False
            rows.append(row)
            continue
        row["ok"] = (abs(row["norm"] - 1) <= tol
                     and abs(row["mean"] - row["mean_expected"]) <= tol
                     and abs(lhs - rhs) <= gv_tol * abs(rhs))
        rows.append(row)
    return rows


def cmd_selfcheck(args):
    rows = _selfcheck_rows(args.max_order, args.tolerance, args.gv_tolerance)
    print(f"{'n':>2} {'norm-1':>11} {'mean err':>11} {'GV lhs':>14} {'GV rhs':>14} {'GV rel':>10}  status")
    for r in rows:
        if "error" in r:
            print(f"{r['n']:>2}  FAIL  {r['error']}")
            continue
        rel = (r["gv_lhs"] - r["gv_rhs"]) / r["gv_rhs"]
        print(f"{r['n']:>2} {r['norm'] - 1:>11.2e} {r['mean'] - r['mean_expected']:>11.2e} "
              f"{r['gv_lhs']:>14.10f} {r['gv_rhs']:>14.10f} {rel:>10.2e}  {'pass' if r['ok'] else 'FAIL'}")
    passed = sum(r["ok"] for r in rows)
    print(f"{passed}/{len(rows)} pass")
    return EXIT_OK if passed == len(rows) else 1


COMMANDS = {"wavelet": cmd_wavelet, "scalogram": cmd_scalogram, "decompose": cmd_decompose,
            "selfcheck": cmd_selfcheck}


def _join_ranges(argv):
    # "--range -7:7" would otherwise read as an unknown option
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--range":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--range={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        argv, _ = _split_config(argv)
        argv = _join_ranges(argv)
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"logiwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"logiwave: error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"logiwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownColumnError as exc:
        print(f"logiwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedDataError as exc:
        print(f"logiwave: error: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except EmptySelectionError as exc:
        print(f"logiwave: error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (NonConvergenceError, RankDeficiencyError) as exc:
        print(f"logiwave: error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"logiwave: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"logiwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
