"""Regenerate the synthetic CSV fixtures under tests/data.

    python scripts/make_synthetic.py [--outdir tests/data]

The parameters below are the ground truth the CLI tests compare against.
"""
import argparse
import json
from pathlib import Path

from logiwave.synthetic import synthesize, write_csv

# (x_max, a, b) with b as a 0-based day index from 2020-02-28
WAVES = [(10000.0, 6.0, 50.0), (6000.0, 4.0, 90.0), (8000.0, 10.0, 140.0)]
N_DAYS = 200
NOISE_SIGMA = 24.0  # 0.1% of the total amplitude
SEED = 20200228


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default=Path(__file__).resolve().parents[1] / "tests" / "data", type=Path)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    write_csv(args.outdir / "synthetic_three_waves.csv", synthesize(WAVES, N_DAYS))
    write_csv(args.outdir / "synthetic_three_waves_noisy.csv",
              synthesize(WAVES, N_DAYS, sigma=NOISE_SIGMA, seed=SEED))
    truth = {"waves": [dict(zip(("x_max", "a", "b"), w)) for w in WAVES], "n_days": N_DAYS,
             "noise_sigma": NOISE_SIGMA, "seed": SEED, "start": "2020-02-28"}
    (args.outdir / "synthetic_three_waves.json").write_text(json.dumps(truth, indent=1) + "\n")


if __name__ == "__main__":
    main()
