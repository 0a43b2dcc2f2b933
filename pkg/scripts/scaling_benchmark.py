#!/usr/bin/env python3
"""Wall-clock scaling of the nonparametric sampler.

Runs the CLI bench subcommand over a list of data shapes (so timings
include exactly what `boolmf bench` measures: JIT warm-up excluded,
generation and sampling reported separately) and prints one line per
shape.  The default list ends at the 301x21000 reference shape.

Example:
    python scripts/scaling_benchmark.py --shape 100 2000 --shape 301 21000
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from boolmf.cli import main as cli_main


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument(
        "--shape",
        type=int,
        nargs=2,
        metavar=("ROWS", "COLS"),
        action="append",
        default=None,
        help="may be given several times; default sweeps up to 301x21000",
    )
    p.add_argument("--latent", type=int, default=9)
    p.add_argument("--density", type=float, default=0.35)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", default="auto")
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    shapes = args.shape or [(75, 5250), (150, 10500), (301, 21000)]

    print(f"{'shape':>14}  {'gen s':>7}  {'sample s':>9}  {'sweeps/s':>9}  L mode")
    for rows, cols in shapes:
        with tempfile.TemporaryDirectory() as tmp:
            rc = cli_main(
                [
                    "bench",
                    "--rows", str(rows),
                    "--cols", str(cols),
                    "--latent", str(args.latent),
                    "--density", str(args.density),
                    "--samples", str(args.samples),
                    "--burn-in", str(args.burn_in),
                    "--seed", str(args.seed),
                    "--threads", str(args.threads),
                    "--out", tmp,
                ]
            )
            if rc != 0:
                return rc
            report = json.loads((Path(tmp) / "report.json").read_text())
        print(
            f"{rows:>6d}x{cols:<7d}  {report['seconds_generate']:>7.2f}  "
            f"{report['seconds_sampling']:>9.2f}  "
            f"{report['sweeps_per_second']:>9.1f}  {report['L_mode']}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
