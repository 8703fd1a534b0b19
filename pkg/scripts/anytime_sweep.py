#!/usr/bin/env python3
"""Error per iteration for several step sizes, sampling rates and seeds.

Writes one CSV row per (csr, seed, xi, k) and prints how monotone each
curve is and how much the error drops between x_0 and the last iterate.

    python3 scripts/anytime_sweep.py --out results/anytime.csv
"""

import argparse
import csv
import time
from pathlib import Path

import numpy as np

from lensless.acquisition import sense_ideal
from lensless.data import load_fixture
from lensless.hadamard import build_operator
from lensless.solver import SolverConfig, solve


def floats(text):
    return [float(v) for v in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--image", default="camera128.pgm", help="bundled fixture name")
    ap.add_argument("--csr", type=floats, default=[0.05, 0.1])
    ap.add_argument("--xi", type=floats, default=[0.5, 1.0, 1.5])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--iters", type=int, default=100)
    ap.add_argument("--out", type=Path, default=Path("results/anytime.csv"))
    args = ap.parse_args()

    truth = load_fixture(args.image)
    n_y, n_x = truth.shape
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["csr", "seed", "xi", "k", "error", "psnr"])
        for csr in args.csr:
            for seed in range(args.seeds):
                op = build_operator(n_x, n_y, csr, seed)
                y = sense_ideal(op, truth).values[0]
                for xi in args.xi:
                    t0 = time.perf_counter()
                    _, trace = solve(op, y, SolverConfig(xi=xi, max_iter=args.iters), truth=truth)
                    errs = trace.errors()
                    psnrs = np.concatenate([[trace.initial_psnr], trace.column("psnr")])
                    for k, (e, p) in enumerate(zip(errs, psnrs)):
                        w.writerow([csr, seed, xi, k, repr(float(e)), repr(float(p))])
                    worst_rise = float(np.max(np.diff(errs) / errs[:-1]))
                    print(f"csr {csr:<5g} seed {seed} xi {xi:<4g} "
                          f"error {errs[0]:.3f} -> {errs[-1]:.3f} (x{errs[0] / errs[-1]:.2f}) "
                          f"max relative rise {worst_rise:+.1e}  {time.perf_counter() - t0:.1f} s")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
