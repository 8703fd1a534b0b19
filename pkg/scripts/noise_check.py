#!/usr/bin/env python3
"""PSNR loss and noise estimate as the measurement noise grows.

The noise level is given relative to the mean measurement magnitude. The
sigma_hat column is the solver's estimate at the last iteration.
"""

import argparse

import numpy as np

from lensless.acquisition import sense_ideal
from lensless.data import load_fixture
from lensless.hadamard import build_operator
from lensless.solver import SolverConfig, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--image", default="camera256.pgm")
    ap.add_argument("--csr", type=float, default=0.1)
    ap.add_argument("--levels", default="0,0.01,0.03,0.1")
    ap.add_argument("--iters", type=int, default=50)
    args = ap.parse_args()

    truth = load_fixture(args.image)
    n_y, n_x = truth.shape
    op = build_operator(n_x, n_y, args.csr, seed=0)
    clean = sense_ideal(op, truth).values[0]
    scale = float(np.mean(np.abs(clean)))
    print(f"{'level':>6} {'sigma':>10} {'psnr':>8} {'sigma_hat':>10} {'ratio':>7}")
    for level in (float(v) for v in args.levels.split(",")):
        sigma = level * scale
        y = sense_ideal(op, truth, noise_sigma=sigma, noise_seed=10).values[0]
        _, trace = solve(op, y, SolverConfig(max_iter=args.iters), truth=truth)
        last = trace.records[-1]
        ratio = last.sigma_hat / sigma if sigma else float("nan")
        print(f"{level:6.3f} {sigma:10.3e} {last.psnr:8.2f} {last.sigma_hat:10.3e} {ratio:7.2f}")


if __name__ == "__main__":
    main()
