"""Command-line front end: ``lensless sense | reconstruct | eval | demo``.

Exit codes: 0 success, 1 invalid arguments, 2 I/O or file-format problems,
3 numerical divergence. Every command that writes files also writes a JSON
manifest next to its main output.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import CalibrationModel, calibrate, sense_ideal, sense_physical, sense_rgb
from .data import FIXTURES, load_fixture
from .fileio import FormatError, load_array, read_measurements, save_array, write_measurements
from .hadamard import build_operator
from .metrics import psnr
from .solver import VARIANTS, DivergenceError, SolverConfig, solve, solve_rgb

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("lensless")


def _load_image(source: str) -> np.ndarray:
    """A file path, or ``fixture:<name>`` for a bundled image."""
    if source.startswith("fixture:"):
        return load_fixture(source.split(":", 1)[1])
    return load_array(source)


def _write_manifest(out: Path, command: str, argv: list[str], params: dict, outputs: dict) -> Path:
    path = out.with_name(out.name + ".manifest.json")
    record = {
        "tool": "lensless",
        "version": __version__,
        "command": command,
        "argv": argv,
        "params": params,
        "outputs": {k: str(v) for k, v in outputs.items()},
    }
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


def cmd_sense(args, argv) -> int:
    image = _load_image(args.image)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[..., 0]
    n_y, n_x = image.shape[:2]
    op = build_operator(n_x, n_y, args.csr, args.seed, args.row_seed)
    cal = CalibrationModel(args.g, args.f) if args.physical else None
    if image.ndim == 3:
        meas = sense_rgb(op, image, args.noise_sigma, args.noise_seed, cal)
    elif cal is not None:
        meas = sense_physical(op, image, cal)
    else:
        meas = sense_ideal(op, image, args.noise_sigma, args.noise_seed)
    out = Path(args.out)
    write_measurements(out, meas)
    params = {
        "n_x": n_x, "n_y": n_y, "channels": meas.channels, "m": meas.m, "csr": meas.csr,
        "perm_seed": op.perm_seed, "row_seed": op.row_seed, "noise_sigma": args.noise_sigma,
        "noise_seed": args.noise_seed, "physical": args.physical, "g": args.g, "f": args.f,
    }
    _write_manifest(out, "sense", argv, params, {"measurements": out})
    log.info("wrote %d x %d measurements (CSr %.4f) to %s", meas.channels, meas.m, meas.csr, out)
    return EXIT_OK


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        variant=args.variant, xi=args.xi, eta=args.eta, b=args.b, max_iter=args.iters,
        patch_edge=args.patch, stride=args.stride, n_clusters=args.clusters,
        cluster_seed=args.cluster_seed, keep_mode=args.keep_mode,
        keep_fraction=args.keep_fraction, tol=args.tol,
    )


def cmd_reconstruct(args, argv) -> int:
    cfg = _solver_config(args)
    meas = read_measurements(args.measurements)
    op = meas.operator()
    if meas.physical:
        meas = calibrate(meas, op=op)
    truth = _load_image(args.truth) if args.truth else None
    if meas.channels == 1:
        if truth is not None and truth.ndim == 3:
            raise ValueError("gray measurements but colour ground truth")
        image, trace = solve(op, meas.values[0], cfg, truth)
        traces = [trace]
    else:
        image, traces = solve_rgb(op, meas, cfg, truth)
    out = Path(args.out)
    save_array(out, image, maxval=(1 << args.bits) - 1)
    outputs = {"image": out}
    if args.trace:
        tpath = Path(args.trace)
        for c, tr in enumerate(traces):
            p = tpath if len(traces) == 1 else tpath.with_name(f"{tpath.stem}_c{c}{tpath.suffix}")
            tr.write_csv(p)
            outputs[f"trace{c}"] = p
    params = dict(vars(cfg), measurements=str(args.measurements), truth=args.truth, bits=args.bits)
    _write_manifest(out, "reconstruct", argv, params, outputs)
    if truth is not None:
        log.info("final PSNR %s", psnr(image, truth).format())
    return EXIT_OK


def cmd_eval(args, argv) -> int:
    report = psnr(load_array(args.reconstruction), _load_image(args.truth))
    print(report.format())
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_demo(args, argv) -> int:
    """Error / PSNR per iteration for several step sizes and CSr values."""
    truth = _load_image(args.image)
    if truth.ndim != 2:
        raise ValueError("demo runs on a gray image")
    n_y, n_x = truth.shape
    columns, series = [], []
    flagged = []
    for csr in args.csr_sweep:
        op = build_operator(n_x, n_y, csr, args.seed)
        y = sense_ideal(op, truth).values[0]
        for xi in args.xis:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cfg = SolverConfig(xi=xi, max_iter=args.iters)
            _, trace = solve(op, y, cfg, truth)
            errs = trace.errors()
            tag = f"csr{csr:g}_xi{xi:g}" + ("_nonmonotone" if xi >= 2.0 else "")
            if xi >= 2.0:
                flagged.append(tag)
            columns += [f"error_{tag}", f"psnr_{tag}"]
            series += [errs, np.concatenate([[trace.initial_psnr], trace.column("psnr")])]
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        for tag in flagged:
            fh.write(f"# {tag}: not guaranteed monotone (step size 2 is outside the open interval (0, 2))\n")
        w = csv.writer(fh)
        w.writerow(["k"] + columns)
        for k in range(args.iters + 1):
            w.writerow([k] + [repr(float(s[k])) for s in series])
    _write_manifest(out, "demo", argv, {"image": args.image, "csr_sweep": args.csr_sweep,
                                        "xis": args.xis, "iters": args.iters, "seed": args.seed},
                    {"csv": out})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lensless", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"lensless {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sense", help="simulate acquisition of an image")
    s.add_argument("image", help="PGM/PPM/.npy path or fixture:<name> (" + ", ".join(FIXTURES) + ")")
    s.add_argument("--csr", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0, help="permutation seed")
    s.add_argument("--row-seed", type=int, default=None, help="row-selection seed (default seed+1)")
    s.add_argument("--noise-sigma", type=float, default=0.0)
    s.add_argument("--noise-seed", type=int, default=0)
    s.add_argument("--physical", action="store_true", help="record raw {0,1}-pattern readings")
    s.add_argument("--g", type=float, default=1.0, help="open-element transmittance")
    s.add_argument("--f", type=float, default=0.0, help="closed-element leakage")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sense)

    r = sub.add_parser("reconstruct", help="reconstruct an image from a measurement file")
    r.add_argument("measurements")
    r.add_argument("--variant", choices=VARIANTS, default="slope_xi")
    r.add_argument("--xi", type=float, default=1.5)
    r.add_argument("--eta", type=float, default=1.0)
    r.add_argument("--b", type=float, default=0.0)
    r.add_argument("--iters", type=int, default=50)
    r.add_argument("--patch", type=int, default=8)
    r.add_argument("--stride", type=int, default=4)
    r.add_argument("--clusters", type=int, default=1)
    r.add_argument("--cluster-seed", type=int, default=0)
    r.add_argument("--keep-mode", choices=("csr_proportional", "fixed_fraction"), default="csr_proportional")
    r.add_argument("--keep-fraction", type=float, default=0.5)
    r.add_argument("--tol", type=float, default=None)
    r.add_argument("--out", required=True, help=".pgm/.ppm (quantised) or .npy (float64)")
    r.add_argument("--bits", type=int, choices=(8, 16), default=16)
    r.add_argument("--trace", help="CSV path for the per-iteration trace")
    r.add_argument("--truth", help="ground-truth image for error/PSNR tracing")
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("eval", help="PSNR of a reconstruction against the truth")
    e.add_argument("reconstruction")
    e.add_argument("truth")
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("demo", help="step-size sweep: error and PSNR per iteration as CSV")
    d.add_argument("--image", default="fixture:camera128.pgm")
    d.add_argument("--csr-sweep", type=_float_list, default=[0.05])
    d.add_argument("--xis", type=_float_list, default=[0.5, 1.0, 1.5, 2.0])
    d.add_argument("--iters", type=int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args, argv)
    except DivergenceError as exc:
        print(f"error: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
