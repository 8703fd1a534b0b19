"""SLOPE reconstruction: alternate a data-consistency step with patch-DCT shrinkage.

Iteration k (starting from x~_0 = x_0 = A^T y):

    x_k  = x~_{k-1} + step * A^T (y - A x~_{k-1})
    x~_k = denoise(x_k)

The update variants differ only in ``step``: ``slope_xi`` uses xi,
``gap`` uses 1, ``ist_eta`` uses 1/eta and ``admm_b`` uses 1/(1+b).
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .hadamard import HadamardOperator, adjoint, forward
from .metrics import psnr
from .patches import (ClusterAssignment, PatchSystem, analyze3d, average_synthesize,
                      cluster_patches, extract_patches, synthesize3d)
from .shrinkage import ShrinkagePolicy, shrink_set

log = logging.getLogger(__name__)

VARIANTS = ("slope_xi", "ist_eta", "gap", "admm_b")
THREADS_ENV = "LENSLESS_THREADS"


class DivergenceError(ArithmeticError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite values at iteration {iteration}")
        self.iteration = iteration


@dataclass
class SolverConfig:
    variant: str = "slope_xi"
    xi: float = 1.5
    eta: float = 1.0
    b: float = 0.0
    max_iter: int = 50
    patch_edge: int = 8
    stride: int = 4
    n_clusters: int = 1
    cluster_seed: int = 0
    # None: 1-D transform across the stack only when clustering is on
    stack_transform: bool | None = None
    keep_mode: str = "csr_proportional"
    keep_fraction: float = 0.5
    # None: take the operator's M / n_pixels
    csr: float | None = None
    # relative residual change over 5 iterations that triggers an early stop
    tol: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.variant == "slope_xi":
            if not 0.0 < self.xi <= 2.0:
                raise ValueError(f"xi must lie in (0, 2], got {self.xi}")
            if self.xi == 2.0:
                warnings.warn("xi = 2 only guarantees a non-increasing error, not convergence",
                              stacklevel=2)
        if self.variant == "ist_eta" and self.eta < 1.0:
            raise ValueError(f"eta must be >= 1 (largest eigenvalue of A^T A), got {self.eta}")
        if self.variant == "admm_b" and self.b < 0.0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")

    @property
    def step(self) -> float:
        return {
            "slope_xi": self.xi,
            "gap": 1.0,
            "ist_eta": 1.0 / self.eta,
            "admm_b": 1.0 / (1.0 + self.b),
        }[self.variant]

    def policy(self, csr: float) -> ShrinkagePolicy:
        return ShrinkagePolicy(self.keep_mode, self.csr if self.csr is not None else csr,
                               self.keep_fraction)

    def patch_system(self, shape: tuple[int, int]) -> PatchSystem:
        return PatchSystem(shape, self.patch_edge, self.stride)

    def use_stack_transform(self) -> bool:
        return self.n_clusters > 1 if self.stack_transform is None else self.stack_transform


@dataclass
class IterationRecord:
    k: int
    residual: float
    error: float = math.nan
    error_denoised: float = math.nan
    psnr: float = math.nan
    nnz: int = 0
    lambda_mean: float = 0.0
    sigma_hat: float = 0.0
    ms: float = 0.0
    lambdas: list[float] = field(default_factory=list, repr=False)


CSV_COLUMNS = ("k", "residual", "error", "psnr", "nnz", "lambda_mean", "ms",
               "error_denoised", "sigma_hat")


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)
    initial_error: float = math.nan
    initial_residual: float = math.nan
    initial_psnr: float = math.nan
    final_x: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def errors(self) -> np.ndarray:
        """Error of x_0, x_1, ..., x_K against the ground truth."""
        return np.concatenate([[self.initial_error], self.column("error")])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in self.records:
                row = asdict(r)
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def _fmt(v):
    return v if isinstance(v, int) else repr(float(v))


def init(op: HadamardOperator, y: np.ndarray) -> np.ndarray:
    """Minimum-norm feasible start x_0 = A^T y, as an (n_y, n_x) image."""
    return op.crop(adjoint(op, np.asarray(y, dtype=np.float64)))


def data_update(op: HadamardOperator, y: np.ndarray, x_tilde: np.ndarray, step: float,
                ax_tilde: np.ndarray | None = None) -> np.ndarray:
    """x~ + step * A^T (y - A x~); pad pixels stay at zero."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if ax_tilde is None:
        ax_tilde = forward(op, op.pad(x_tilde))
    return x_tilde + step * op.crop(adjoint(op, y - ax_tilde))


def denoise_step(x: np.ndarray, sys: PatchSystem, policy: ShrinkagePolicy, n_clusters: int = 1,
                 cluster_seed: int = 0, stack_transform: bool | None = None):
    """Patch DCT shrinkage. Returns (x_tilde, per-cluster thresholds, nnz of the kept coefficients)."""
    patches = extract_patches(sys, x)
    if n_clusters > 1:
        assignment = cluster_patches(patches, n_clusters, cluster_seed)
    else:
        assignment = ClusterAssignment.single(sys.n_patches)
    if stack_transform is None:
        stack_transform = n_clusters > 1
    alpha = analyze3d(sys, assignment, patches, stack_transform)
    beta, lams = shrink_set(alpha, policy)
    nnz = int(sum(np.count_nonzero(b) for b in beta.blocks))
    return average_synthesize(sys, synthesize3d(sys, beta)), lams, nnz


def estimate_noise(op: HadamardOperator, x: np.ndarray, x_tilde: np.ndarray,
                   ax: np.ndarray | None = None, ax_tilde: np.ndarray | None = None) -> float:
    """Sample std of A x - A x~, a proxy for the measurement noise level."""
    if ax is None:
        ax = forward(op, op.pad(x))
    if ax_tilde is None:
        ax_tilde = forward(op, op.pad(x_tilde))
    d = ax - ax_tilde
    return float(np.std(d, ddof=1)) if d.size > 1 else 0.0


def _as_vector(op: HadamardOperator, y) -> np.ndarray:
    values = getattr(y, "values", y)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        if values.shape[0] != 1:
            raise ValueError("solve() takes one channel; use solve_rgb() for colour")
        values = values[0]
    if values.shape != (op.m,):
        raise ValueError(f"expected {op.m} measurements, got shape {values.shape}")
    return values


def solve(op: HadamardOperator, y, cfg: SolverConfig | None = None,
          truth: np.ndarray | None = None) -> tuple[np.ndarray, IterationTrace]:
    """Run the configured variant for ``cfg.max_iter`` iterations.

    Returns the last denoised iterate x~_K (x_0 when ``max_iter`` is 0) and the
    per-iteration trace; the last pre-denoising iterate is ``trace.final_x``.
    """
    cfg = cfg or SolverConfig()
    y = _as_vector(op, y)
    shape = (op.n_y, op.n_x)
    sys = cfg.patch_system(shape)
    policy = cfg.policy(op.csr)
    stack = cfg.use_stack_transform()
    step = cfg.step
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64).reshape(shape)

    x = init(op, y)
    x_tilde = x
    ax_tilde = forward(op, op.pad(x_tilde))
    trace = IterationTrace(initial_residual=float(np.linalg.norm(y - ax_tilde)))
    if truth is not None:
        trace.initial_error = float(np.linalg.norm(x - truth))
        trace.initial_psnr = psnr(x, truth).psnr_db

    for k in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        x = data_update(op, y, x_tilde, step, ax_tilde)
        x_tilde, lams, nnz = denoise_step(x, sys, policy, cfg.n_clusters, cfg.cluster_seed, stack)
        if not (np.all(np.isfinite(x_tilde)) and np.all(np.isfinite(x))):
            raise DivergenceError(k)
        ax = forward(op, op.pad(x))
        ax_tilde = forward(op, op.pad(x_tilde))
        rec = IterationRecord(
            k=k,
            residual=float(np.linalg.norm(y - ax_tilde)),
            nnz=nnz,
            lambda_mean=float(np.mean(lams)),
            lambdas=lams,
            sigma_hat=estimate_noise(op, x, x_tilde, ax, ax_tilde),
        )
        if truth is not None:
            rec.error = float(np.linalg.norm(x - truth))
            rec.error_denoised = float(np.linalg.norm(x_tilde - truth))
            rec.psnr = psnr(x_tilde, truth).psnr_db
        rec.ms = (time.perf_counter() - t0) * 1e3
        trace.records.append(rec)
        log.debug("iter %d residual %.3e error %.3e", k, rec.residual, rec.error)
        if cfg.tol is not None and k > 5:
            prev = trace.records[-6].residual
            if abs(prev - rec.residual) <= cfg.tol * max(prev, np.finfo(float).tiny):
                log.info("early stop at iteration %d", k)
                break
    trace.final_x = x
    return x_tilde, trace


def thread_count(default: int = 3) -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return default
    n = int(raw)
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def solve_rgb(op: HadamardOperator, meas, cfg: SolverConfig | None = None,
              truth: np.ndarray | None = None, workers: int | None = None):
    """Reconstruct each channel independently; returns an (n_y, n_x, C) image and one trace per channel."""
    values = np.atleast_2d(getattr(meas, "values", meas))
    n_ch = values.shape[0]
    truths = [None] * n_ch if truth is None else [np.asarray(truth)[..., c] for c in range(n_ch)]
    workers = workers or thread_count(n_ch)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda c: solve(op, values[c], cfg, truths[c]), range(n_ch)))
    image = np.stack([r[0] for r in results], axis=-1)
    return image, [r[1] for r in results]
