"""Experiment suites: sparse-recovery generators, benchmark tables, SNR traces.

Suites mirror the deblurring tables (grey and colour images under a set of
blur kernels), the recovery tables (random tight frames and DCT) and the
SNR-per-iteration comparison of plain and accelerated alternating
minimisation.  ``desk`` scale crops images to at most 256x256, caps recovery
problems at ``n = 1024`` and averages 3 repetitions; ``full`` uses the
original sizes and 10 repetitions.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import DegradationSpec, degrade, load_image, mu_auto, snr_db
from .operators import (
    DenseOp, FrameAnalysis, KernelSpec, PeriodicTV, gen_dct, gen_gaussian_matrix,
    gen_tight_frame, vec,
)
from .prox import ObjectiveParams
from .solvers import SOLVERS, SolverConfig

__all__ = [
    "RecoveryProblem", "gen_recovery_problem", "recovery_params", "rel_error",
    "BenchRow", "BenchResult", "run_suite", "SUITES", "IMAGE_KERNELS",
]

log = logging.getLogger(__name__)

IMAGE_KERNELS = (
    "gaussian:11:9", "gaussian:21:11", "gaussian:31:13",
    "motion:21:45", "motion:41:90", "motion:61:135",
    "average:11", "average:13", "average:15",
)
RECOVERY_SIZES = (
    (256, 1024), (256, 2048), (256, 4096), (256, 8192), (512, 2048),
    (512, 4096), (512, 8192), (1024, 2048), (1024, 4096), (1024, 8192),
)
IMAGE_NAMES = {
    "boat": ("boat",), "man": ("man",), "mandrill": ("mandrill", "baboon"),
    "sandiego": ("sandiego", "san_diego", "san-diego"),
}
SUITES = ("table1", "table2", "table3", "table4", "fig2")

IMAGE_BETA = 2.0 ** 7
RECOVERY_BETA = 2.0 ** 11


@dataclass
class RecoveryProblem:
    K: DenseOp
    D: FrameAnalysis
    x_true: np.ndarray
    y_true: np.ndarray
    f: np.ndarray
    sigma: float
    s: int
    seed: int

    @property
    def m(self):
        return self.K.shape[0]

    @property
    def n(self):
        return self.K.shape[1]


def gen_recovery_problem(m, n, frame="tight", s=None, sigma=1e-3, seed=0, frame_ratio=1.0):
    """Analysis-sparse test problem ``f = K D^T y + sigma * eta``.

    ``K`` is an ``m x n`` Gaussian matrix with unit columns, ``D`` a ``p x n``
    random tight frame (``p = round(frame_ratio * n)``) or the ``n x n`` DCT,
    and ``y`` has exactly ``s`` standard-normal entries on a uniformly random
    support (default ``s = m // 8``).
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    s = m // 8 if s is None else int(s)
    seeds = np.random.SeedSequence(seed).spawn(4)
    if frame == "tight":
        p = int(round(frame_ratio * n))
        if p < n:
            raise ValueError(f"frame ratio {frame_ratio} gives p={p} < n={n}")
        D = FrameAnalysis(gen_tight_frame(p, n, seeds[1]), "tight")
    elif frame == "dct":
        D = FrameAnalysis(gen_dct(n), "dct")
    else:
        raise ValueError(f"unknown frame {frame!r}")
    if not 0 <= s <= D.n_groups:
        raise ValueError(f"sparsity {s} outside [0, {D.n_groups}]")
    K = gen_gaussian_matrix(m, n, seeds[0])
    rng = np.random.default_rng(seeds[2])
    y = np.zeros(D.n_groups)
    y[rng.choice(D.n_groups, size=s, replace=False)] = rng.standard_normal(s)
    x = D.adjoint(y[None, :])
    eta = np.random.default_rng(seeds[3]).standard_normal(m)
    f = K.apply(x) + sigma * eta
    return RecoveryProblem(K, D, x, y, f, sigma, s, seed)


def recovery_params(problem: RecoveryProblem, beta=RECOVERY_BETA, mu=None):
    mu = mu_auto(problem.sigma) if mu is None else mu
    return ObjectiveParams(mu, beta, problem.K, problem.D, problem.f)


def rel_error(x_rec, x_true):
    x_true = np.asarray(x_true, dtype=float)
    nrm = np.linalg.norm(x_true)
    if nrm == 0:
        raise ValueError("relative error undefined for a zero reference")
    return float(np.linalg.norm(np.asarray(x_rec) - x_true) / nrm)


@dataclass
class BenchRow:
    case: str
    solver: str
    reps: int
    metric: str
    value: float
    value_std: float
    iterations: float
    time_s: float


@dataclass
class BenchResult:
    suite: str
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    HEADER = ("suite", "case", "solver", "reps", "metric", "value", "value_std",
              "iterations", "time_s")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.HEADER)
            for r in self.rows:
                w.writerow([self.suite, r.case, r.solver, r.reps, r.metric,
                            f"{r.value:.6g}", f"{r.value_std:.3g}", f"{r.iterations:g}",
                            f"{r.time_s:.4f}"])
            for note in self.notes:
                w.writerow([self.suite, note, "skipped", 0, "", "", "", "", ""])


def _find_image(images_dir, key):
    if images_dir is None:
        return None
    d = Path(images_dir)
    if not d.is_dir():
        return None
    for path in sorted(d.iterdir()):
        if path.stem.lower() in IMAGE_NAMES[key] and path.suffix.lower() in (".pgm", ".ppm", ".pnm"):
            return path
    return None


def _crop(img, size):
    h, w = img.shape[:2]
    ch, cw = min(h, size), min(w, size)
    r0, c0 = (h - ch) // 2, (w - cw) // 2
    return img[r0:r0 + ch, c0:c0 + cw]


def _image_params(img, kernel, sigma, seed, beta=IMAGE_BETA):
    f, K = degrade(img, DegradationSpec(kernel, sigma, seed))
    D = PeriodicTV(img.shape[:2], K.channels)
    return ObjectiveParams(mu_auto(sigma), beta, K, D, vec(f))


def _aggregate(case, solver, metric, runs):
    vals = np.array([r[0] for r in runs])
    return BenchRow(case, solver, len(runs), metric, float(vals.mean()),
                    float(vals.std()), float(np.mean([r[1] for r in runs])),
                    float(np.mean([r[2] for r in runs])))


def _image_suite(result, keys, images_dir, reps, crop, solvers, seed, sigma=1e-3):
    cfg = SolverConfig(tol=1e-3, max_iter=1000, record_trace=False)
    for key in keys:
        path = _find_image(images_dir, key)
        if path is None:
            result.notes.append(f"{key}: image not found")
            log.warning("%s: image not found in %s, skipping", key, images_dir)
            continue
        img = load_image(path)
        if crop:
            img = _crop(img, crop)
        truth = vec(img)
        for kernel in IMAGE_KERNELS:
            case = f"{KernelSpec.parse(kernel).label()} {key}"
            runs = {name: [] for name in solvers}
            for r in range(reps):
                params = _image_params(img, kernel, sigma, seed + r)
                for name in solvers:
                    t0 = time.perf_counter()
                    res = SOLVERS[name](params, cfg)
                    dt = time.perf_counter() - t0
                    runs[name].append((snr_db(res.x, truth), res.iterations, dt))
            for name in solvers:
                result.rows.append(_aggregate(case, name, "snr_db", runs[name]))
    if "sandiego" in keys or "mandrill" in keys:
        result.notes.append("cross-channel blur: not generated")


def _desk_sizes():
    sizes = []
    for m, n in RECOVERY_SIZES:
        while n > 1024:
            m, n = m // 2, n // 2
        if (m, n) not in sizes:
            sizes.append((m, n))
    return sizes


def _recovery_suite(result, frame, sizes, reps, solvers, seed, frame_ratio=1.0):
    cfg = SolverConfig(tol=1e-6, max_iter=20000, record_trace=False)
    for m, n in sizes:
        case = f"{m}/{n}"
        runs = {name: [] for name in solvers}
        for r in range(reps):
            prob = gen_recovery_problem(m, n, frame, sigma=1e-3, seed=seed + r,
                                        frame_ratio=frame_ratio)
            params = recovery_params(prob)
            for name in solvers:
                t0 = time.perf_counter()
                res = SOLVERS[name](params, cfg)
                dt = time.perf_counter() - t0
                runs[name].append((rel_error(res.x, prob.x_true), res.iterations, dt))
        for name in solvers:
            result.rows.append(_aggregate(case, name, "rel_error", runs[name]))


def _fig2(result, images_dir, crop, out_path, seed, iters):
    path = _find_image(images_dir, "man")
    if path is None:
        result.notes.append("man: image not found")
        return
    img = load_image(path)
    if crop:
        img = _crop(img, crop)
    kernel = "motion:41:91"
    params = _image_params(img, kernel, 1e-3, seed)
    cfg = SolverConfig(tol=0.0, max_iter=iters)
    truth = vec(img)
    stem = Path(out_path).with_suffix("") if out_path else None
    for name in ("am", "sam"):
        t0 = time.perf_counter()
        res = SOLVERS[name](params, cfg, x_true=truth)
        dt = time.perf_counter() - t0
        if stem is not None:
            res.trace.write_csv(f"{stem}_fig2_{name}.csv")
        result.rows.append(BenchRow("M(41,91) man", name, 1, "snr_db",
                                    snr_db(res.x, truth), 0.0, res.iterations, dt))


def run_suite(suite, scale="desk", out_path=None, images_dir=None, seed=0, reps=None,
              solvers=("sam", "am", "admm"), frame_ratio=1.0):
    """Run one benchmark suite and optionally write its CSV to ``out_path``.

    Missing images are reported in ``BenchResult.notes`` and the remaining
    cases still run.  Noise is redrawn for every repetition (seed ``seed + r``).
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    if scale not in ("desk", "full"):
        raise ValueError(f"unknown scale {scale!r}")
    desk = scale == "desk"
    reps = reps or (3 if desk else 10)
    crop = 256 if desk else None
    result = BenchResult(suite)
    if suite == "table1":
        _image_suite(result, ("boat", "man"), images_dir, reps, crop, solvers, seed)
    elif suite == "table2":
        _image_suite(result, ("mandrill", "sandiego"), images_dir, reps, crop, solvers, seed)
    elif suite in ("table3", "table4"):
        sizes = _desk_sizes() if desk else list(RECOVERY_SIZES)
        frame = "tight" if suite == "table3" else "dct"
        _recovery_suite(result, frame, sizes, reps, solvers, seed, frame_ratio)
    else:
        _fig2(result, images_dir, crop, out_path, seed, 100 if desk else 300)
    if out_path is not None:
        result.write_csv(out_path)
    return result
