"""Command line entry point ``tv`` with ``deblur``, ``recover`` and ``bench``.

Exit codes: 0 success, 2 bad arguments, 3 missing input, 4 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .harness import RECOVERY_BETA, SUITES, gen_recovery_problem, rel_error, run_suite
from .imaging import DegradationSpec, NetpbmError, degrade, load_image, mu_auto, save_image, snr_db
from .linsolve import AssumptionError, CGConvergenceError
from .operators import KernelSpec, PeriodicTV, make_kernel, unvec, vec
from .prox import ObjectiveParams
from .solvers import SOLVERS, SolverConfig

EXIT_OK, EXIT_ARGS, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3, 4

log = logging.getLogger("tvam")


class _BadArgs(Exception):
    pass


def _kernel(text):
    try:
        return KernelSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _mu(text):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mu must be 'auto' or a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("mu must be positive")
    return value


def _resolve_mu(mu, sigma):
    if mu != "auto":
        return mu
    if not sigma > 0:
        raise _BadArgs("--mu auto needs a positive --sigma")
    return mu_auto(sigma)


def _config(args):
    try:
        return SolverConfig(tol=args.tol, max_iter=args.max_iter, monotone=args.monotone,
                            record_trace=True, rho=args.rho)
    except ValueError as exc:
        raise _BadArgs(str(exc)) from None


def _add_solver_args(p, beta, tol):
    p.add_argument("--beta", type=float, default=beta)
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--solver", choices=sorted(SOLVERS), default="sam")
    p.add_argument("--rho", type=float, default=None, help="ADMM penalty (default: beta)")
    p.add_argument("--monotone", action="store_true", help="report the best-objective iterate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", type=Path, default=None, help="per-iteration CSV")


def build_parser():
    parser = argparse.ArgumentParser(prog="tv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deblur", help="blur, add noise and restore a NetPBM image")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--kernel", type=_kernel, default=KernelSpec("delta"))
    p.add_argument("--sigma", type=float, default=1e-3)
    p.add_argument("--mu", type=_mu, default="auto")
    p.add_argument("--observed", action="store_true",
                   help="treat the input as already degraded (no synthesis, no SNR)")
    p.add_argument("--degraded-output", type=Path, default=None)
    p.add_argument("--output", type=Path, default=None)
    _add_solver_args(p, beta=2.0 ** 7, tol=1e-3)

    p = sub.add_parser("recover", help="analysis-sparse recovery on a random instance")
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--frame", choices=("tight", "dct"), default="tight")
    p.add_argument("--frame-ratio", type=float, default=1.0)
    p.add_argument("--s", type=int, default=None, help="sparsity (default m // 8)")
    p.add_argument("--sigma", type=float, default=1e-3)
    p.add_argument("--mu", type=_mu, default="auto")
    _add_solver_args(p, beta=RECOVERY_BETA, tol=1e-6)
    p.set_defaults(max_iter=20000)

    p = sub.add_parser("bench", help="run a benchmark suite")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--images", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frame-ratio", type=float, default=1.0)
    return parser


def _deblur(args):
    if args.sigma < 0:
        raise _BadArgs("--sigma must be nonnegative")
    if not args.input.is_file():
        log.error("input %s not found", args.input)
        return EXIT_INPUT
    img = load_image(args.input)
    channels = img.shape[2] if img.ndim == 3 else 1
    if args.observed:
        f, truth = img, None
        K = make_kernel(args.kernel, img.shape[:2], channels)
    else:
        f, K = degrade(img, DegradationSpec(args.kernel, args.sigma, args.seed))
        truth = vec(img)
    mu = _resolve_mu(args.mu, args.sigma)
    params = ObjectiveParams(mu, args.beta, K, PeriodicTV(img.shape[:2], channels), vec(f))
    res = SOLVERS[args.solver](params, _config(args), x_true=truth)
    restored = unvec(res.x, img.shape)
    if args.degraded_output:
        save_image(f, args.degraded_output)
    if args.output:
        save_image(restored, args.output)
    if args.trace:
        res.trace.write_csv(args.trace)
    msg = f"{args.solver}: {res.iterations} iterations"
    if truth is not None:
        msg += f", SNR {snr_db(vec(f), truth):.2f} dB -> {snr_db(res.x, truth):.2f} dB"
    print(msg)
    return EXIT_OK


def _recover(args):
    try:
        prob = gen_recovery_problem(args.m, args.n, args.frame, args.s, args.sigma,
                                    args.seed, args.frame_ratio)
    except ValueError as exc:
        raise _BadArgs(str(exc)) from None
    mu = _resolve_mu(args.mu, args.sigma)
    params = ObjectiveParams(mu, args.beta, prob.K, prob.D, prob.f)
    res = SOLVERS[args.solver](params, _config(args), x_true=prob.x_true)
    if args.trace:
        res.trace.write_csv(args.trace)
    err = rel_error(res.x, prob.x_true) if np.any(prob.x_true) else float(np.linalg.norm(res.x))
    print(f"{args.solver}: {res.iterations} iterations, relative error {err:.3e}")
    return EXIT_OK


def _bench(args):
    if args.images is not None and not args.images.is_dir():
        log.error("image directory %s not found", args.images)
        return EXIT_INPUT
    result = run_suite(args.suite, args.scale, args.out, args.images, args.seed, args.reps,
                       frame_ratio=args.frame_ratio)
    for row in result.rows:
        print(f"{row.case:18s} {row.solver:5s} {row.metric}={row.value:.4g} "
              f"iters={row.iterations:g} time={row.time_s:.3f}s")
    for note in result.notes:
        print(f"skipped: {note}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    handler = {"deblur": _deblur, "recover": _recover, "bench": _bench}[args.command]
    try:
        return handler(args)
    except _BadArgs as exc:
        parser.error(str(exc))
    except (NetpbmError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (AssumptionError, CGConvergenceError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except ValueError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
