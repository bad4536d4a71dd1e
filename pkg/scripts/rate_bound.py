"""Compare the SAM objective gap with the O(1/k^2) bound on a small instance.

The reference minimiser comes from a long iteration-capped SAM run.  Prints
the gap, the bound and their ratio at a few iterations; the ratio must stay
below one.
"""

import argparse

import numpy as np

from tvam import ObjectiveParams, PeriodicTV, build_normal, vec
from tvam.imaging import DegradationSpec, degrade
from tvam.prox import objective_psi
from tvam.solvers import SolverConfig, convergence_bound, sam_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=16)
    ap.add_argument("--kernel", default="gaussian:5:1.5")
    ap.add_argument("--sigma", type=float, default=1e-2)
    ap.add_argument("--beta", type=float, default=2.0 ** 7)
    ap.add_argument("--iters", type=int, default=500)
    ap.add_argument("--oracle-iters", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.size
    img = np.kron(rng.uniform(size=(4, 4)), np.ones((n // 4, n // 4)))
    f, K = degrade(img, DegradationSpec(args.kernel, args.sigma, args.seed))
    params = ObjectiveParams(0.05 / args.sigma ** 2, args.beta, K, PeriodicTV(img.shape), vec(f))
    system = build_normal(params)

    ref = sam_solve(params, SolverConfig(tol=0, max_iter=args.oracle_iters, record_trace=False),
                    system=system)
    psi_star = objective_psi(ref.x, ref.z, params)
    z0 = params.D.apply(params.initial_x())
    run = sam_solve(params, SolverConfig(tol=0, max_iter=args.iters), system=system)
    ks = run.trace.column("k")
    gap = run.trace.column("psi") - psi_star
    bound = convergence_bound(ks, z0, ref.z, system)
    print(f"Psi* = {psi_star:.10g}")
    print("    k        gap      bound   ratio")
    for k in sorted({1, 2, 5, 10, 20, 50, 100, 200, args.iters}):
        if k <= len(ks):
            i = k - 1
            print(f"{k:5d}  {gap[i]:9.3e}  {bound[i]:9.3e}  {gap[i] / bound[i]:6.3f}")
    print("bound holds at every k:", bool(np.all(gap <= bound)))


if __name__ == "__main__":
    main()
