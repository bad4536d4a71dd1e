"""Independent reference computations used by the test-suite.

Everything here is written directly from the index formulas with explicit
loops or dense linear algebra, sharing no code path with the package.
"""

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize


def explicit_D(h, w):
    """Sparse (D1, D2) from 1-based column-major index formulas on an h x w grid."""
    n = h * w
    rows, cols, vals = [[], []], [[], []], [[], []]
    for i in range(1, n + 1):
        right = i + h if i <= h * (w - 1) else i - h * (w - 1)
        down = i - h + 1 if i % h == 0 else i + 1
        for p, j in enumerate((right, down)):
            rows[p] += [i - 1, i - 1]
            cols[p] += [j - 1, i - 1]
            vals[p] += [1.0, -1.0]
    return tuple(sp.csr_matrix((vals[p], (rows[p], cols[p])), shape=(n, n)) for p in range(2))


def direct_circular_conv(x, kernel):
    """Periodic convolution by the defining double sum, kernel centred at ((kh-1)//2, (kw-1)//2)."""
    h, w = x.shape
    kh, kw = kernel.shape
    ch, cw = (kh - 1) // 2, (kw - 1) // 2
    out = np.zeros_like(x, dtype=float)
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    acc += kernel[a, b] * x[(r - (a - ch)) % h, (c - (b - cw)) % w]
            out[r, c] = acc
    return out


def conv_matrix(kernel, h, w):
    """Dense matrix of periodic convolution acting on column-major vectors."""
    n = h * w
    mat = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        img = e.reshape(w, h).T
        mat[:, j] = direct_circular_conv(img, kernel).T.reshape(-1)
    return mat


def dense_W(Dmat, Kmat, c):
    return Dmat.T @ Dmat + c * Kmat.T @ Kmat


def brute_shrink(g, beta, rng, n_random=2000):
    """Minimise |z| + beta/2 |z - g|^2 by random search plus Nelder-Mead refinement."""
    g = np.asarray(g, dtype=float)
    obj = lambda z: np.linalg.norm(z) + 0.5 * beta * np.sum((z - g) ** 2)
    radius = np.linalg.norm(g) + 1.0
    cands = rng.uniform(-radius, radius, size=(n_random, g.size))
    cands = np.vstack([cands, np.zeros(g.size), g])
    best = min(cands, key=obj)
    res = minimize(obj, best, method="Nelder-Mead",
                   options=dict(xatol=1e-12, fatol=1e-15, maxiter=20000))
    return res.x if res.fun <= obj(best) else best


def phi_direct(x, Dmat, d, Kmat, f, mu):
    """Phi by explicit loops over groups (Dmat rows ordered plane by plane)."""
    dx = Dmat @ x
    n_groups = dx.size // d
    tv = 0.0
    for i in range(n_groups):
        tv += np.sqrt(sum(dx[j * n_groups + i] ** 2 for j in range(d)))
    r = Kmat @ x - f
    return tv + 0.5 * mu * float(r @ r)
