"""Linear operators: periodic finite differences, circulant blurs, dense matrices.

Vectors in x-space follow the column-major pixel ordering: for an image with
``H`` rows, ``W`` columns and ``C`` channels, entry ``c*H*W + col*H + row``
holds pixel ``(row, col)`` of channel ``c``.  With this ordering the
horizontal difference of pixel ``i`` reads ``x[i + H] - x[i]``.

Analysis operators return arrays of shape ``(d, n_groups)``: ``d`` contiguous
planes, plane ``j`` holding the ``j``-th component of every group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import scipy.fft

__all__ = [
    "vec", "unvec", "GradField", "LinearMap", "DenseOp", "CirculantOp",
    "PeriodicTV", "FrameAnalysis", "grad", "div_adjoint", "KernelSpec",
    "kernel_array", "make_kernel", "circ_eigs", "gen_gaussian_matrix",
    "gen_tight_frame", "gen_dct",
]


def vec(image):
    """Flatten an ``(H, W)`` or ``(H, W, C)`` array to the column-major vector."""
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = image[:, :, None]
    return np.ascontiguousarray(image.transpose(2, 1, 0)).reshape(-1)


def unvec(v, shape):
    """Inverse of :func:`vec`; ``shape`` is ``(H, W)`` or ``(H, W, C)``."""
    h, w = shape[:2]
    c = shape[2] if len(shape) == 3 else 1
    grid = np.asarray(v).reshape(c, w, h).transpose(2, 1, 0)
    return grid[:, :, 0].copy() if len(shape) == 2 else grid.copy()


def _to_grid(v, h, w, c):
    # (C, H, W) view of a column-major vector
    return v.reshape(c, w, h).transpose(0, 2, 1)


def _from_grid(g):
    return np.ascontiguousarray(g.transpose(0, 2, 1)).reshape(-1)


@dataclass(frozen=True)
class GradField:
    """Grouped coefficients stored as ``group_dim`` contiguous planes.

    ``data[j, i]`` is component ``j`` of group ``i`` (groups indexed from 0).
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("GradField data must have shape (group_dim, n_groups)")
        object.__setattr__(self, "data", data)

    @property
    def group_dim(self):
        return self.data.shape[0]

    @property
    def n_groups(self):
        return self.data.shape[1]

    def group(self, i):
        return self.data[:, i].copy()

    def interleave(self):
        """Flat array with the ``d`` values of each group adjacent."""
        return self.data.T.reshape(-1).copy()

    @classmethod
    def deinterleave(cls, flat, group_dim):
        flat = np.asarray(flat, dtype=float)
        if flat.size % group_dim:
            raise ValueError("length is not a multiple of group_dim")
        return cls(flat.reshape(-1, group_dim).T.copy())

    def planes(self):
        """Flat array with plane ``j`` occupying a contiguous block."""
        return self.data.reshape(-1).copy()


class LinearMap:
    """Minimal forward/adjoint interface shared by every operator here."""

    shape: tuple

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError

    def __call__(self, x):
        return self.apply(x)

    def dense(self):
        """Explicit matrix, assembled column by column (small sizes only)."""
        n = self.shape[1]
        eye = np.eye(n)
        return np.column_stack([self.apply(eye[:, j]) for j in range(n)])


class DenseOp(LinearMap):
    def __init__(self, entries):
        entries = np.array(entries, dtype=float)
        if entries.ndim != 2:
            raise ValueError("DenseOp needs a 2-D array")
        entries.setflags(write=False)
        self.entries = entries
        self.shape = entries.shape

    def apply(self, x):
        return self.entries @ x

    def adjoint(self, y):
        return self.entries.T @ y

    def dense(self):
        return np.array(self.entries)


class CirculantOp(LinearMap):
    """Periodic-boundary convolution with ``kernel``, applied per channel.

    The kernel's centre pixel ``((kh-1)//2, (kw-1)//2)`` is mapped to the
    origin, so a one-pixel kernel ``[[1]]`` is the identity.
    """

    def __init__(self, kernel, dims, channels=1):
        kernel = np.array(kernel, dtype=float)
        if kernel.ndim != 2:
            raise ValueError("kernel must be 2-D")
        self.kernel = kernel
        self.dims = (int(dims[0]), int(dims[1]))
        self.channels = int(channels)
        self.eigs = circ_eigs(kernel, self.dims)
        self.eigs.setflags(write=False)
        self._reigs = self.eigs[:, : self.dims[1] // 2 + 1]
        n = self.dims[0] * self.dims[1] * self.channels
        self.shape = (n, n)

    def _filter(self, x, eigs):
        h, w = self.dims
        g = _to_grid(np.asarray(x, dtype=float), h, w, self.channels)
        out = scipy.fft.irfft2(scipy.fft.rfft2(g) * eigs, s=(h, w))
        return _from_grid(out)

    def apply(self, x):
        return self._filter(x, self._reigs)

    def adjoint(self, y):
        return self._filter(y, np.conj(self._reigs))

    def gram_eigs(self):
        """Eigenvalues of ``K^T K`` on one channel's frequency grid."""
        return np.abs(self.eigs) ** 2


class PeriodicTV:
    """Isotropic TV analysis operator ``D`` with wraparound differences.

    Plane 0 holds horizontal differences ``x[row, col+1] - x[row, col]``,
    plane 1 vertical ones ``x[row+1, col] - x[row, col]``, indices mod the
    grid size.
    """

    group_dim = 2
    is_tight = False

    def __init__(self, dims, channels=1):
        self.dims = (int(dims[0]), int(dims[1]))
        self.channels = int(channels)
        self.n = self.dims[0] * self.dims[1] * self.channels
        self.n_groups = self.n

    def apply(self, x):
        h, w = self.dims
        g = _to_grid(np.asarray(x, dtype=float), h, w, self.channels)
        out = np.empty((2, self.n))
        out[0] = _from_grid(np.roll(g, -1, axis=2) - g)
        out[1] = _from_grid(np.roll(g, -1, axis=1) - g)
        return out

    def adjoint(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (2, self.n):
            raise ValueError(f"expected field of shape (2, {self.n}), got {z.shape}")
        h, w, c = self.dims[0], self.dims[1], self.channels
        z1 = _to_grid(z[0], h, w, c)
        z2 = _to_grid(z[1], h, w, c)
        out = np.roll(z1, 1, axis=2) - z1 + np.roll(z2, 1, axis=1) - z2
        return _from_grid(out)

    def gram_eigs(self):
        """Eigenvalues of ``D^T D`` on one channel's frequency grid."""
        h, w = self.dims
        sv = 4 * np.sin(np.pi * np.arange(h) / h) ** 2
        sh = 4 * np.sin(np.pi * np.arange(w) / w) ** 2
        return sv[:, None] + sh[None, :]


class FrameAnalysis:
    """Analysis operator given by a dense ``p x n`` matrix, one value per group.

    ``variant`` is ``"tight"`` for a random tight frame or ``"dct"``; both have
    orthonormal columns, which is verified on construction.
    """

    group_dim = 1

    def __init__(self, matrix: DenseOp, variant="tight", check=True):
        if variant not in ("tight", "dct"):
            raise ValueError(f"unknown analysis variant {variant!r}")
        self.matrix = matrix if isinstance(matrix, DenseOp) else DenseOp(matrix)
        self.variant = variant
        self.n_groups, self.n = self.matrix.shape
        if check:
            a = self.matrix.entries
            err = np.linalg.norm(a.T @ a - np.eye(self.n))
            if err > 1e-10 * max(1.0, np.sqrt(self.n)):
                raise ValueError(f"D^T D deviates from identity by {err:.2e}")
        self.is_tight = True

    def apply(self, x):
        return (self.matrix.entries @ x)[None, :]

    def adjoint(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (1, self.n_groups):
            raise ValueError(f"expected field of shape (1, {self.n_groups}), got {z.shape}")
        return self.matrix.entries.T @ z[0]


def grad(x):
    """Periodic forward differences of a single-channel 2-D image."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("grad expects a single-channel 2-D image")
    return GradField(PeriodicTV(x.shape).apply(vec(x)))


def div_adjoint(z, dims):
    """``D^T z`` for a :class:`GradField` on an image of shape ``dims``."""
    data = z.data if isinstance(z, GradField) else np.asarray(z)
    if data.shape[0] != 2 or data.shape[1] != dims[0] * dims[1]:
        raise ValueError(f"field of shape {data.shape} does not match dims {tuple(dims)}")
    return unvec(PeriodicTV(dims).adjoint(data), tuple(dims))


@dataclass(frozen=True)
class KernelSpec:
    """Blur kernel description: ``gaussian``, ``motion``, ``average`` or ``delta``.

    ``size`` is the kernel width (or the motion length) and ``param`` the
    Gaussian sigma or the motion angle in degrees.
    """

    kind: str
    size: float = 1
    param: float = 0.0

    _GRAMMAR = {"gaussian": 2, "motion": 2, "average": 1, "delta": 0}

    def __post_init__(self):
        if self.kind not in self._GRAMMAR:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind != "delta" and not self.size > 0:
            raise ValueError("kernel size/length must be positive")
        if self.kind == "gaussian" and not self.param > 0:
            raise ValueError("gaussian sigma must be positive")
        if self.kind in ("gaussian", "average") and int(self.size) != self.size:
            raise ValueError("kernel size must be an integer")

    @classmethod
    def parse(cls, text):
        """Parse ``gaussian:SIZE:SIGMA``, ``motion:LEN:THETA``, ``average:SIZE`` or ``delta``."""
        parts = text.strip().lower().split(":")
        kind = parts[0]
        if kind not in cls._GRAMMAR or len(parts) - 1 != cls._GRAMMAR[kind]:
            raise ValueError(f"bad kernel spec {text!r}")
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"bad kernel spec {text!r}") from None
        return cls(kind, *nums)

    def label(self):
        """Short label in the style ``G(11,9)``, ``M(41,90)``, ``A(3)``."""
        fmt = lambda v: re.sub(r"\.0$", "", f"{v:g}")
        if self.kind == "gaussian":
            return f"G({fmt(self.size)},{fmt(self.param)})"
        if self.kind == "motion":
            return f"M({fmt(self.size)},{fmt(self.param)})"
        if self.kind == "average":
            return f"A({fmt(self.size)})"
        return "delta"


def _gaussian_kernel(size, sigma):
    r = (size - 1) / 2
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    h = np.exp(-(x * x + y * y) / (2 * sigma * sigma))
    h[h < np.finfo(float).eps * h.max()] = 0
    return h / h.sum()


def _motion_kernel(length, theta):
    # Anti-aliased line of unit width: each pixel weighted by how close its
    # centre lies to the segment, end pixels tapered by distance past the end.
    length = max(1.0, float(length))
    half = (length - 1) / 2
    phi = np.mod(theta, 180) / 180 * np.pi
    cosphi, sinphi = np.cos(phi), np.sin(phi)
    xsign = 1.0 if cosphi >= 0 else -1.0
    width = 1.0
    eps = np.sqrt(np.finfo(float).eps)

    sx = np.fix(half * cosphi + width * xsign - length * eps)
    sy = np.fix(half * sinphi + width - length * eps)
    x, y = np.meshgrid(np.arange(0, sx + xsign, xsign), np.arange(0, sy + 1))
    dist = y * cosphi - x * sinphi
    rad = np.hypot(x, y)
    last = (rad >= half) & (np.abs(dist) <= width)
    past = half - np.abs((x[last] + dist[last] * sinphi) / cosphi)
    dist[last] = np.hypot(dist[last], past)
    dist = np.maximum(width + eps - np.abs(dist), 0)

    r, c = dist.shape
    h = np.zeros((2 * r - 1, 2 * c - 1))
    h[:r, :c] = np.rot90(dist, 2)
    h[r - 1:, c - 1:] = dist
    if cosphi > 0:
        h = np.flipud(h)
    return h / h.sum()


def kernel_array(spec: KernelSpec):
    """Nonnegative point-spread function summing to one."""
    if spec.kind == "gaussian":
        return _gaussian_kernel(int(spec.size), spec.param)
    if spec.kind == "average":
        s = int(spec.size)
        return np.full((s, s), 1.0 / (s * s))
    if spec.kind == "motion":
        return _motion_kernel(spec.size, spec.param)
    return np.ones((1, 1))


def make_kernel(spec, dims, channels=1):
    """Build the circulant blur for ``spec`` (a :class:`KernelSpec` or its string form)."""
    if isinstance(spec, str):
        spec = KernelSpec.parse(spec)
    return CirculantOp(kernel_array(spec), dims, channels)


def circ_eigs(kernel, dims):
    """DFT eigenvalues of periodic convolution with ``kernel`` on a ``dims`` grid."""
    kernel = np.asarray(kernel, dtype=float)
    kh, kw = kernel.shape
    h, w = dims
    if kh > h or kw > w:
        raise ValueError(f"kernel {kernel.shape} larger than image {tuple(dims)}")
    pad = np.zeros((h, w))
    pad[:kh, :kw] = kernel
    pad = np.roll(pad, (-((kh - 1) // 2), -((kw - 1) // 2)), axis=(0, 1))
    return scipy.fft.fft2(pad)


def gen_gaussian_matrix(m, n, seed):
    """``m x n`` standard normal matrix with unit-norm columns."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    a = np.random.default_rng(seed).standard_normal((m, n))
    return DenseOp(a / np.linalg.norm(a, axis=0))


def gen_tight_frame(p, n, seed):
    """First ``n`` columns of the Q factor of a ``p x n`` Gaussian matrix."""
    if p < n:
        raise ValueError(f"tight frame needs p >= n, got p={p}, n={n}")
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((p, n)))
    return DenseOp(q[:, :n])


def gen_dct(n):
    """Orthonormal type-II DCT matrix."""
    if n < 1:
        raise ValueError("n must be positive")
    return DenseOp(scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0))
