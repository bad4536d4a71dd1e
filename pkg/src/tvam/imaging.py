"""NetPBM I/O, blur-plus-noise synthesis and reconstruction metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import KernelSpec, make_kernel, unvec, vec

__all__ = [
    "NetpbmError", "load_image", "save_image", "DegradationSpec", "degrade",
    "snr_db", "mu_auto",
]

SNR_CAP_DB = 300.0


class NetpbmError(ValueError):
    pass


def _read_token(buf, pos):
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise NetpbmError("truncated header")
    return buf[start:pos], pos


def load_image(path):
    """Read a binary P5 (grey) or P6 (RGB) file scaled into ``[0, 1]``.

    Grey images come back as ``(H, W)`` arrays, colour ones as ``(H, W, 3)``.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise NetpbmError(f"{path}: not a binary PGM/PPM file (magic {magic!r})")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise NetpbmError(f"{path}: bad header field {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise NetpbmError(f"{path}: invalid header values {fields}")
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise NetpbmError(f"{path}: missing whitespace after header")
    pos += 1
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    payload = buf[pos:pos + count * dtype.itemsize]
    if len(payload) < count * dtype.itemsize:
        raise NetpbmError(f"{path}: truncated pixel data")
    data = np.frombuffer(payload, dtype=dtype).astype(float) / maxval
    if channels == 1:
        return data.reshape(height, width)
    return data.reshape(height, width, 3)


def save_image(image, path, maxval=255):
    """Write ``image`` (values clamped to ``[0, 1]``) as P5 or P6."""
    image = np.asarray(image, dtype=float)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    if image.ndim == 2:
        magic = b"P5"
    elif image.ndim == 3 and image.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot store image of shape {image.shape} as NetPBM")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must lie in 1..65535")
    dtype = ">u2" if maxval > 255 else "u1"
    q = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(dtype)
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"%s\n%d %d\n%d\n" % (magic, w, h, maxval))
        fh.write(q.tobytes())


@dataclass(frozen=True)
class DegradationSpec:
    kernel: KernelSpec
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise level must be nonnegative")
        if isinstance(self.kernel, str):
            object.__setattr__(self, "kernel", KernelSpec.parse(self.kernel))


def degrade(x, spec: DegradationSpec):
    """Blur ``x`` periodically and add Gaussian noise, channel by channel.

    Returns the observation (same shape as ``x``) and the blur operator.
    Channel ``c`` draws its noise from the stream seeded by ``(seed, c)``.
    """
    x = np.asarray(x, dtype=float)
    channels = x.shape[2] if x.ndim == 3 else 1
    K = make_kernel(spec.kernel, x.shape[:2], channels)
    f = unvec(K.apply(vec(x)), x.shape)
    if spec.sigma > 0:
        planes = f[:, :, None] if f.ndim == 2 else f
        for c in range(channels):
            rng = np.random.default_rng([spec.seed, c])
            planes[:, :, c] += spec.sigma * rng.standard_normal(x.shape[:2])
    return f, K


def snr_db(x_rec, x_true):
    """``20 log10(|x_true - mean(x_true)| / |x_rec - x_true|)``, capped at 300 dB."""
    x_rec = np.asarray(x_rec, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_rec.shape != x_true.shape:
        raise ValueError(f"shape mismatch {x_rec.shape} vs {x_true.shape}")
    err = np.linalg.norm(x_rec - x_true)
    if err < 1e-15:
        return SNR_CAP_DB
    sig = np.linalg.norm(x_true - x_true.mean())
    if sig == 0:
        return -SNR_CAP_DB
    return float(min(20.0 * np.log10(sig / err), SNR_CAP_DB))


def mu_auto(sigma):
    """Fidelity weight ``0.05 / sigma^2``."""
    if not sigma > 0:
        raise ValueError("mu cannot be derived from a zero noise level; supply it explicitly")
    return 0.05 / sigma ** 2
