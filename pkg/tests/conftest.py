import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from tvam import (  # noqa: E402
    FrameAnalysis, ObjectiveParams, PeriodicTV, gen_gaussian_matrix,
    gen_tight_frame, vec,
)
from tvam.imaging import DegradationSpec, degrade  # noqa: E402


def piecewise_image(h, w, seed=0):
    """Blocky test image with a few constant rectangles and a disc."""
    rng = np.random.default_rng(seed)
    img = np.full((h, w), 0.2)
    for _ in range(4):
        r0, c0 = rng.integers(0, h // 2), rng.integers(0, w // 2)
        img[r0:r0 + h // 3, c0:c0 + w // 3] = rng.uniform(0, 1)
    yy, xx = np.mgrid[:h, :w]
    img[(yy - h / 2) ** 2 + (xx - w / 3) ** 2 < (min(h, w) / 5) ** 2] = 0.9
    return img


def deblur_params(h=16, w=16, kernel="gaussian:5:1.5", sigma=1e-2, mu=None, beta=2.0 ** 7, seed=0):
    img = piecewise_image(h, w, seed)
    f, K = degrade(img, DegradationSpec(kernel, sigma, seed))
    mu = 0.05 / sigma ** 2 if mu is None else mu
    return ObjectiveParams(mu, beta, K, PeriodicTV((h, w)), vec(f)), img


def recovery_small(n=32, m=16, ratio=2, s=3, sigma=1e-3, mu=None, beta=2.0 ** 7, seed=0):
    rng = np.random.default_rng(seed)
    K = gen_gaussian_matrix(m, n, seed)
    D = FrameAnalysis(gen_tight_frame(ratio * n, n, seed + 1), "tight")
    y = np.zeros(D.n_groups)
    y[rng.choice(D.n_groups, s, replace=False)] = rng.standard_normal(s)
    x = D.adjoint(y[None])
    f = K.apply(x) + sigma * rng.standard_normal(m)
    mu = 0.05 / sigma ** 2 if mu is None else mu
    return ObjectiveParams(mu, beta, K, D, f), x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []  # result lines from test_acceptance, echoed in the terminal summary


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
