"""Shared loop-level reference implementations.

These oracles intentionally mirror the index rules directly with Python
loops instead of reusing library code, so library bugs cannot hide behind
shared helpers. Slow is fine at test sizes.
"""

import numpy as np
import pytest


def toeplitz_oracle(c, j):
    c = np.asarray(c, dtype=float)
    n = c.size
    T = np.zeros((n, n))
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            d = j + i - k
            if 1 <= d <= n:
                T[i - 1, k - 1] = c[d - 1]
    return T


def hankel_oracle(c, j):
    c = np.asarray(c, dtype=float)
    n = c.size
    H = np.zeros((n, n))
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            d = i + k + j - 1
            if d <= n:
                H[i - 1, k - 1] = c[d - 1]
            elif 1 <= d - 2 * n <= j - 1:
                H[i - 1, k - 1] = c[d - 2 * n - 1]
    return H


def blur_oracle(psf_values, center, X, bc):
    """Pixelwise convolution sum with explicit boundary handling."""
    P = np.asarray(psf_values, dtype=float)
    X = np.asarray(X, dtype=float)
    rows, cols = P.shape
    l, q = center
    m, n = X.shape
    Y = np.zeros((m, n))
    for i in range(m):
        for k in range(n):
            acc = 0.0
            for a in range(rows):
                for b in range(cols):
                    # PSF entry (a+1, b+1) weights source pixel shifted by
                    # (a+1-l, b+1-q) relative to the output pixel.
                    si = i - (a - (l - 1))
                    sk = k - (b - (q - 1))
                    if bc == "zero":
                        if 0 <= si < m and 0 <= sk < n:
                            acc += P[a, b] * X[si, sk]
                    else:
                        # single reflection off each edge
                        if si < 0:
                            si = -si - 1
                        elif si >= m:
                            si = 2 * m - si - 1
                        if sk < 0:
                            sk = -sk - 1
                        elif sk >= n:
                            sk = 2 * n - sk - 1
                        acc += P[a, b] * X[si, sk]
            Y[i, k] = acc
    return Y


def random_psf(rng, rows, cols=None):
    from kronblur import Psf

    cols = rows if cols is None else cols
    vals = rng.random((rows, cols)) + 0.05
    vals /= vals.sum()
    center = (int(rng.integers(1, rows + 1)), int(rng.integers(1, cols + 1)))
    return Psf(vals, center)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
