"""Point spread functions and the blur operators they induce.

A PSF is a nonnegative array P that sums to one together with a 1-based
center (l, q) marking which entry sits on the optical axis. Blurring an
m x n image X convolves it with P relative to that center:

  Y(i, j) = sum_{a,b} P(a, b) * Xe(i - a + l, j - b + q)

where Xe extends X past its borders according to the boundary
condition: zero (black frame) or reflective (Xe(1-t) = X(t) across each
edge). Under zero boundaries the induced operator on vec(X) is block
Toeplitz with Toeplitz blocks; reflective boundaries add the Hankel
reflection terms.

vec/unvec use column stacking, matching the Kronecker identity
vec(H X K^T) = (K kron H) vec(X) used everywhere downstream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, CapacityError
from .rand import stream

# Ceiling on rows*cols for any dense operator materialization.
DENSE_OPERATOR_GUARD = 4096

_SHAKE_MOVES = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


class BoundaryCondition(enum.Enum):
    ZERO = "zero"
    REFLECTIVE = "reflective"


@dataclass(frozen=True)
class Psf:
    """Normalized kernel with a 1-based center (l, q)."""

    values: np.ndarray
    center: tuple[int, int]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise ArgumentError("PSF must be a nonempty 2-D array")
        if not np.all(np.isfinite(v)):
            raise ArgumentError("PSF has non-finite entries")
        if np.any(v < 0):
            raise ArgumentError("PSF entries must be nonnegative")
        total = float(v.sum())
        if abs(total - 1.0) > 1e-8:
            raise ArgumentError(f"PSF must sum to 1, got {total!r}")
        l, q = (int(self.center[0]), int(self.center[1]))
        if not (1 <= l <= v.shape[0] and 1 <= q <= v.shape[1]):
            raise ArgumentError(f"PSF center {(l, q)} outside array of shape {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "center", (l, q))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _check_odd_size(size: int) -> int:
    size = int(size)
    if size < 3 or size % 2 == 0:
        raise ArgumentError(f"PSF size must be odd and >= 3, got {size}")
    return size


def psf_gaussian(size: int, sigma: float) -> Psf:
    """Isotropic Gaussian kernel, truncated to size x size and normalized.

    The result is exactly separable (outer product of two 1-D
    profiles), so the induced blur operator has Kronecker rank one.
    """
    size = _check_odd_size(size)
    sigma = float(sigma)
    if sigma <= 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    c = size // 2
    d = np.arange(size) - c
    if sigma < 1e-3:
        profile = (d == 0).astype(float)
    else:
        profile = np.exp(-0.5 * (d / sigma) ** 2)
    grid = np.outer(profile, profile)
    return Psf(grid / grid.sum(), (c + 1, c + 1))


def psf_disk(size: int, radius: float) -> Psf:
    """Uniform disk (defocus) kernel of the given radius."""
    size = _check_odd_size(size)
    radius = float(radius)
    if not 0 < radius <= (size - 1) / 2:
        raise ArgumentError(f"radius must satisfy 0 < r <= {(size - 1) / 2}, got {radius}")
    c = size // 2
    d = np.arange(size) - c
    mask = (d[:, None] ** 2 + d[None, :] ** 2) <= radius**2
    return Psf(mask / mask.sum(), (c + 1, c + 1))


def psf_shake(size: int, steps: int, seed: int) -> Psf:
    """Camera-shake kernel from a seeded 8-neighbor random walk.

    The walk starts at the center, deposits unit mass at every visited
    cell (start included), and clamps at the array border. The center
    is the walk origin; the mass peak may land elsewhere.
    """
    size = _check_odd_size(size)
    steps = int(steps)
    if steps < 1:
        raise ArgumentError(f"steps must be >= 1, got {steps}")
    rng = stream(seed, "shake")
    c = size // 2
    counts = np.zeros((size, size))
    r = c
    q = c
    counts[r, q] = 1.0
    for move in rng.integers(0, len(_SHAKE_MOVES), size=steps):
        dr, dq = _SHAKE_MOVES[move]
        r = min(max(r + dr, 0), size - 1)
        q = min(max(q + dq, 0), size - 1)
        counts[r, q] += 1.0
    return Psf(counts / counts.sum(), (c + 1, c + 1))


def pad_to(psf: Psf, m: int, n: int) -> Psf:
    """Zero-pad a PSF to m x n, keeping its center near the middle.

    Padding with zeros does not change the induced blur operator, it
    only reshapes the array so the weighted SVD runs at image size.
    """
    m = int(m)
    n = int(n)
    rows, cols = psf.shape
    if rows > m or cols > n:
        raise ArgumentError(f"cannot pad PSF of shape {psf.shape} to smaller {(m, n)}")
    l, q = psf.center
    # Ideal center is the middle pixel; clamp so the kernel still fits.
    lc = min(max(m // 2 + 1, l), m - rows + l)
    qc = min(max(n // 2 + 1, q), n - cols + q)
    out = np.zeros((m, n))
    r0 = lc - l
    c0 = qc - q
    out[r0 : r0 + rows, c0 : c0 + cols] = psf.values
    return Psf(out, (lc, qc))


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X, dtype=float).flatten(order="F")


def unvec(v: np.ndarray, m: int, n: int) -> np.ndarray:
    """Inverse of vec for an m x n image."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != m * n:
        raise ArgumentError(f"expected a vector of length {m * n}, got shape {v.shape}")
    return v.reshape((m, n), order="F")


def blur_direct(psf: Psf, X: np.ndarray, bc: BoundaryCondition) -> np.ndarray:
    """Blur X by summing shifted copies; the reference implementation.

    Cost is O(nnz(P) * m * n); exact for both boundary conditions. The
    PSF may not exceed the image in either dimension, which also keeps
    reflective extension to a single fold per edge.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ArgumentError("image must be 2-D")
    m, n = X.shape
    rows, cols = psf.shape
    if rows > m or cols > n:
        raise ArgumentError(f"PSF of shape {psf.shape} larger than image {(m, n)}")
    l, q = psf.center
    pad = ((rows - l, l - 1), (cols - q, q - 1))
    mode = "constant" if bc is BoundaryCondition.ZERO else "symmetric"
    Xp = np.pad(X, pad, mode=mode)
    Y = np.zeros_like(X)
    for a0, b0 in zip(*np.nonzero(psf.values)):
        r0 = rows - 1 - a0
        c0 = cols - 1 - b0
        Y += psf.values[a0, b0] * Xp[r0 : r0 + m, c0 : c0 + n]
    return Y


def blur_matrix_dense(psf: Psf, bc: BoundaryCondition, shape: tuple[int, int]) -> np.ndarray:
    """Materialize the mn x mn blur matrix column by column (guarded)."""
    m, n = (int(shape[0]), int(shape[1]))
    if m < 1 or n < 1:
        raise ArgumentError(f"invalid image shape {(m, n)}")
    if m * n > DENSE_OPERATOR_GUARD:
        raise CapacityError(f"dense operator of size {m * n} exceeds guard {DENSE_OPERATOR_GUARD}")
    A = np.empty((m * n, m * n))
    E = np.zeros((m, n))
    for t in range(m * n):
        E[t % m, t // m] = 1.0
        A[:, t] = vec(blur_direct(psf, E, bc))
        E[t % m, t // m] = 0.0
    return A
