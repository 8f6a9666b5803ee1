"""Banded Toeplitz and Hankel factors with dense and FFT apply paths.

A factor is an n x n matrix generated by a length-n vector ``c`` and a
band anchor ``j`` (1-based). With 1-based indices i, k:

  Toeplitz   T[i,k] = c[j+i-k]        when 1 <= j+i-k <= n, else 0
  Hankel     H[i,k] = c[i+k+j-1]      when i+k+j-1 <= n
           (wrap)  = c[i+k+j-1-2n]    when 1 <= i+k+j-1-2n <= j-1, else 0

The Toeplitz rule places c[j] on the main diagonal; the Hankel rule is
its reversal companion (H is symmetric) and the wrap band carries the
coefficients that fold back past the last anti-diagonal. A reflective
boundary operator is the sum of the two with a shared generator, which
is why TOEPLITZ_PLUS_HANKEL exists as a single factor kind.

Fast application embeds the factor into a circulant of power-of-two
length M >= 2n-1 and multiplies in the Fourier domain:

  T x  = irfft(rfft(pad x) * t_hat)[:n]
  H x  = irfft(rfft(pad reverse(x)) * h_hat)[:n]

where t_hat is the spectrum of the diagonal generator and h_hat is the
spectrum of the Toeplitz matrix obtained from H by reversing columns.
Transposition conjugates t_hat (the generators are real); Hankel is
symmetric so its path is unchanged. Both paths are exact up to FFT
rounding; the dense path is preferred below DENSE_FFT_CROSSOVER where
BLAS wins over transform overhead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CapacityError

# Dense matvec beats the FFT embedding below this order on typical
# hardware; factors at or above it carry a precomputed spectrum.
DENSE_FFT_CROSSOVER = 128

# Hard ceiling for materializing any factor as a dense array.
DENSE_GUARD = 4096


class FactorKind(enum.Enum):
    TOEPLITZ = "toeplitz"
    HANKEL = "hankel"
    TOEPLITZ_PLUS_HANKEL = "toeplitz_plus_hankel"


@dataclass(frozen=True)
class FactorApplyPlan:
    """Precomputed spectra for the circulant-embedded apply."""

    length: int
    toep_hat: np.ndarray | None = field(repr=False, default=None)
    hank_hat: np.ndarray | None = field(repr=False, default=None)


@dataclass(frozen=True)
class StructuredFactor:
    """Immutable banded factor; build via toep/hank/toep_plus_hank."""

    kind: FactorKind
    c: np.ndarray = field(repr=False)
    j: int
    n: int
    dense: np.ndarray | None = field(repr=False, default=None)
    plan: FactorApplyPlan | None = field(repr=False, default=None)


def _embed_toeplitz(c: np.ndarray, j: int, length: int) -> np.ndarray:
    # Diagonal offset d = i-k carries c[j+d]; offsets 1-j..n-j cover all of c.
    n = c.size
    v = np.zeros(length)
    d = np.arange(n) - (j - 1)
    v[np.mod(d, length)] = c
    return v


def _embed_hankel_reversed(c: np.ndarray, j: int, length: int) -> np.ndarray:
    # Spectrum of H with columns reversed, which is Toeplitz with
    # diagonals g[d] = c[d+n+j] on d in [1-n, -j] and the wrap band
    # g[d] = c[d+j-n] on d in [n+1-j, n-1] (1-based c indices).
    n = c.size
    v = np.zeros(length)
    d1 = np.arange(1 - n, -j + 1)
    v[np.mod(d1, length)] = c[d1 + n + j - 1]
    if j >= 2:
        d2 = np.arange(n + 1 - j, n)
        v[np.mod(d2, length)] = c[d2 + j - n - 1]
    return v


def _build_plan(kind: FactorKind, c: np.ndarray, j: int) -> FactorApplyPlan:
    n = c.size
    length = 1 << (2 * n - 2).bit_length() if n > 1 else 1
    toep_hat = None
    hank_hat = None
    if kind in (FactorKind.TOEPLITZ, FactorKind.TOEPLITZ_PLUS_HANKEL):
        toep_hat = np.fft.rfft(_embed_toeplitz(c, j, length))
        toep_hat.flags.writeable = False
    if kind in (FactorKind.HANKEL, FactorKind.TOEPLITZ_PLUS_HANKEL):
        hank_hat = np.fft.rfft(_embed_hankel_reversed(c, j, length))
        hank_hat.flags.writeable = False
    return FactorApplyPlan(length=length, toep_hat=toep_hat, hank_hat=hank_hat)


def _dense_toeplitz(c: np.ndarray, j: int) -> np.ndarray:
    n = c.size
    idx = j + np.arange(1, n + 1)[:, None] - np.arange(1, n + 1)[None, :]
    valid = (idx >= 1) & (idx <= n)
    return np.where(valid, c[np.clip(idx, 1, n) - 1], 0.0)


def _dense_hankel(c: np.ndarray, j: int) -> np.ndarray:
    n = c.size
    s = np.arange(1, n + 1)[:, None] + np.arange(1, n + 1)[None, :] + j - 1
    out = np.where(s <= n, c[np.clip(s, 1, n) - 1], 0.0)
    wrap = (s - 2 * n >= 1) & (s - 2 * n <= j - 1)
    return np.where(wrap, c[np.clip(s - 2 * n, 1, n) - 1], out)


def _materialize(kind: FactorKind, c: np.ndarray, j: int) -> np.ndarray:
    if kind is FactorKind.TOEPLITZ:
        return _dense_toeplitz(c, j)
    if kind is FactorKind.HANKEL:
        return _dense_hankel(c, j)
    return _dense_toeplitz(c, j) + _dense_hankel(c, j)


def _make(kind: FactorKind, c, j: int) -> StructuredFactor:
    c = np.array(c, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ArgumentError("generator must be a nonempty 1-D vector")
    if not np.all(np.isfinite(c)):
        raise ArgumentError("generator has non-finite entries")
    n = c.size
    j = int(j)
    if not 1 <= j <= n:
        raise ArgumentError(f"band anchor j={j} outside 1..{n}")
    c.flags.writeable = False
    dense = None
    plan = None
    if n < DENSE_FFT_CROSSOVER:
        dense = _materialize(kind, c, j)
        dense.flags.writeable = False
    else:
        plan = _build_plan(kind, c, j)
    return StructuredFactor(kind=kind, c=c, j=j, n=n, dense=dense, plan=plan)


def toep(c, j: int) -> StructuredFactor:
    """Banded Toeplitz factor with c[j] on the main diagonal."""
    return _make(FactorKind.TOEPLITZ, c, j)


def hank(c, j: int) -> StructuredFactor:
    """Banded Hankel factor, the reversal companion of toep(c, j)."""
    return _make(FactorKind.HANKEL, c, j)


def toep_plus_hank(c, j: int) -> StructuredFactor:
    """Sum factor toep(c, j) + hank(c, j) sharing one generator."""
    return _make(FactorKind.TOEPLITZ_PLUS_HANKEL, c, j)


def factor_to_dense(factor: StructuredFactor) -> np.ndarray:
    """Materialize the factor as an n x n array (guarded)."""
    if factor.n > DENSE_GUARD:
        raise CapacityError(f"dense factor of order {factor.n} exceeds guard {DENSE_GUARD}")
    if factor.dense is not None:
        return factor.dense
    return _materialize(factor.kind, factor.c, factor.j)


def _apply_dense(factor: StructuredFactor, X: np.ndarray, transpose: bool) -> np.ndarray:
    dense = factor.dense if factor.dense is not None else factor_to_dense(factor)
    return dense.T @ X if transpose else dense @ X


def _apply_fft(factor: StructuredFactor, X: np.ndarray, transpose: bool) -> np.ndarray:
    plan = factor.plan if factor.plan is not None else _build_plan(factor.kind, factor.c, factor.j)
    n = factor.n
    length = plan.length
    out = np.zeros_like(X)
    buf = np.zeros((length, X.shape[1]))
    if plan.toep_hat is not None:
        hat = np.conj(plan.toep_hat) if transpose else plan.toep_hat
        buf[:n] = X
        out += np.fft.irfft(np.fft.rfft(buf, axis=0) * hat[:, None], n=length, axis=0)[:n]
    if plan.hank_hat is not None:
        # Hankel is symmetric: the transpose reuses the same spectrum.
        buf[:n] = X[::-1]
        out += np.fft.irfft(np.fft.rfft(buf, axis=0) * plan.hank_hat[:, None], n=length, axis=0)[:n]
    return out


def factor_apply(
    factor: StructuredFactor,
    X: np.ndarray,
    mode: str = "left",
    crossover: int | None = None,
) -> np.ndarray:
    """Compute F @ X (mode "left") or F.T @ X (mode "left_transpose").

    X may be a vector of length n or an n x p block of columns. Right
    multiplication X @ F.T is expressed by callers as
    factor_apply(F, X.T).T. ``crossover`` overrides the dense/FFT
    switch point for benchmarking either path.
    """
    if mode not in ("left", "left_transpose"):
        raise ArgumentError(f"unknown apply mode {mode!r}")
    transpose = mode == "left_transpose"
    X = np.asarray(X, dtype=float)
    vector = X.ndim == 1
    if vector:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != factor.n:
        raise ArgumentError(f"operand has {X.shape[0] if X.ndim else 0} rows, factor expects {factor.n}")
    limit = DENSE_FFT_CROSSOVER if crossover is None else int(crossover)
    if factor.n < limit:
        Y = _apply_dense(factor, X, transpose)
    else:
        Y = _apply_fft(factor, X, transpose)
    return Y[:, 0] if vector else Y
