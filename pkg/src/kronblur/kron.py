"""Kronecker-product approximation of spatially invariant blur operators.

The mn x mn blur matrix A induced by an image-sized PSF P admits an
expansion A = sum_i K_i kron H_i whose terms come from the SVD of a
weighted copy of P. The weighting is what makes the expansion optimal:
for both boundary conditions there is an invertible scaling P -> Pbar
such that

  || A - A_s ||_F = || Pbar - sum_{i<=s} sigma_i u_i v_i^T ||_F,

so truncating the SVD of Pbar after s terms minimizes the operator
error among all Kronecker expansions of that length, and the error
equals sqrt(sigma_{s+1}^2 + ... ). The scalings are:

  zero BC        Pbar = W_a P W_b with diagonal weights
                 W_a[i,i] = sqrt(m - |i - l|), W_b[j,j] = sqrt(n - |j - q|)
  reflective BC  Pbar = R_m P R_n^T where R_n^T R_n = T_n and T_n is the
                 symmetric Toeplitz matrix with first row [n 1 0 1 0 ...]

Each SVD triple maps back to structured factors through the band rules
in ``structured``: with a_i = sqrt(sigma_i) W_a^{-1} u_i (zero) or
sqrt(sigma_i) R_m^{-1} u_i (reflective), H_i = toep(a_i, l) plus the
matching Hankel part under reflective boundaries; K_i likewise from
v_i with anchor q. Applying A_s to an image X never forms A:
A_s vec(X) = vec(sum_i H_i X K_i^T).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ArgumentError, CapacityError, NumericError
from .psf import DENSE_OPERATOR_GUARD, BoundaryCondition, Psf, pad_to
from .structured import StructuredFactor, factor_apply, factor_to_dense, toep, toep_plus_hank


@dataclass(frozen=True)
class WeightedPsf:
    """PSF scaled so that SVD truncation error equals operator error."""

    pbar: np.ndarray = field(repr=False)
    bc: BoundaryCondition
    # Zero BC carries the diagonal weights, reflective the upper
    # Cholesky factors of the fold Gram matrices; unused pair is None.
    row_weights: np.ndarray | None = field(repr=False, default=None)
    col_weights: np.ndarray | None = field(repr=False, default=None)
    row_chol: np.ndarray | None = field(repr=False, default=None)
    col_chol: np.ndarray | None = field(repr=False, default=None)


@dataclass(frozen=True)
class KronTerm:
    sigma: float
    H: StructuredFactor
    K: StructuredFactor


@dataclass(frozen=True)
class KronOperator:
    """Truncated expansion A_s = sum_i K_i kron H_i for an m x n image."""

    terms: tuple[KronTerm, ...]
    shape: tuple[int, int]
    bc: BoundaryCondition
    sigma: np.ndarray = field(repr=False)
    s: int
    rank: int
    eps: float

    def truncate(self, s: int) -> "KronOperator":
        """A shorter expansion sharing this operator's factors."""
        s = int(s)
        if not 1 <= s <= len(self.terms):
            raise ArgumentError(f"s={s} outside 1..{len(self.terms)}")
        return KronOperator(
            terms=self.terms[:s],
            shape=self.shape,
            bc=self.bc,
            sigma=self.sigma,
            s=s,
            rank=self.rank,
            eps=truncation_error(self.sigma, s),
        )


def _axis_weights(n: int, center: int) -> np.ndarray:
    idx = np.arange(1, n + 1)
    return np.sqrt(n - np.abs(idx - center))


def weight_zero_bc(psf: Psf) -> WeightedPsf:
    """Diagonal row/column scaling for the zero-boundary operator."""
    m, n = psf.shape
    if m != n:
        raise ArgumentError(f"weighting needs a square PSF, got {m}x{n}; pad first")
    l, q = psf.center
    wa = _axis_weights(m, l)
    wb = _axis_weights(n, q)
    pbar = wa[:, None] * psf.values * wb[None, :]
    return WeightedPsf(pbar=pbar, bc=BoundaryCondition.ZERO, row_weights=wa, col_weights=wb)


def _fold_gram(n: int) -> np.ndarray:
    # Gram matrix of [Toeplitz + Hankel] columns under reflection: n on
    # the diagonal, 1 at odd distances where the fold overlaps itself.
    row = np.zeros(n)
    row[0] = float(n)
    row[1::2] = 1.0
    return scipy.linalg.toeplitz(row)


def weight_reflective(psf: Psf) -> WeightedPsf:
    """Cholesky-based scaling for the reflective-boundary operator."""
    m, n = psf.shape
    if m != n:
        raise ArgumentError(f"weighting needs a square PSF, got {m}x{n}; pad first")
    try:
        rm = np.linalg.cholesky(_fold_gram(m)).T
        rn = np.linalg.cholesky(_fold_gram(n)).T
    except np.linalg.LinAlgError as exc:  # pragma: no cover - gram is SPD
        raise NumericError(f"fold Gram factorization failed: {exc}") from exc
    pbar = rm @ psf.values @ rn.T
    return WeightedPsf(pbar=pbar, bc=BoundaryCondition.REFLECTIVE, row_chol=rm, col_chol=rn)


def svd(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD M = U diag(sigma) V^T with orthonormal square U, V.

    Thin wrapper over LAPACK; exists so callers get domain errors and a
    single convention (V returned, not V^T) everywhere.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ArgumentError("SVD input must be a nonempty 2-D array")
    if not np.all(np.isfinite(M)):
        raise ArgumentError("SVD input has non-finite entries")
    try:
        U, sigma, Vt = np.linalg.svd(M, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed to converge: {exc}") from exc
    return U, sigma, Vt.T


def truncation_error(sigma: np.ndarray, s: int) -> float:
    """Operator-norm error ||A - A_s||_F = sqrt(sum_{i>s} sigma_i^2)."""
    sigma = np.asarray(sigma, dtype=float)
    s = int(s)
    if not 0 <= s <= sigma.size:
        raise ArgumentError(f"s={s} outside 0..{sigma.size}")
    return float(np.sqrt(np.sum(sigma[s:] ** 2)))


def decompose(
    psf: Psf,
    bc: BoundaryCondition,
    s: int | None = None,
    shape: tuple[int, int] | None = None,
) -> KronOperator:
    """Build the s-term Kronecker expansion of the blur operator.

    The PSF is zero-padded to ``shape`` (default: its own shape) so the
    factors match the image size. ``s=None`` keeps every term above the
    numerical rank cutoff; zero-sigma terms are never silently dropped
    when an explicit s asks for them.
    """
    if shape is not None:
        psf = pad_to(psf, shape[0], shape[1])
    m, n = psf.shape
    l, q = psf.center
    weighted = weight_zero_bc(psf) if bc is BoundaryCondition.ZERO else weight_reflective(psf)
    U, sigma, V = svd(weighted.pbar)
    cutoff = sigma[0] * max(m, n) * np.finfo(float).eps if sigma.size else 0.0
    rank = int(np.count_nonzero(sigma > cutoff))
    if s is None:
        s = max(rank, 1)
    s = int(s)
    if not 1 <= s <= min(m, n):
        raise ArgumentError(f"s={s} outside 1..{min(m, n)}")

    terms = []
    for i in range(s):
        root = np.sqrt(sigma[i])
        if bc is BoundaryCondition.ZERO:
            a = root * U[:, i] / weighted.row_weights
            b = root * V[:, i] / weighted.col_weights
            H = toep(a, l)
            K = toep(b, q)
        else:
            a = root * scipy.linalg.solve_triangular(weighted.row_chol, U[:, i], lower=False)
            b = root * scipy.linalg.solve_triangular(weighted.col_chol, V[:, i], lower=False)
            H = toep_plus_hank(a, l)
            K = toep_plus_hank(b, q)
        terms.append(KronTerm(sigma=float(sigma[i]), H=H, K=K))

    sigma = sigma.copy()
    sigma.flags.writeable = False
    return KronOperator(
        terms=tuple(terms),
        shape=(m, n),
        bc=bc,
        sigma=sigma,
        s=s,
        rank=rank,
        eps=truncation_error(sigma, s),
    )


def _check_image(op: KronOperator, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != op.shape:
        raise ArgumentError(f"image shape {X.shape} does not match operator shape {op.shape}")
    return X


def kron_apply(op: KronOperator, X: np.ndarray) -> np.ndarray:
    """A_s applied to an image: sum_i H_i X K_i^T."""
    X = _check_image(op, X)
    Y = np.zeros_like(X)
    for term in op.terms:
        Z = factor_apply(term.H, X)
        Y += factor_apply(term.K, Z.T).T
    return Y


def kron_apply_adjoint(op: KronOperator, Y: np.ndarray) -> np.ndarray:
    """A_s^T applied to an image: sum_i H_i^T Y K_i."""
    Y = _check_image(op, Y)
    X = np.zeros_like(Y)
    for term in op.terms:
        Z = factor_apply(term.H, Y, mode="left_transpose")
        X += factor_apply(term.K, Z.T, mode="left_transpose").T
    return X


def kron_to_dense(op: KronOperator) -> np.ndarray:
    """Materialize A_s as an mn x mn array (guarded)."""
    m, n = op.shape
    if m * n > DENSE_OPERATOR_GUARD:
        raise CapacityError(f"dense operator of size {m * n} exceeds guard {DENSE_OPERATOR_GUARD}")
    A = np.zeros((m * n, m * n))
    for term in op.terms:
        A += np.kron(factor_to_dense(term.K), factor_to_dense(term.H))
    return A
