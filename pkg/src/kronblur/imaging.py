"""Test images, noise injection, quality metrics, and file formats.

Images are real m x n arrays with values in [0, 1]. The generators are
analytic stand-ins for the usual deblurring test scenes: geometric
band patterns, sparse blocks, smooth blobs, point sources. Everything
random draws from named substreams of one seed, so an image is fully
determined by (kind, m, n, seed).

Noise respects an exact level contract: the perturbation is rescaled
so that ||b_n - b|| / ||b|| equals the requested level to rounding.

Two file formats: PGM (P2 ASCII / P5 binary, maxval 255, linear
quantization with round-half-up) for images, and a plain text matrix
format (``rows cols`` header, optional ``center l q`` line for PSFs,
then row-major entries at 17 significant digits) whose round-trip is
bit-exact. Parsers report the byte offset of the first offending byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, FormatError, NumericError
from .psf import BoundaryCondition, Psf, blur_direct, psf_gaussian
from .rand import stream

IMAGE_KINDS = ("pattern1", "pattern2", "ppower", "smooth", "dot2", "dotk", "delta")
NOISE_KINDS = ("gauss", "laplace", "multiplicative")

# Cap on the dot count of the dotk scene (never above floor(mn/2)).
DOTK_MAX = 512


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    level: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ArgumentError(f"unknown noise kind {self.kind!r}")
        if not (np.isfinite(self.level) and self.level >= 0):
            raise ArgumentError(f"noise level must be >= 0, got {self.level}")


@dataclass(frozen=True)
class Metrics:
    eta: float
    gamma: float


def _radial_coords(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    ci = (m - 1) / 2.0
    cj = (n - 1) / 2.0
    di = np.abs(np.arange(m) - ci)[:, None] / ci
    dj = np.abs(np.arange(n) - cj)[None, :] / cj
    return di, dj


def _bumps(m: int, n: int, rows, cols, sig, amp) -> np.ndarray:
    ii = np.arange(m)[:, None, None]
    jj = np.arange(n)[None, :, None]
    g = amp * np.exp(-((ii - rows) ** 2 + (jj - cols) ** 2) / (2.0 * sig**2))
    return g.sum(axis=2)


def generate_image(kind: str, m: int, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic test scene with values in [0, 1]."""
    m = int(m)
    n = int(n)
    if m < 8 or n < 8:
        raise ArgumentError(f"image dimensions must be >= 8, got {(m, n)}")
    if kind not in IMAGE_KINDS:
        raise ArgumentError(f"unknown image kind {kind!r}")

    if kind == "delta":
        X = np.zeros((m, n))
        X[m // 2, n // 2] = 1.0
        return X

    if kind == "pattern1":
        # Nested rectangles: three-level bands of the Chebyshev radius.
        di, dj = _radial_coords(m, n)
        band = np.floor(np.maximum(di, dj) * 6).astype(int)
        return ((2 - band) % 3) / 2.0

    if kind == "pattern2":
        # Nested circles, phase-shifted relative to pattern1.
        di, dj = _radial_coords(m, n)
        band = np.floor(np.sqrt((di**2 + dj**2) / 2.0) * 7).astype(int)
        return ((band + 1) % 3) / 2.0

    rng = stream(seed, "image")

    if kind == "ppower":
        X = np.zeros((m, n))
        for _ in range(12):
            h = int(rng.integers(max(1, m // 16), max(2, m // 4) + 1))
            w = int(rng.integers(max(1, n // 16), max(2, n // 4) + 1))
            r0 = int(rng.integers(0, m - h + 1))
            c0 = int(rng.integers(0, n - w + 1))
            val = 0.2 + 0.8 * rng.random()
            X[r0 : r0 + h, c0 : c0 + w] = np.maximum(X[r0 : r0 + h, c0 : c0 + w], val)
        return X

    if kind == "smooth":
        # Three wide blobs. The width floor keeps the normalized
        # finite-difference gradient below 0.2 for any seed.
        k = 3
        rows = rng.random(k) * (m - 1)
        cols = rng.random(k) * (n - 1)
        sig = np.maximum(9.2, (0.25 + 0.15 * rng.random(k)) * min(m, n))
        amp = 0.5 + 0.5 * rng.random(k)
        X = _bumps(m, n, rows, cols, sig, amp)
        return X / X.max()

    if kind == "dot2":
        margin = min(3, (min(m, n) - 1) // 2)
        rows = rng.integers(margin, m - margin, size=2).astype(float)
        cols = rng.integers(margin, n - margin, size=2).astype(float)
        sig = 1.0 + rng.random(2)
        amp = 0.6 + 0.4 * rng.random(2)
        X = _bumps(m, n, rows, cols, sig, amp)
        peak = X.max()
        return X / peak if peak > 1.0 else X

    # dotk: many small Gaussian-shaped dots, count capped below mn/2.
    count = min(DOTK_MAX, (m * n) // 2)
    X = np.zeros((m, n))
    rows = rng.integers(0, m, size=count)
    cols = rng.integers(0, n, size=count)
    amps = 0.5 + 0.5 * rng.random(count)
    np.add.at(X, (rows, cols), amps)
    X = blur_direct(psf_gaussian(5, 0.9), X, BoundaryCondition.ZERO)
    return X / X.max()


def add_noise(b: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Return b + noise with ||noise|| = level * ||b|| exactly.

    Raw draws per kind: gauss = standard normal, laplace = inverse-CDF
    from uniforms, multiplicative = b * standard normal (signal
    proportional). The raw draw is then rescaled to the target norm.
    Works elementwise on any array shape; norms are over all entries.
    """
    b = np.asarray(b, dtype=float)
    norm_b = float(np.linalg.norm(b.ravel()))
    if norm_b == 0:
        raise ArgumentError("cannot scale noise against zero data")
    if spec.level == 0:
        return b.copy()
    for attempt in range(8):
        rng = stream(spec.seed, "noise", index=attempt)
        if spec.kind == "gauss":
            g = rng.standard_normal(b.shape)
        elif spec.kind == "laplace":
            u = np.maximum(rng.random(b.shape), np.finfo(float).tiny)
            g = -np.sign(u - 0.5) * np.log1p(-2.0 * np.abs(u - 0.5))
        else:
            g = b * rng.standard_normal(b.shape)
        norm_g = float(np.linalg.norm(g.ravel()))
        if norm_g > 0:
            return b + (spec.level * norm_b / norm_g) * g
    raise NumericError("noise draw degenerated to zero after retries")


def compute_metrics(x: np.ndarray, x_true: np.ndarray, b: np.ndarray, apply) -> Metrics:
    """Relative error eta = ||x - x*||/||x*|| and residual gamma = ||A x - b||/||b||.

    ``apply`` must be the exact blur operator so gamma measures the
    true residual even when x came from a truncated solve.
    """
    x = np.asarray(x, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    b = np.asarray(b, dtype=float)
    norm_true = float(np.linalg.norm(x_true.ravel()))
    norm_b = float(np.linalg.norm(b.ravel()))
    if norm_true == 0 or norm_b == 0:
        raise ArgumentError("metrics need nonzero truth and data")
    eta = float(np.linalg.norm((x - x_true).ravel())) / norm_true
    gamma = float(np.linalg.norm((apply(x) - b).ravel())) / norm_b
    return Metrics(eta=eta, gamma=gamma)


# ---------------------------------------------------------------------------
# PGM (P2/P5)

_WS = b" \t\r\n\x0b\x0c"


def _scan_token(data: bytes, pos: int, comments: bool) -> tuple[bytes, int, int]:
    # Returns (token, token_start, next_pos); token b"" means EOF.
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch in (b"#",) and comments:
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch in _WS:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WS and not (comments and data[pos : pos + 1] == b"#"):
        pos += 1
    return data[start:pos], start, pos


def _int_token(data: bytes, pos: int, what: str, comments: bool = True) -> tuple[int, int, int]:
    tok, start, pos = _scan_token(data, pos, comments)
    if not tok:
        raise FormatError(f"unexpected end of file while reading {what}", offset=len(data))
    try:
        value = int(tok)
    except ValueError:
        raise FormatError(f"invalid {what} {tok!r}", offset=start) from None
    return value, start, pos


def quantize(X: np.ndarray) -> np.ndarray:
    """[0,1] floats to 8-bit levels: floor(255 v + 0.5), clipped."""
    v = np.clip(np.asarray(X, dtype=float), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def write_image(path, X: np.ndarray, binary: bool = True) -> None:
    """Write an image as PGM, P5 when binary else P2."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise ArgumentError("image must be a nonempty 2-D array")
    q = quantize(X)
    h, w = q.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write(q.tobytes())
        else:
            fh.write(b"P2\n%d %d\n255\n" % (w, h))
            for row in q:
                fh.write(" ".join(str(v) for v in row).encode() + b"\n")


def read_image(path) -> np.ndarray:
    """Read a P2/P5 PGM into floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, start, pos = _scan_token(data, 0, comments=True)
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a P2/P5 PGM file (magic {magic!r})", offset=start)
    w, wstart, pos = _int_token(data, pos, "width")
    h, hstart, pos = _int_token(data, pos, "height")
    if w < 1:
        raise FormatError(f"invalid width {w}", offset=wstart)
    if h < 1:
        raise FormatError(f"invalid height {h}", offset=hstart)
    maxval, mstart, pos = _int_token(data, pos, "maxval")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval} (must be 255)", offset=mstart)
    if magic == b"P5":
        # Exactly one whitespace byte separates the header from the raster.
        if pos >= len(data) or data[pos : pos + 1] not in _WS:
            raise FormatError("missing whitespace after maxval", offset=pos)
        pos += 1
        count = w * h
        if len(data) - pos < count:
            raise FormatError(
                f"truncated P5 payload: expected {count} bytes, got {len(data) - pos}",
                offset=len(data),
            )
        q = np.frombuffer(data[pos : pos + count], dtype=np.uint8)
    else:
        values = np.empty(w * h, dtype=np.uint8)
        for i in range(w * h):
            v, vstart, pos = _int_token(data, pos, f"pixel {i}")
            if not 0 <= v <= 255:
                raise FormatError(f"pixel value {v} out of range 0..255", offset=vstart)
            values[i] = v
        q = values
    return q.reshape(h, w).astype(float) / 255.0


# ---------------------------------------------------------------------------
# Plain matrix text format

def write_matrix(path, M: np.ndarray, center: tuple[int, int] | None = None) -> None:
    """Write ``rows cols`` [+ ``center l q``] then 17-digit row-major entries."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ArgumentError("matrix must be a nonempty 2-D array")
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    if center is not None:
        lines.append(f"center {int(center[0])} {int(center[1])}")
    for row in M:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode())


def read_matrix(path) -> tuple[np.ndarray, tuple[int, int] | None]:
    """Inverse of write_matrix; returns (array, center-or-None)."""
    with open(path, "rb") as fh:
        data = fh.read()
    rows, rstart, pos = _int_token(data, 0, "row count", comments=False)
    cols, cstart, pos = _int_token(data, pos, "column count", comments=False)
    if rows < 1:
        raise FormatError(f"invalid row count {rows}", offset=rstart)
    if cols < 1:
        raise FormatError(f"invalid column count {cols}", offset=cstart)
    tok, tstart, peek = _scan_token(data, pos, comments=False)
    center = None
    if tok == b"center":
        l, lstart, pos = _int_token(data, peek, "center row", comments=False)
        q, qstart, pos = _int_token(data, pos, "center column", comments=False)
        if not 1 <= l <= rows:
            raise FormatError(f"center row {l} outside 1..{rows}", offset=lstart)
        if not 1 <= q <= cols:
            raise FormatError(f"center column {q} outside 1..{cols}", offset=qstart)
        center = (l, q)
    values = np.empty(rows * cols)
    for i in range(rows * cols):
        tok, tstart, pos = _scan_token(data, pos, comments=False)
        if not tok:
            raise FormatError(
                f"truncated matrix: expected {rows * cols} entries, got {i}", offset=len(data)
            )
        try:
            v = float(tok)
        except ValueError:
            raise FormatError(f"invalid matrix entry {tok!r}", offset=tstart) from None
        if not np.isfinite(v):
            raise FormatError(f"non-finite matrix entry {tok!r}", offset=tstart)
        values[i] = v
    tok, tstart, _ = _scan_token(data, pos, comments=False)
    if tok:
        raise FormatError(f"trailing data {tok!r} after matrix entries", offset=tstart)
    return values.reshape(rows, cols), center


def write_psf(path, psf: Psf) -> None:
    """Store a PSF in the matrix format with its center line."""
    write_matrix(path, psf.values, center=psf.center)


def read_psf(path) -> Psf:
    """Load a PSF; a missing center line defaults to the middle pixel."""
    values, center = read_matrix(path)
    if center is None:
        center = (values.shape[0] // 2 + 1, values.shape[1] // 2 + 1)
    return Psf(values, center)
