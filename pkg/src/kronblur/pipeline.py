"""End-to-end restoration and benchmark orchestration.

This is the layer the HTTP service exposes: generate data, build the
Kronecker operators, pick lambda, run a solver, and report metrics.
Everything here is deterministic given the request fields and seeds;
only the wall-clock columns vary between runs.

Benchmark timing protocol: ``setup_ms`` covers operator construction
(weighted SVD + factor plans) and ``ms`` the solver loop itself, so
the sFISTA/FISTA time ratio compares per-iteration cost at equal
iteration counts. Lipschitz estimation and lambda selection are shared
by both methods of a pair and excluded from both columns.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, FormatError
from .imaging import IMAGE_KINDS, NOISE_KINDS, NoiseSpec, add_noise, generate_image
from .kron import KronOperator, decompose, kron_apply, kron_apply_adjoint
from .psf import BoundaryCondition, Psf, blur_direct, pad_to, psf_disk, psf_shake, unvec, vec
from .solvers import (
    IterationRecord,
    SolveConfig,
    SolveRun,
    estimate_lipschitz,
    fista,
    select_lambda,
    sfista,
)

BASE_SIZE = 64
DEFOCUS_RADII = {"mild": 2.0, "medium": 4.0, "severe": 8.0}
SHAKE_STEPS = {"mild": 10, "medium": 30, "severe": 80}
BLUR_KINDS = ("defocus", "shake")
BLUR_LEVELS = ("mild", "medium", "severe")

BENCH_COLUMNS = ("case", "seed", "method", "s", "iters", "eta", "gamma", "ms", "setup_ms", "tratio")


def parse_bc(tag: str) -> BoundaryCondition:
    try:
        return BoundaryCondition(tag)
    except ValueError:
        raise ArgumentError(f"unknown boundary condition {tag!r}") from None


def level_psf(blur: str, level: str, size: int, seed: int = 0) -> Psf:
    """BlurLevel to PSF mapping, scaled proportionally with image size.

    At the 64-pixel reference size: defocus radius 2/4/8 and shake walk
    length 10/30/80 for mild/medium/severe.
    """
    if blur not in BLUR_KINDS:
        raise ArgumentError(f"unknown blur kind {blur!r}")
    if level not in BLUR_LEVELS:
        raise ArgumentError(f"unknown blur level {level!r}")
    size = int(size)
    if size < 8:
        raise ArgumentError(f"image size must be >= 8, got {size}")
    largest_odd = size if size % 2 == 1 else size - 1
    if blur == "defocus":
        radius = max(1.0, DEFOCUS_RADII[level] * size / BASE_SIZE)
        width = 2 * math.ceil(radius) + 1
        if width > largest_odd:
            width = largest_odd
            radius = min(radius, (width - 1) / 2)
        return psf_disk(width, radius)
    steps = max(1, round(SHAKE_STEPS[level] * size / BASE_SIZE))
    width = min(2 * steps + 1, largest_odd)
    return psf_shake(width, steps, seed)


def make_data(
    image: np.ndarray,
    psf: Psf,
    bc: BoundaryCondition,
    noise: str = "none",
    noise_level: float = 0.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Blur an image and optionally add noise; returns (exact, noisy)."""
    exact = blur_direct(psf, image, bc)
    if noise == "none" or noise_level == 0.0:
        return exact, exact.copy()
    return exact, add_noise(exact, NoiseSpec(kind=noise, level=noise_level, seed=seed))


@dataclass(frozen=True)
class RestoreResult:
    restored: np.ndarray
    method: str
    s: int
    rank: int
    eps: float
    lambda_used: float
    lipschitz: float
    iterations: int
    setup_ms: float
    solve_ms: float
    gamma: float
    eta: float | None
    history: list[IterationRecord] = field(default_factory=list)


def _operator_ms(psf: Psf, bc: BoundaryCondition, s: int | None) -> tuple[KronOperator, float]:
    tic = time.perf_counter()
    op = decompose(psf, bc, s=s)
    return op, (time.perf_counter() - tic) * 1000.0


def _vec_ops(op: KronOperator):
    m, n = op.shape
    return (
        lambda v: vec(kron_apply(op, unvec(v, m, n))),
        lambda v: vec(kron_apply_adjoint(op, unvec(v, m, n))),
    )


def resolve_lambda(
    lam: float | None,
    op: KronOperator,
    B: np.ndarray,
    noise_level: float | None,
    lipschitz: float,
) -> float:
    """User-supplied lambda, or the discrepancy-principle choice."""
    if lam is not None:
        lam = float(lam)
        if not (np.isfinite(lam) and lam > 0):
            raise ArgumentError(f"lambda must be positive, got {lam}")
        return lam
    if noise_level is None:
        raise ArgumentError("automatic lambda selection needs the data's noise level")
    return select_lambda(op, B, float(noise_level), lipschitz)


def restore(
    blurred: np.ndarray,
    psf: Psf,
    bc: BoundaryCondition,
    method: str = "sfista",
    s: int | None = None,
    lam: float | None = None,
    iters: int = 50,
    tol: float = 0.0,
    truth: np.ndarray | None = None,
    noise_level: float | None = None,
    seed: int = 0,
    record_history: bool = True,
) -> RestoreResult:
    """One restoration: fista on the exact operator, sfista on s terms.

    ``lam=None`` selects lambda automatically, which requires
    ``noise_level`` (the relative noise magnitude of the data).
    """
    B = np.asarray(blurred, dtype=float)
    if B.ndim != 2:
        raise ArgumentError("blurred data must be a 2-D image")
    if method not in ("fista", "sfista"):
        raise ArgumentError(f"unknown method {method!r}")
    m, n = B.shape
    padded = pad_to(psf, m, n)
    op_full, setup_ms = _operator_ms(padded, bc, None)
    apply_vec, adjoint_vec = _vec_ops(op_full)
    lipschitz = estimate_lipschitz(apply_vec, adjoint_vec, m * n, seed=seed)
    lambda_used = resolve_lambda(lam, op_full, B, noise_level, lipschitz)
    cfg = SolveConfig(
        lam=lambda_used,
        lipschitz=lipschitz,
        max_iter=int(iters),
        rel_tol=float(tol),
        record_history=record_history,
    )
    exact = lambda X: blur_direct(padded, X, bc)
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != B.shape:
            raise ArgumentError(f"truth shape {truth.shape} does not match data shape {B.shape}")

    if method == "fista":
        op_used = op_full
        b = vec(B)
        run = fista(
            apply_vec,
            adjoint_vec,
            b,
            cfg,
            np.zeros_like(b),
            truth=None if truth is None else vec(truth),
            exact_apply=lambda v: vec(exact(unvec(v, m, n))),
        )
        restored = unvec(run.x, m, n)
    else:
        if s is None:
            op_used = op_full
        else:
            op_used, extra_ms = _operator_ms(padded, bc, int(s))
            setup_ms += extra_ms
        run = sfista(op_used, B, cfg, np.zeros_like(B), truth=truth, exact_apply=exact)
        restored = run.x

    norm_b = float(np.linalg.norm(B.ravel()))
    gamma = float(np.linalg.norm((exact(restored) - B).ravel())) / norm_b
    eta = None
    if truth is not None:
        eta = float(np.linalg.norm((restored - truth).ravel())) / float(np.linalg.norm(truth.ravel()))
    return RestoreResult(
        restored=restored,
        method=method,
        s=op_used.s,
        rank=op_used.rank,
        eps=op_used.eps,
        lambda_used=lambda_used,
        lipschitz=lipschitz,
        iterations=run.iterations,
        setup_ms=setup_ms,
        solve_ms=run.solve_ms,
        gamma=gamma,
        eta=eta,
        history=run.history,
    )


@dataclass(frozen=True)
class BenchCase:
    """One suite line; every row it produces is determined by it."""

    id: str
    image: str = "pattern1"
    blur: str = "defocus"
    level: str = "medium"
    noise: str = "gauss"
    noise_level: float = 0.01
    s_list: tuple[int, ...] = (5,)
    iters: int = 50
    seeds: tuple[int, ...] = (0,)
    size: int = 64
    bc: str = "reflective"
    lam: float | None = None

    def __post_init__(self):
        if not self.id:
            raise ArgumentError("case id must be nonempty")
        if self.image not in IMAGE_KINDS:
            raise ArgumentError(f"unknown image kind {self.image!r}")
        if self.blur not in BLUR_KINDS:
            raise ArgumentError(f"unknown blur kind {self.blur!r}")
        if self.level not in BLUR_LEVELS:
            raise ArgumentError(f"unknown blur level {self.level!r}")
        if self.noise != "none" and self.noise not in NOISE_KINDS:
            raise ArgumentError(f"unknown noise kind {self.noise!r}")
        if not (np.isfinite(self.noise_level) and self.noise_level >= 0):
            raise ArgumentError(f"noise level must be >= 0, got {self.noise_level}")
        if not self.s_list or any(s < 1 for s in self.s_list):
            raise ArgumentError("s list must contain integers >= 1")
        if self.iters < 1:
            raise ArgumentError(f"iters must be >= 1, got {self.iters}")
        if not self.seeds:
            raise ArgumentError("seeds list must be nonempty")
        if self.size < 8:
            raise ArgumentError(f"size must be >= 8, got {self.size}")
        parse_bc(self.bc)
        if self.lam is not None and not (np.isfinite(self.lam) and self.lam > 0):
            raise ArgumentError(f"lambda must be positive, got {self.lam}")


def run_case(case: BenchCase) -> list[dict]:
    """Run one bench case; returns one row dict per (seed, method, s).

    Per seed: one FISTA reference row on the exact operator, then one
    sFISTA row per requested s, sharing lambda and the Lipschitz
    estimate. tratio on an sFISTA row is its solver time over the
    matching FISTA row's.
    """
    bc = parse_bc(case.bc)
    rows: list[dict] = []
    for seed in case.seeds:
        X = generate_image(case.image, case.size, case.size, seed)
        psf = level_psf(case.blur, case.level, case.size, seed)
        padded = pad_to(psf, case.size, case.size)
        _, B = make_data(X, padded, bc, case.noise, case.noise_level, seed)
        op_full, setup_full = _operator_ms(padded, bc, None)
        apply_vec, adjoint_vec = _vec_ops(op_full)
        lipschitz = estimate_lipschitz(apply_vec, adjoint_vec, case.size * case.size, seed=seed)
        effective_level = case.noise_level if case.noise != "none" else 0.0
        lam = resolve_lambda(case.lam, op_full, B, effective_level, lipschitz)
        cfg = SolveConfig(lam=lam, lipschitz=lipschitz, max_iter=case.iters, record_history=False)
        exact = lambda img: blur_direct(padded, img, bc)
        norm_b = float(np.linalg.norm(B.ravel()))
        norm_x = float(np.linalg.norm(X.ravel()))

        def metrics(restored: np.ndarray) -> tuple[float, float]:
            eta = float(np.linalg.norm((restored - X).ravel())) / norm_x
            gamma = float(np.linalg.norm((exact(restored) - B).ravel())) / norm_b
            return eta, gamma

        b = vec(B)
        ref = fista(apply_vec, adjoint_vec, b, cfg, np.zeros_like(b))
        eta, gamma = metrics(unvec(ref.x, case.size, case.size))
        rows.append(
            {
                "case": case.id,
                "seed": seed,
                "method": "fista",
                "s": op_full.s,
                "iters": ref.iterations,
                "eta": eta,
                "gamma": gamma,
                "ms": ref.solve_ms,
                "setup_ms": setup_full,
                "tratio": None,
            }
        )
        for s in case.s_list:
            op_s, setup_s = _operator_ms(padded, bc, s)
            run = sfista(op_s, B, cfg, np.zeros_like(B))
            eta, gamma = metrics(run.x)
            rows.append(
                {
                    "case": case.id,
                    "seed": seed,
                    "method": "sfista",
                    "s": s,
                    "iters": run.iterations,
                    "eta": eta,
                    "gamma": gamma,
                    "ms": run.solve_ms,
                    "setup_ms": setup_s,
                    "tratio": run.solve_ms / ref.solve_ms,
                }
            )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    """Bench rows as CSV text with the canonical column order."""

    def fmt(v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):
            return f"{v:.17g}"
        return str(v)

    lines = [",".join(BENCH_COLUMNS)]
    for row in rows:
        lines.append(",".join(fmt(row.get(col)) for col in BENCH_COLUMNS))
    return "\n".join(lines) + "\n"


_SUITE_KEYS = {
    "id",
    "image",
    "blur",
    "level",
    "noise",
    "noise_level",
    "s",
    "iters",
    "seeds",
    "size",
    "bc",
    "lambda",
}


def parse_suite(text: str) -> list[BenchCase]:
    """Parse a suite file: one case per line of whitespace-separated
    key=value pairs; ``s`` and ``seeds`` are comma-separated lists;
    blank lines and #-comments are skipped."""
    cases: list[BenchCase] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields: dict[str, str] = {}
        for token in line.split():
            if "=" not in token:
                raise FormatError(f"suite line {lineno}: expected key=value, got {token!r}")
            key, value = token.split("=", 1)
            if key not in _SUITE_KEYS:
                raise FormatError(f"suite line {lineno}: unknown key {key!r}")
            if key in fields:
                raise FormatError(f"suite line {lineno}: duplicate key {key!r}")
            fields[key] = value
        try:
            kwargs: dict = {"id": fields.get("id", f"case{len(cases) + 1:02d}")}
            if "image" in fields:
                kwargs["image"] = fields["image"]
            if "blur" in fields:
                kwargs["blur"] = fields["blur"]
            if "level" in fields:
                kwargs["level"] = fields["level"]
            if "noise" in fields:
                kwargs["noise"] = fields["noise"]
            if "noise_level" in fields:
                kwargs["noise_level"] = float(fields["noise_level"])
            if "s" in fields:
                kwargs["s_list"] = tuple(int(v) for v in fields["s"].split(","))
            if "iters" in fields:
                kwargs["iters"] = int(fields["iters"])
            if "seeds" in fields:
                kwargs["seeds"] = tuple(int(v) for v in fields["seeds"].split(","))
            if "size" in fields:
                kwargs["size"] = int(fields["size"])
            if "bc" in fields:
                kwargs["bc"] = fields["bc"]
            if "lambda" in fields and fields["lambda"] != "auto":
                kwargs["lam"] = float(fields["lambda"])
            case = BenchCase(**kwargs)
        except (ValueError, ArgumentError) as exc:
            raise FormatError(f"suite line {lineno}: {exc}") from exc
        cases.append(case)
    if not cases:
        raise FormatError("suite file contains no cases")
    return cases
