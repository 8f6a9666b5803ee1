"""Acceptance gate: nine end-to-end criteria with fixed tolerances.

Each test prints one pass/fail line (visible even under capture) and
enforces a wall-clock budget, so a slow regression fails loudly rather
than silently degrading.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

from kronblur import (
    BenchCase,
    BoundaryCondition,
    FormatError,
    Psf,
    SolveConfig,
    blur_direct,
    blur_matrix_dense,
    decompose,
    estimate_lipschitz,
    factor_apply,
    factor_to_dense,
    fista,
    generate_image,
    hank,
    kron_apply,
    kron_to_dense,
    level_psf,
    make_data,
    objective,
    pad_to,
    psf_gaussian,
    quantize,
    read_image,
    read_matrix,
    run_case,
    select_lambda,
    sfista,
    tikhonov_direct,
    toep,
    toep_plus_hank,
    truncation_error,
    unvec,
    vec,
    write_image,
    write_matrix,
)
from kronblur.cli import main as cli_main

ZERO = BoundaryCondition.ZERO
REFL = BoundaryCondition.REFLECTIVE
BOTH = (ZERO, REFL)


@pytest.fixture
def report(capsys):
    def _report(criterion: int, ok: bool, detail: str, elapsed: float, budget: float):
        with capsys.disabled():
            status = "PASS" if ok and elapsed < budget else "FAIL"
            print(
                f"[acceptance] criterion {criterion}: {status} "
                f"({detail}; {elapsed:.2f}s of {budget:.0f}s budget)"
            )
        assert ok, detail
        assert elapsed < budget, f"criterion {criterion} exceeded {budget}s ({elapsed:.2f}s)"

    return _report


def random_psf(rng, size):
    vals = rng.random((size, size)) + 0.05
    vals /= vals.sum()
    center = (int(rng.integers(1, size + 1)), int(rng.integers(1, size + 1)))
    return Psf(vals, center)


def vec_ops(op):
    from kronblur import kron_apply_adjoint

    m, n = op.shape
    return (
        lambda v: vec(kron_apply(op, unvec(v, m, n))),
        lambda v: vec(kron_apply_adjoint(op, unvec(v, m, n))),
    )


def test_criterion_1_truncation_error_identity(report):
    # For a 5x5 Gaussian kernel on every square grid from 8 to 12, the
    # dense operator error ||A - A_s||_F must equal the weighted-SVD
    # tail for every s, under both boundary conditions.
    tic = time.perf_counter()
    psf = psf_gaussian(5, 1.0)
    worst = 0.0
    for n in range(8, 13):
        padded = pad_to(psf, n, n)
        for bc in BOTH:
            op = decompose(psf, bc, s=n, shape=(n, n))
            A = blur_matrix_dense(padded, bc, (n, n))
            norm_a = float(np.linalg.norm(A))
            for s in range(1, n + 1):
                gap = float(np.linalg.norm(A - kron_to_dense(op.truncate(s))))
                dev = abs(gap - truncation_error(op.sigma, s)) / norm_a
                worst = max(worst, dev)
    elapsed = time.perf_counter() - tic
    report(1, worst <= 1e-9, f"max identity deviation {worst:.3e} <= 1e-9", elapsed, 10.0)


def test_criterion_2_untruncated_apply_equals_direct_blur(report):
    tic = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    psfs = [random_psf(rng, size) for size in (3, 5, 5, 7, 9)]
    ops = {
        (i, bc): decompose(p, bc, shape=(12, 12))
        for i, p in enumerate(psfs)
        for bc in BOTH
    }
    for trial in range(50):
        X = rng.standard_normal((12, 12))
        i = trial % len(psfs)
        padded = pad_to(psfs[i], 12, 12)
        for bc in BOTH:
            want = blur_direct(padded, X, bc)
            got = kron_apply(ops[(i, bc)], X)
            scale = max(1.0, float(np.max(np.abs(want))))
            worst = max(worst, float(np.max(np.abs(got - want))) / scale)
    elapsed = time.perf_counter() - tic
    report(2, worst <= 1e-8, f"max apply deviation {worst:.3e} <= 1e-8 over 50 images", elapsed, 5.0)


def test_criterion_3_matrix_solver_equals_vector_solver(report):
    # sFISTA on A_s and FISTA on the densified A_s must produce the
    # same iterates, not just the same endpoint.
    tic = time.perf_counter()
    rng = np.random.default_rng(7)
    psf = random_psf(rng, 5)
    B = rng.standard_normal((12, 12))
    worst = 0.0
    for bc in BOTH:
        full = decompose(psf, bc, shape=(12, 12))
        for s in (1, 3, full.s):
            op = decompose(psf, bc, s=s, shape=(12, 12))
            A = kron_to_dense(op)
            L = estimate_lipschitz(lambda v: A @ v, lambda v: A.T @ v, 144)
            cfg = SolveConfig(lam=0.1, lipschitz=L, max_iter=30, record_iterates=True)
            mrun = sfista(op, B, cfg)
            vrun = fista(lambda v: A @ v, lambda v: A.T @ v, vec(B), cfg)
            for Xk, xk in zip(mrun.iterates, vrun.iterates):
                scale = max(1.0, float(np.max(np.abs(xk))))
                worst = max(worst, float(np.max(np.abs(vec(Xk) - xk))) / scale)
    elapsed = time.perf_counter() - tic
    report(3, worst <= 1e-12, f"max iterate deviation {worst:.3e} <= 1e-12", elapsed, 10.0)


def test_criterion_4_convergence_rate_bound(report):
    # Phi(x_k) - Phi(x*) <= 2 L' ||x0 - x*||^2 / (k+1)^2 with L' the
    # gradient constant actually used; checked at every iteration.
    tic = time.perf_counter()
    rng = np.random.default_rng(11)
    A = rng.standard_normal((12, 12))
    b = rng.standard_normal(12)
    lam = 0.3
    apply_ = lambda v: A @ v
    adjoint = lambda v: A.T @ v
    L = estimate_lipschitz(apply_, adjoint, 12, iters=200)
    xstar = tikhonov_direct(A, b, lam)
    phistar = objective(apply_, xstar, b, lam)
    cfg = SolveConfig(lam=lam, lipschitz=L, max_iter=100, record_iterates=True)
    run = fista(apply_, adjoint, b, cfg)
    bound_scale = 2.0 * (L + lam**2) * float(xstar @ xstar)  # x0 = 0
    violations = 0
    margin = np.inf
    for k, xk in enumerate(run.iterates, start=1):
        gap = objective(apply_, xk, b, lam) - phistar
        bound = bound_scale / (k + 1) ** 2
        margin = min(margin, bound - gap)
        if gap > bound:
            violations += 1
    elapsed = time.perf_counter() - tic
    report(
        4,
        violations == 0 and len(run.iterates) == 100,
        f"0 violations in 100 iterations (min slack {margin:.3e})",
        elapsed,
        5.0,
    )


def test_criterion_5_objective_gap_plateaus(report):
    # 32x32 medium defocus, 1% Gaussian noise, automatic lambda: the
    # exact-objective gap after 200 iterations must be non-increasing
    # in s (5% band), and s=full must match FISTA to 1e-6 relative.
    tic = time.perf_counter()
    size = 32
    psf = level_psf("defocus", "medium", size)
    padded = pad_to(psf, size, size)
    X = generate_image("smooth", size, size, seed=0)
    _, B = make_data(X, padded, REFL, "gauss", 0.01, seed=0)

    op_full = decompose(padded, REFL)
    apply_v, adjoint_v = vec_ops(op_full)
    L = estimate_lipschitz(apply_v, adjoint_v, size * size, seed=0)
    lam = select_lambda(op_full, B, 0.01, L)

    A = blur_matrix_dense(padded, REFL, (size, size))
    xstar = tikhonov_direct(A, vec(B), lam)
    phi = lambda x: objective(lambda v: A @ v, x, vec(B), lam)
    phistar = phi(xstar)

    cfg = SolveConfig(lam=lam, lipschitz=L, max_iter=200, record_history=False)
    gaps = []
    for s in (1, 2, 4, 8):
        run = sfista(decompose(padded, REFL, s=s), B, cfg)
        gaps.append(phi(vec(run.x)) - phistar)
    run_full = sfista(op_full, B, cfg)
    gaps.append(phi(vec(run_full.x)) - phistar)

    plateau_ok = all(b <= a * 1.05 + 1e-15 for a, b in zip(gaps, gaps[1:]))
    ref = fista(apply_v, adjoint_v, vec(B), cfg)
    gap_f = phi(ref.x) - phistar
    rel = abs(gaps[-1] - gap_f) / max(abs(gap_f), 1e-30)
    elapsed = time.perf_counter() - tic
    detail = (
        f"gaps s=1,2,4,8,full = {', '.join(f'{g:.3e}' for g in gaps)}; "
        f"full-vs-fista rel dev {rel:.3e}"
    )
    report(5, plateau_ok and rel <= 1e-6, detail, elapsed, 60.0)


def test_criterion_6_error_decreases_with_terms_at_scale(report):
    # 64x64, medium defocus, 1% noise, 5 seeds: seed-averaged eta is
    # non-increasing in s for each image kind, and s=5 lands within 10%
    # of the untruncated FISTA error.
    tic = time.perf_counter()
    s_grid = (1, 2, 3, 4, 5)
    failures = []
    summary = []
    for image in ("pattern1", "ppower", "dot2", "smooth"):
        case = BenchCase(
            id=image,
            image=image,
            blur="defocus",
            level="medium",
            noise="gauss",
            noise_level=0.01,
            s_list=s_grid,
            iters=50,
            seeds=(0, 1, 2, 3, 4),
            size=64,
            bc="reflective",
            lam=None,
        )
        rows = run_case(case)
        means = {}
        for s in s_grid:
            etas = [r["eta"] for r in rows if r["method"] == "sfista" and r["s"] == s]
            assert len(etas) == 5
            means[s] = float(np.mean(etas))
        curve = "/".join(f"{means[s]:.4f}" for s in s_grid)
        for a, b in zip(s_grid, s_grid[1:]):
            if means[b] > means[a] + 1e-12:
                failures.append(
                    f"{image}: mean eta rose from s={a} to s={b} (curve {curve})"
                )
                break
        fista_by_seed = {r["seed"]: r["eta"] for r in rows if r["method"] == "fista"}
        for r in rows:
            if r["method"] == "sfista" and r["s"] == 5:
                rel = abs(r["eta"] - fista_by_seed[r["seed"]]) / fista_by_seed[r["seed"]]
                if rel > 0.10:
                    failures.append(f"{image} seed {r['seed']}: s=5 off fista by {rel:.3f}")
        summary.append(f"{image} {means[1]:.3f}->{means[5]:.3f}")
    elapsed = time.perf_counter() - tic
    report(
        6,
        not failures,
        "; ".join(failures) if failures else "mean eta by s: " + ", ".join(summary),
        elapsed,
        300.0,
    )


def test_criterion_7_truncated_solver_is_faster_at_scale(report, tmp_path):
    # 256x256 benchmark through the CLI: the s=5 solver must run in at
    # most 60% of the untruncated FISTA time, as recorded in bench.csv.
    tic = time.perf_counter()
    suite = tmp_path / "suite.txt"
    suite.write_text(
        "id=big image=pattern1 blur=defocus level=severe noise=gauss "
        "noise_level=0.01 s=5 iters=50 seeds=0 size=256 bc=zero lambda=0.05\n"
    )
    out_dir = tmp_path / "bench"
    result = CliRunner().invoke(
        cli_main,
        ["bench", "--suite", str(suite), "--out-dir", str(out_dir)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    lines = (out_dir / "bench.csv").read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    srow = next(r for r in rows if r["method"] == "sfista" and r["s"] == "5")
    tratio = float(srow["tratio"])
    elapsed = time.perf_counter() - tic
    report(7, tratio <= 0.6, f"bench.csv tratio {tratio:.3f} <= 0.6", elapsed, 600.0)


def test_criterion_8_fft_apply_matches_dense(report):
    tic = time.perf_counter()
    rng = np.random.default_rng(2024)
    makers = (toep, hank, toep_plus_hank)
    worst = 0.0
    for _ in range(200):
        n = int(np.exp(rng.uniform(np.log(2), np.log(1024))))
        j = int(rng.integers(1, n + 1))
        c = rng.standard_normal(n)
        f = makers[int(rng.integers(0, 3))](c, j)
        X = rng.standard_normal((n, 2))
        dense = factor_apply(f, X, crossover=10**9)
        fft = factor_apply(f, X, crossover=1)
        scale = max(1.0, float(np.max(np.abs(dense))))
        worst = max(worst, float(np.max(np.abs(fft - dense))) / scale)
        denseT = factor_apply(f, X, mode="left_transpose", crossover=10**9)
        fftT = factor_apply(f, X, mode="left_transpose", crossover=1)
        worst = max(worst, float(np.max(np.abs(fftT - denseT))) / scale)

    # worked examples, bit for bit
    c = np.arange(1.0, 8.0)
    toep_expected = np.array(
        [
            [4, 3, 2, 1, 0, 0, 0],
            [5, 4, 3, 2, 1, 0, 0],
            [6, 5, 4, 3, 2, 1, 0],
            [7, 6, 5, 4, 3, 2, 1],
            [0, 7, 6, 5, 4, 3, 2],
            [0, 0, 7, 6, 5, 4, 3],
            [0, 0, 0, 7, 6, 5, 4],
        ],
        dtype=float,
    )
    hank_expected = np.array(
        [
            [4, 5, 6, 7, 0, 0, 0],
            [5, 6, 7, 0, 0, 0, 0],
            [6, 7, 0, 0, 0, 0, 0],
            [7, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 1],
            [0, 0, 0, 0, 0, 1, 2],
        ],
        dtype=float,
    )
    exact = np.array_equal(factor_to_dense(toep(c, 4)), toep_expected) and np.array_equal(
        factor_to_dense(hank(c, 3)), hank_expected
    )
    elapsed = time.perf_counter() - tic
    report(
        8,
        worst <= 1e-10 and exact,
        f"max FFT-vs-dense deviation {worst:.3e} <= 1e-10 over 200 factors; worked examples exact",
        elapsed,
        30.0,
    )


def test_criterion_9_io_round_trips_and_rejections(report, tmp_path):
    tic = time.perf_counter()
    rng = np.random.default_rng(5)
    ok = True
    notes = []

    # PGM round trip is quantization-exact, P2 and P5 agree
    X = rng.random((11, 13))
    p5 = tmp_path / "x5.pgm"
    p2 = tmp_path / "x2.pgm"
    write_image(p5, X, binary=True)
    write_image(p2, X, binary=False)
    a5 = read_image(p5)
    a2 = read_image(p2)
    if not (
        np.array_equal(a5, a2)
        and np.array_equal(a5, quantize(X).astype(float) / 255.0)
    ):
        ok = False
        notes.append("PGM round trip mismatch")

    tiny = tmp_path / "tiny.pgm"
    write_image(tiny, np.array([[0.0, 1.0], [1.0, 0.0]]), binary=True)
    if tiny.read_bytes() != b"P5\n2 2\n255\n\x00\xff\xff\x00":
        ok = False
        notes.append("P5 payload bytes unexpected")

    # matrix text is bit-exact
    M = rng.standard_normal((6, 5)) * np.exp(rng.standard_normal((6, 5)) * 30)
    mpath = tmp_path / "m.txt"
    write_matrix(mpath, M)
    back, _ = read_matrix(mpath)
    if not np.array_equal(M, back):
        ok = False
        notes.append("matrix round trip not bit-exact")

    # malformed corpus: every entry must raise a format error
    corpus_pgm = [
        b"P6\n2 2\n255\n\x00\x00\x00\x00",
        b"P5\n2 2\n",
        b"P5\n2 2\n254\n\x00\x00\x00\x00",
        b"P5\n2 2\n255\n\x00\x00",
        b"P5\n0 2\n255\n",
        b"P2\n2 2\n255\n0 0 0 300\n",
        b"P2\n2 2\n255\n0 0 0\n",
        b"",
    ]
    corpus_matrix = [
        b"",
        b"2 2\n1 2 3\n",
        b"2 2\n1 2 3 4 5\n",
        b"2 2\n1 2 x 4\n",
        b"2 2\ncenter 9 9\n1 2 3 4\n",
        b"2 2\n1 inf 3 4\n",
    ]
    rejected = 0
    for i, raw in enumerate(corpus_pgm):
        path = tmp_path / f"bad{i}.pgm"
        path.write_bytes(raw)
        try:
            read_image(path)
        except FormatError:
            rejected += 1
    for i, raw in enumerate(corpus_matrix):
        path = tmp_path / f"bad{i}.txt"
        path.write_bytes(raw)
        try:
            read_matrix(path)
        except FormatError:
            rejected += 1
    total = len(corpus_pgm) + len(corpus_matrix)
    if rejected != total:
        ok = False
        notes.append(f"only {rejected}/{total} malformed inputs rejected")

    elapsed = time.perf_counter() - tic
    report(
        9,
        ok,
        "; ".join(notes) if notes else f"round trips exact, {total}/{total} malformed inputs rejected",
        elapsed,
        5.0,
    )
