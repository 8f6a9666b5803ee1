"""Banded Toeplitz/Hankel factors: dense layout, FFT apply, adjoints."""

import numpy as np
import pytest

from kronblur import (
    ArgumentError,
    CapacityError,
    FactorKind,
    factor_apply,
    factor_to_dense,
    hank,
    toep,
    toep_plus_hank,
)
from kronblur.structured import DENSE_FFT_CROSSOVER

from conftest import hankel_oracle, toeplitz_oracle


def test_toeplitz_worked_example():
    c = np.arange(1.0, 8.0)  # n = 7, j = 4
    T = factor_to_dense(toep(c, 4))
    expected = toeplitz_oracle(c, 4)
    assert np.array_equal(T, expected)
    # band structure: first row runs c4 c3 c2 c1 then zeros
    assert T[0].tolist() == [4, 3, 2, 1, 0, 0, 0]
    assert T[-1].tolist() == [0, 0, 0, 7, 6, 5, 4]
    assert np.array_equal(T[:, 3], c)  # column j carries the full generator


def test_hankel_worked_example():
    c = np.arange(1.0, 8.0)
    H = factor_to_dense(hank(c, 3))
    expected = hankel_oracle(c, 3)
    assert np.array_equal(H, expected)
    assert H[0].tolist() == [4, 5, 6, 7, 0, 0, 0]
    assert H[-1].tolist() == [0, 0, 0, 0, 0, 1, 2]  # wrapped low-order band


def test_toeplitz_identity_generator():
    for n in (1, 2, 5):
        for j in range(1, n + 1):
            e = np.zeros(n)
            e[j - 1] = 1.0
            assert np.array_equal(factor_to_dense(toep(e, j)), np.eye(n))


def test_small_cases_match_oracle():
    assert np.array_equal(
        factor_to_dense(toep([1.0, 2.0, 3.0], 2)),
        np.array([[2.0, 1, 0], [3, 2, 1], [0, 3, 2]]),
    )
    # j=1 leaves no wrapped band, just the anti-diagonal ramp
    assert np.array_equal(
        factor_to_dense(hank([1.0, 2.0, 3.0], 1)),
        np.array([[2.0, 3, 0], [3, 0, 0], [0, 0, 0]]),
    )


def test_toep_plus_hank_is_sum():
    rng = np.random.default_rng(3)
    c = rng.standard_normal(9)
    B = factor_to_dense(toep_plus_hank(c, 4))
    assert np.allclose(
        B, toeplitz_oracle(c, 4) + hankel_oracle(c, 4), rtol=0, atol=0
    )


@pytest.mark.parametrize("kind", list(FactorKind))
def test_random_dense_layouts_match_oracle(kind, rng):
    make = {
        FactorKind.TOEPLITZ: toep,
        FactorKind.HANKEL: hank,
        FactorKind.TOEPLITZ_PLUS_HANKEL: toep_plus_hank,
    }[kind]
    for _ in range(60):
        n = int(rng.integers(1, 33))
        j = int(rng.integers(1, n + 1))
        c = rng.standard_normal(n)
        D = factor_to_dense(make(c, j))
        ref = toeplitz_oracle(c, j)
        if kind is FactorKind.HANKEL:
            ref = hankel_oracle(c, j)
        elif kind is FactorKind.TOEPLITZ_PLUS_HANKEL:
            ref = ref + hankel_oracle(c, j)
        assert np.array_equal(D, ref)


def test_fft_apply_matches_dense(rng):
    for _ in range(50):
        n = int(rng.integers(2, 257))
        j = int(rng.integers(1, n + 1))
        c = rng.standard_normal(n)
        X = rng.standard_normal((n, 3))
        for make in (toep, hank, toep_plus_hank):
            f = make(c, j)
            dense = factor_to_dense(f)
            got = factor_apply(f, X, crossover=1)  # force the FFT path
            assert np.max(np.abs(got - dense @ X)) <= 1e-10 * max(
                1.0, np.max(np.abs(dense @ X))
            )
            gotT = factor_apply(f, X, mode="left_transpose", crossover=1)
            assert np.max(np.abs(gotT - dense.T @ X)) <= 1e-10 * max(
                1.0, np.max(np.abs(dense.T @ X))
            )


def test_large_factor_uses_plan_and_agrees(rng):
    n = 1024
    c = rng.standard_normal(n)
    f = toep_plus_hank(c, 700)
    assert f.plan is not None and f.dense is None
    # plan length is a power of two covering the circulant embedding
    L = f.plan.length
    assert L >= 2 * n - 1 and L & (L - 1) == 0
    X = rng.standard_normal((n, 2))
    ref = (toeplitz_oracle(c, 700) + hankel_oracle(c, 700)) @ X
    assert np.max(np.abs(factor_apply(f, X) - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_crossover_override_changes_path_not_values(rng):
    n = 40
    c = rng.standard_normal(n)
    f = hank(c, 11)
    X = rng.standard_normal((n, 4))
    dense_out = factor_apply(f, X, crossover=10**9)
    fft_out = factor_apply(f, X, crossover=1)
    assert np.max(np.abs(dense_out - fft_out)) <= 1e-11 * max(
        1.0, np.max(np.abs(dense_out))
    )


def test_vector_operand_promotes_and_returns_vector(rng):
    f = toep(rng.standard_normal(6), 3)
    x = rng.standard_normal(6)
    y = factor_apply(f, x)
    assert y.shape == (6,)
    assert np.allclose(y, factor_to_dense(f) @ x, rtol=0, atol=1e-14)


def test_apply_is_linear(rng):
    f = toep_plus_hank(rng.standard_normal(20), 7)
    X = rng.standard_normal((20, 3))
    Y = rng.standard_normal((20, 3))
    a, b = 2.5, -1.25
    lhs = factor_apply(f, a * X + b * Y)
    rhs = a * factor_apply(f, X) + b * factor_apply(f, Y)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_transpose_is_adjoint(rng):
    for make in (toep, hank, toep_plus_hank):
        n = 150  # above the crossover, so this exercises FFT transposes
        f = make(rng.standard_normal(n), 60)
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        lhs = float(factor_apply(f, x) @ y)
        rhs = float(x @ factor_apply(f, y, mode="left_transpose"))
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_hankel_is_symmetric(rng):
    n = 30
    f = hank(rng.standard_normal(n), 9)
    D = factor_to_dense(f)
    assert np.array_equal(D, D.T)


def test_factors_are_frozen(rng):
    f = toep(rng.standard_normal(5), 2)
    with pytest.raises(ValueError):
        f.c[0] = 99.0


def test_validation_errors():
    with pytest.raises(ArgumentError):
        toep([1.0, 2.0], 0)
    with pytest.raises(ArgumentError):
        toep([1.0, 2.0], 3)
    with pytest.raises(ArgumentError):
        hank([], 1)
    with pytest.raises(ArgumentError):
        toep([1.0, np.nan], 1)
    with pytest.raises(ArgumentError):
        toep(np.ones((2, 2)), 1)
    f = toep([1.0, 2.0, 3.0], 2)
    with pytest.raises(ArgumentError):
        factor_apply(f, np.ones((4, 2)))  # row mismatch
    with pytest.raises(ArgumentError):
        factor_apply(f, np.ones((3, 2)), mode="right")
    with pytest.raises(ArgumentError):
        factor_apply(f, np.ones((3, 3, 3)))


def test_dense_materialization_guard():
    n = 5000
    f = toep(np.ones(n), 1)
    with pytest.raises(CapacityError):
        factor_to_dense(f)


def test_default_crossover_constant():
    # small factors precompute the dense form, large ones only the plan
    small = toep(np.ones(DENSE_FFT_CROSSOVER - 1), 1)
    big = toep(np.ones(DENSE_FFT_CROSSOVER), 1)
    assert small.dense is not None and small.plan is None
    assert big.plan is not None and big.dense is None
