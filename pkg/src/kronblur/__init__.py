"""Structured image deblurring toolkit.

Kronecker-product approximation of spatially invariant blur operators,
FFT-backed Toeplitz/Hankel kernels, and FISTA/sFISTA Tikhonov solvers,
served over HTTP with a thin CLI client.
"""

__version__ = "0.1.0"

from .errors import ArgumentError, CapacityError, FormatError, KronblurError, NumericError
from .imaging import (
    Metrics,
    NoiseSpec,
    add_noise,
    compute_metrics,
    generate_image,
    quantize,
    read_image,
    read_matrix,
    read_psf,
    write_image,
    write_matrix,
    write_psf,
)
from .kron import (
    KronOperator,
    KronTerm,
    WeightedPsf,
    decompose,
    kron_apply,
    kron_apply_adjoint,
    kron_to_dense,
    svd,
    truncation_error,
    weight_reflective,
    weight_zero_bc,
)
from .psf import (
    BoundaryCondition,
    Psf,
    blur_direct,
    blur_matrix_dense,
    pad_to,
    psf_disk,
    psf_gaussian,
    psf_shake,
    unvec,
    vec,
)
from .pipeline import (
    BenchCase,
    RestoreResult,
    level_psf,
    make_data,
    parse_bc,
    parse_suite,
    restore,
    rows_to_csv,
    run_case,
)
from .solvers import (
    IterationRecord,
    SolveConfig,
    SolveRun,
    estimate_lipschitz,
    fista,
    momentum_next,
    objective,
    objective_matrix,
    select_lambda,
    sfista,
    tikhonov_direct,
    write_history_csv,
)
from .structured import (
    DENSE_FFT_CROSSOVER,
    FactorApplyPlan,
    FactorKind,
    StructuredFactor,
    factor_apply,
    factor_to_dense,
    hank,
    toep,
    toep_plus_hank,
)

__all__ = [
    "ArgumentError",
    "BenchCase",
    "BoundaryCondition",
    "CapacityError",
    "DENSE_FFT_CROSSOVER",
    "FactorApplyPlan",
    "FactorKind",
    "FormatError",
    "IterationRecord",
    "KronOperator",
    "KronTerm",
    "KronblurError",
    "Metrics",
    "NoiseSpec",
    "NumericError",
    "Psf",
    "RestoreResult",
    "SolveConfig",
    "SolveRun",
    "StructuredFactor",
    "WeightedPsf",
    "add_noise",
    "blur_direct",
    "blur_matrix_dense",
    "compute_metrics",
    "decompose",
    "estimate_lipschitz",
    "factor_apply",
    "factor_to_dense",
    "fista",
    "generate_image",
    "hank",
    "kron_apply",
    "kron_apply_adjoint",
    "kron_to_dense",
    "level_psf",
    "make_data",
    "momentum_next",
    "objective",
    "objective_matrix",
    "pad_to",
    "parse_bc",
    "parse_suite",
    "psf_disk",
    "psf_gaussian",
    "psf_shake",
    "quantize",
    "read_image",
    "read_matrix",
    "read_psf",
    "restore",
    "rows_to_csv",
    "run_case",
    "select_lambda",
    "sfista",
    "svd",
    "tikhonov_direct",
    "toep",
    "toep_plus_hank",
    "truncation_error",
    "unvec",
    "vec",
    "weight_reflective",
    "weight_zero_bc",
    "write_history_csv",
    "write_image",
    "write_matrix",
    "write_psf",
]
