"""Numerical engine for transcendental skew products (z, w) -> (f(z) + w h(z, w), g(w)).

Quantitative orbit tracking for the fiber map f(z) = z + a + e^(-z),
sampled certificates that small |w| preserves escape (bulging), constructive
polynomial approximation on disjoint compact sets, and the finite-stage
construction of a perturbation whose orbits return instead.
"""

from .core import (
    STANDARD,
    BaseMap,
    FatouMap,
    NumericContext,
    Perturbation,
    PrecisionConfig,
    RangeOverflowError,
    SkewProduct,
    ZERO_PERTURBATION,
    context_for,
    dump_json,
    eval_base,
    eval_fatou,
    eval_perturbation,
    eval_skew,
    iterate_base,
    skew_from_config,
    skew_to_config,
)
from .dynamics import (
    OneDimCertificate,
    OrbitTrace,
    absorbing_report,
    choose_x0,
    deviation_partial_sum,
    fiber_orbit,
    iterate,
    verify_absorbing,
    verify_onedim,
    x0_preconditions,
)
from .bulging import (
    BulgeCertificate,
    EscapeCertificate,
    OrderEstimate,
    SuperAttractingBudget,
    calibrate_growth_exponent,
    certify_escape,
    estimate_order,
    find_epsilon,
    find_epsilon_super,
    log_max_modulus,
    max_modulus,
    verify_bulge_bounds,
)
from .runge import (
    CompactSet,
    CompactSetUnion,
    ConditioningError,
    PolynomialApproximant,
    TargetSpec,
    fit,
    fit_auto,
    sup_error,
)
from .nonbulging import (
    ConstructionResult,
    ReturnReport,
    StageFailure,
    StageReport,
    StageState,
    build_stage_k,
    choose_delta_k,
    choose_w_k,
    init_stage0,
    run_construction,
    verify_return,
)
from .render import ImageGrid, RenderJob, read_image, render, write_image
from .cli import cli_main

__version__ = "0.1.0"

__all__ = [
    "STANDARD",
    "BaseMap",
    "BulgeCertificate",
    "CompactSet",
    "CompactSetUnion",
    "ConditioningError",
    "ConstructionResult",
    "EscapeCertificate",
    "FatouMap",
    "ImageGrid",
    "NumericContext",
    "OneDimCertificate",
    "OrbitTrace",
    "OrderEstimate",
    "Perturbation",
    "PolynomialApproximant",
    "PrecisionConfig",
    "RangeOverflowError",
    "RenderJob",
    "ReturnReport",
    "SkewProduct",
    "StageFailure",
    "StageReport",
    "StageState",
    "SuperAttractingBudget",
    "TargetSpec",
    "ZERO_PERTURBATION",
    "absorbing_report",
    "build_stage_k",
    "calibrate_growth_exponent",
    "certify_escape",
    "choose_delta_k",
    "choose_w_k",
    "choose_x0",
    "cli_main",
    "context_for",
    "deviation_partial_sum",
    "dump_json",
    "estimate_order",
    "eval_base",
    "eval_fatou",
    "eval_perturbation",
    "eval_skew",
    "fiber_orbit",
    "find_epsilon",
    "find_epsilon_super",
    "fit",
    "fit_auto",
    "init_stage0",
    "iterate",
    "iterate_base",
    "log_max_modulus",
    "max_modulus",
    "read_image",
    "render",
    "run_construction",
    "skew_from_config",
    "skew_to_config",
    "sup_error",
    "verify_absorbing",
    "verify_bulge_bounds",
    "verify_onedim",
    "verify_return",
    "write_image",
    "x0_preconditions",
]
