"""Kantorovich-Rubinstein transport and coupling with random margins on finite spaces."""

__version__ = "0.1.0"

from .errors import (
    DualityGapExceeded,
    InputError,
    KRCError,
    MathError,
    NegativeMass,
    NotNormalized,
    NotStochastic,
    NumericalFailure,
    ShapeMismatch,
    SpaceMismatch,
    UnknownMeasure,
    UntightCost,
    WeightMismatch,
)
from .measures import (
    CostMatrix,
    DualPotential,
    FiniteSpace,
    ProbVec,
    SignedDecomposition,
    check_cost_tight,
    hahn_decompose,
    lipschitz_check,
    path_closure,
    validate_prob,
    variation_norm,
)
from .transport import CouplingPlan, TransportResult, dobrushin_plan, solve, solve_dual, solve_primal
from .param import (
    ParamIntegrand,
    ParamPlan,
    RandomMeasureFamily,
    glue,
    param_dual,
    param_primal,
    validate_family,
)
from .dependence import (
    JointLaw,
    beta,
    conditionals,
    mp_bound,
    tail_quantile,
    tau_c,
    tau_c_dual,
)
from .reconstruct import (
    ConditionalKernel,
    SampleBatch,
    TripleLaw,
    couple_against,
    disintegrate_kernel,
    inverse_cdf_sample,
    markov_tau_decay,
    reconstruct_law,
    verify_independence,
)

__all__ = [
    "CouplingPlan",
    "TransportResult",
    "dobrushin_plan",
    "solve",
    "solve_dual",
    "solve_primal",
    "DualityGapExceeded",
    "InputError",
    "KRCError",
    "MathError",
    "NegativeMass",
    "NotNormalized",
    "NotStochastic",
    "NumericalFailure",
    "ShapeMismatch",
    "SpaceMismatch",
    "UnknownMeasure",
    "UntightCost",
    "WeightMismatch",
    "CostMatrix",
    "DualPotential",
    "FiniteSpace",
    "ProbVec",
    "SignedDecomposition",
    "check_cost_tight",
    "hahn_decompose",
    "lipschitz_check",
    "path_closure",
    "validate_prob",
    "variation_norm",
    "ParamIntegrand",
    "ParamPlan",
    "RandomMeasureFamily",
    "glue",
    "param_dual",
    "param_primal",
    "validate_family",
    "JointLaw",
    "beta",
    "conditionals",
    "mp_bound",
    "tail_quantile",
    "tau_c",
    "tau_c_dual",
    "ConditionalKernel",
    "SampleBatch",
    "TripleLaw",
    "couple_against",
    "disintegrate_kernel",
    "inverse_cdf_sample",
    "markov_tau_decay",
    "reconstruct_law",
    "verify_independence",
]
