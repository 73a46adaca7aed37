"""Operator-valued positive definite kernels on finite index sets.

The package realizes kernels with d x d complex operator blocks, their
minimal factorizations K(s, t) = V_s* V_t, the classical dilation
constructions built on them (powers of a contraction through a shift
operator, discrete POVMs as compressions of projection valued measures),
and seeded sampling of the vector-valued Gaussian families whose
covariance reproduces the kernel.
"""

from .kernel import (
    DEFAULT_PD_TOL,
    IndexSet,
    KernelSection,
    LiftedPoint,
    NotPositiveDefiniteError,
    OperatorKernel,
    PdCheck,
    ValidationError,
    block_gram,
    is_positive_definite,
    lift,
    section_evaluate,
    section_inner,
)
from .factorization import (
    DEFAULT_TRUNCATION_TOL,
    DilationFactorization,
    FactorizationError,
    apply_factor,
    apply_factor_adjoint,
    apply_projection,
    chain_product,
    factorize,
    frame_reconstruct,
    isometry_defect,
    reconstruct,
)
from .dilation import (
    ContractionModel,
    DiscretePOVM,
    NaimarkDilation,
    ShiftDilation,
    contraction_kernel,
    gram_quadratic,
    naimark_dilate,
    povm_compress,
    power_dilation,
    telescoping_quadratic,
)
from .gaussian import (
    CovarianceEstimate,
    GaussianSampler,
    NormalStream,
    build_sampler,
    draw,
    draw_batches,
    estimate_covariance,
    estimate_covariance_table,
    estimate_operator_covariance,
    normal_stream,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PD_TOL",
    "DEFAULT_TRUNCATION_TOL",
    "ContractionModel",
    "CovarianceEstimate",
    "DilationFactorization",
    "DiscretePOVM",
    "FactorizationError",
    "GaussianSampler",
    "IndexSet",
    "KernelSection",
    "LiftedPoint",
    "NaimarkDilation",
    "NormalStream",
    "NotPositiveDefiniteError",
    "OperatorKernel",
    "PdCheck",
    "ShiftDilation",
    "ValidationError",
    "apply_factor",
    "apply_factor_adjoint",
    "apply_projection",
    "block_gram",
    "build_sampler",
    "chain_product",
    "contraction_kernel",
    "draw",
    "draw_batches",
    "estimate_covariance",
    "estimate_covariance_table",
    "estimate_operator_covariance",
    "factorize",
    "frame_reconstruct",
    "gram_quadratic",
    "is_positive_definite",
    "isometry_defect",
    "lift",
    "naimark_dilate",
    "normal_stream",
    "povm_compress",
    "power_dilation",
    "reconstruct",
    "section_evaluate",
    "section_inner",
    "telescoping_quadratic",
]
