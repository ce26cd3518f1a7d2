"""Canonical algebraic curvature tensors, their structure groups and invariants."""

from .errors import (
    CurvlabError,
    ValidationError,
    DegenerateForm,
    InvalidSplit,
    SingularMap,
    NotAMember,
    InconsistentPermutation,
    ModelMismatch,
    IncompatibleBlocks,
    NotBalanced,
    DegeneratePlane,
    DegenerateHessian,
    NotSkewTsankov,
    DegenerateSpectrum,
)
from .geometry_mf import (
    MfManifold,
    PolyFunction,
    mf_alpha,
    mf_curvature,
    mf_nabla_r,
    mf_scalar_curvature,
    skew_tsankov_check,
    skew_tsankov_decompose,
)
from .invariants import (
    check_invariance,
    covariant_norm,
    ricci,
    scalar_curvature,
    sectional_curvature,
    symmetric_combine,
)
from .structure_group import (
    BlockPermutation,
    Verdict,
    WreathElement,
    allowed_block_permutations,
    classify_canonical_member,
    extract_permutation,
    is_member,
    sample_structure_group_element,
    sample_wreath_element,
    wreath_compose,
    wreath_to_matrix,
)
from .tensor_core import (
    BlockModelSpace,
    CurvTensor,
    PseudoONBasis,
    SymForm,
    build_canonical,
    direct_sum,
    is_decomposable_wrt,
    kernel,
    pseudo_orthonormalize,
    pullback,
    signature,
    validate_curvature,
)

__version__ = "0.1.0"

__all__ = [
    "BlockModelSpace",
    "BlockPermutation",
    "CurvTensor",
    "CurvlabError",
    "DegenerateForm",
    "DegenerateHessian",
    "DegeneratePlane",
    "DegenerateSpectrum",
    "IncompatibleBlocks",
    "InconsistentPermutation",
    "InvalidSplit",
    "MfManifold",
    "ModelMismatch",
    "NotAMember",
    "NotBalanced",
    "NotSkewTsankov",
    "PolyFunction",
    "PseudoONBasis",
    "SingularMap",
    "SymForm",
    "ValidationError",
    "Verdict",
    "WreathElement",
    "allowed_block_permutations",
    "build_canonical",
    "check_invariance",
    "classify_canonical_member",
    "covariant_norm",
    "direct_sum",
    "extract_permutation",
    "is_decomposable_wrt",
    "is_member",
    "kernel",
    "mf_alpha",
    "mf_curvature",
    "mf_nabla_r",
    "mf_scalar_curvature",
    "pseudo_orthonormalize",
    "pullback",
    "ricci",
    "sample_structure_group_element",
    "sample_wreath_element",
    "scalar_curvature",
    "sectional_curvature",
    "signature",
    "skew_tsankov_check",
    "skew_tsankov_decompose",
    "symmetric_combine",
    "validate_curvature",
    "wreath_compose",
    "wreath_to_matrix",
]
