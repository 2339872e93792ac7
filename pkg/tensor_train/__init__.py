"""
Tensor-train vectors and operators, and fixed-rank KSL time stepping.
"""

from .tensor import (
    TensorTrainVector,
    TensorTrainOperator,
    TensorTrainError,
    DimensionMismatchError,
)
from .ops import (
    tt_from_product,
    tt_random,
    tt_inner,
    tt_norm,
    tt_apply,
    tt_expectation,
    tt_add,
    tt_scale,
    tt_round,
    apply_single_core,
    left_orthogonalize,
    right_orthogonalize,
    truncation_rank,
    operator_sum,
    operator_scale,
    local_operator,
    max_bond_ranks,
)
from .krylov import expm_krylov
from .ksl import (
    KslConfig,
    KslIntegrator,
    KslIntegrationError,
    RankMismatchError,
    NonFiniteStateError,
    manifold_ranks,
    inflate_rank,
    ksl_step,
    propagate,
)

__all__ = [
    # Containers
    "TensorTrainVector",
    "TensorTrainOperator",
    "TensorTrainError",
    "DimensionMismatchError",
    # Algebra
    "tt_from_product",
    "tt_random",
    "tt_inner",
    "tt_norm",
    "tt_apply",
    "tt_expectation",
    "tt_add",
    "tt_scale",
    "tt_round",
    "apply_single_core",
    "left_orthogonalize",
    "right_orthogonalize",
    "truncation_rank",
    "operator_sum",
    "operator_scale",
    "local_operator",
    "max_bond_ranks",
    # Krylov
    "expm_krylov",
    # KSL
    "KslConfig",
    "KslIntegrator",
    "KslIntegrationError",
    "RankMismatchError",
    "NonFiniteStateError",
    "manifold_ranks",
    "inflate_rank",
    "ksl_step",
    "propagate",
]
