"""Hermite-coefficient kernels: class estimates, factorizations and spectra."""
from .multiindex import GradedIndexMap, MultiIndex, count, enumerate_indices
from .weights import (
    ClassCandidate,
    ClassEstimate,
    EffectivelyZeroKernel,
    WeightSpec,
    fit_class,
    parse_weight,
    weighted_norm,
)
from .hermite import CoeffVector, analyze, gauss_hermite, hermite_eval, synthesize
from .kernel_ops import (
    KernelMatrix,
    adjoint,
    apply,
    compose,
    compose_all,
    is_hermite_diagonal,
    is_positive_semidefinite,
    op_norm_l1_to_linf,
    tensor_with,
)
from .factorization import (
    FactorizationResult,
    factor_beurling,
    factor_diagonal_sqrt,
    factor_flat_beurling,
    factor_flat_roumieu,
    factor_roumieu,
    fractional_power,
)
from .spectral import (
    check_square_relation,
    fit_decay,
    oscillator_norm_sequence,
    schatten_norm,
    schmidt_expansion,
    singular_values,
    verify_composition_bounds,
)
from .generators import (
    gen_mehler_closed_form,
    gen_random_class,
    gen_rank1,
    gen_schwartz,
    gen_semigroup,
    parse_generator,
)

__version__ = "0.1.0"
