"""Depth convergence of ReLU networks with increasing widths.

Convolutional layers as Toeplitz matrices, infinite products of matrices of
growing size viewed as operators into l^p, and checkers for the sufficient
conditions under which deep ReLU CNNs converge pointwise.
"""

from .conv import (
    ShiftDecomposition,
    ZeroCenterError,
    cnn_weight_matrix,
    cnn_widths,
    convolve,
    load_masks,
    mask_ratio_sum_term,
    save_masks,
    shift_decompose,
    toeplitz,
)
from .criteria import (
    CriterionReport,
    check_cnn_general,
    check_cnn_unit_center,
    check_dnn_sufficient,
    fixed_length_guideline,
)
from .decay import DecayDeclaration
from .experiment import ExperimentConfig, lq_distance_estimate, run_depth_experiment
from .families import family_decays, family_network, generate_family
from .lp_linalg import (
    ActivationMatrix,
    apply_activation,
    embedding,
    induced_norm,
    induced_norm_bounds,
    induced_norm_exact,
    relu,
    relu_pattern,
    vector_pnorm,
)
from .network import (
    AffineForm,
    ConvLayer,
    DenseLayer,
    Network,
    PaddedVector,
    activation_trace,
    affine_representation,
    domain_membership,
    forward,
    load_network,
    padded_forward,
    save_network,
)
from .products import (
    PaddedOperator,
    ProductState,
    TailEstimate,
    cutoff_is_stable,
    declared_tail_bound,
    detect_convergence,
    extend_product,
    max_stable_cutoff,
    padded_distance,
    padded_distance_bounds,
    product_states,
    series_inequality_lhs,
    series_inequality_rhs,
    stabilization_depth,
    stabilized_activation_product,
    start_product,
    tail_bound,
)

__version__ = "0.1.0"
