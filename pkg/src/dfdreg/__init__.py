"""Regularization of linear inverse problems by filtered diagonal frame decompositions."""

__version__ = "0.1.0"

from .dfd import (
    DecompositionError,
    DiagonalFrameDecomposition,
    derive_dfd_from_range_frame,
    dfd_example_hp,
    dfd_from_svd,
    illposedness_report,
    pseudo_inverse_via_dfd,
    validate_quasi_singular,
)
from .filters import (
    AlphaRoundingWarning,
    FilterFamily,
    landweber_filter,
    parse_filter_spec,
    tikhonov_filter,
    truncated_filter,
    verify_filter_axioms,
    verify_qualification,
)
from .frames import (
    CoefficientSequence,
    Frame,
    FrameBounds,
    FrameError,
    analysis,
    canonical_dual,
    check_duality,
    estimate_frame_bounds,
    synthesis,
)
from .operators import (
    LinearOperator,
    identity_operator,
    make_hp_operator,
    make_volterra_operator,
    pseudo_inverse_direct,
    svd_decompose,
)
from .problems import build_dfd, shipped_dfds
from .rates import (
    RateStudyConfig,
    RateStudyResult,
    empirical_worst_case,
    fit_loglog_slope,
    make_source_element,
    noise_sample,
    optimality_witness,
    run_rate_study,
)
from .regularize import (
    FilteredDfdOperator,
    ParameterChoice,
    apriori_choice,
    check_admissibility,
    filtered_apply,
    operator_norm_bound,
    reconstruct,
)
from .rng import Xoshiro256StarStar
