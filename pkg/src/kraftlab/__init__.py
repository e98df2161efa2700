"""Kraft matrices and generalized Kraft inequalities for finite-state encoders."""

from ._budget import BudgetExceeded, enumeration_budget
from .converse import (
    EmpiricalDist,
    LossFunction,
    PredictorSpec,
    delta_function,
    empirical_cond_entropy,
    empirical_joint,
    individual_rate_bound,
    lz78_parse,
    lz_rate_bound,
    parse_predictor,
    partition_function,
    prediction_lower_bound,
    predictive_code_length,
    run_predictor,
    stochastic_rate_bound,
)
from .dyadic import Dyadic, DyadicMatrix, matrix_power
from .encoder import (
    EncodeTrace,
    Encoder,
    EncoderFormatError,
    ILVerdict,
    build_block_encoder,
    check_il,
    cyclic_extend,
    encode,
    is_irreducible,
    parse_encoder,
    shortest_path_input,
)
from .kraft import (
    SpectralReport,
    block_kraft_consistency,
    collatz_wielandt,
    gki_check,
    kraft_matrix,
    perron_vectors,
    prefix_repair_lengths,
    spectral_radius,
    zl_baseline,
)
from .lossy import Distortion, Quantizer, b_ell, ball_size, lossy_gki_check, lossy_kraft_matrix, phi_of_D
from .report import Check, Report
from .si import (
    JSRBracket,
    KraftFamily,
    SIEncoder,
    check_il_si,
    family_product,
    find_subinvariant_vector,
    jsr_bracket,
    kraft_family,
    parse_si_encoder,
    si_encode,
)

__version__ = "0.1.0"
