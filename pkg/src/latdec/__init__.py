"""Lattice decoding toolkit and fading-channel simulation harness.

The package provides regularized lattice decoding with decision-feedback
preprocessing, basis-reduction-aided suboptimal decoders with certified
approximation ratios, fading-channel samplers, and a Monte Carlo engine
that estimates error-rate diversity slopes against reference curves.
"""

from .channels import (
    ArqEpisode,
    ChannelSample,
    NoiseModel,
    arq_ack,
    complex_gaussian,
    embed_complex,
    fixed_channel,
    sample_mimo_ofdm,
    sample_naf_relay,
    sample_noise,
    sample_quasi_static_rayleigh,
    simulate_arq_episode,
    standard_normal,
    trial_rng,
)
from .decoders import (
    DEFAULT_NODE_BUDGET,
    METHOD_LR_LINEAR,
    METHOD_LR_SIC,
    METHOD_ML,
    METHOD_NAIVE,
    METHOD_REG_EXACT,
    METHODS,
    DecodeGate,
    DecodeOutcome,
    GdfeFilters,
    LatticeDecodeResult,
    RegularizedProblem,
    approximation_ratio,
    babai_nearest_plane,
    decode,
    gram_inverse_regularizer,
    lr_aided_linear,
    ml_decode,
    mmse_gdfe_filters,
    naive_lattice_decode,
    regularized_metric,
    sphere_decode_regularized,
)
from .dmtsim import (
    ChannelConfig,
    ErrorRateRecord,
    OutageEstimate,
    SlopeEstimate,
    SweepConfig,
    SweepResult,
    dmt_reference_breakpoints,
    dmt_reference_value,
    estimate_diversity_slope,
    estimate_error_rate,
    estimate_outage_probability,
    run_sweep,
    sweep_cell,
    wilson_interval,
)
from .errors import (
    BudgetExceeded,
    EnumerationOverflow,
    InsufficientData,
    IterationOverflow,
    LatdecError,
    NearSingularChannel,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    SchemaError,
    SingularInput,
    SingularTriangular,
)
from .experiment import load_experiment, parse_experiment
from .lattice import (
    Codebook,
    LatticeDesign,
    ShapingRegion,
    codebook_size_estimate,
    enumerate_codebook,
    min_lattice_distance_nu,
    pep_lower_bound,
    random_dither,
    round_half_away_from_zero,
    scaling_factor,
    squarify_generator,
)
from .reduction import (
    GateOutcome,
    ReducedBasis,
    gate_exponent_default,
    gated_reduce,
    integer_det,
    is_lll_reduced,
    iteration_bound,
    iteration_bound_for_kappa,
    lll_reduce,
    orthogonality_defect,
)
from .validation import run_suites

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "LatdecError", "NotSymmetric", "NotPositiveDefinite", "RankDeficient",
    "SingularTriangular", "SingularInput", "BudgetExceeded",
    "EnumerationOverflow", "IterationOverflow", "NearSingularChannel",
    "InsufficientData", "SchemaError",
    # lattice
    "ShapingRegion", "LatticeDesign", "Codebook", "round_half_away_from_zero",
    "scaling_factor", "enumerate_codebook", "codebook_size_estimate",
    "squarify_generator", "min_lattice_distance_nu", "pep_lower_bound",
    "random_dither",
    # reduction
    "ReducedBasis", "GateOutcome", "lll_reduce", "is_lll_reduced",
    "iteration_bound", "iteration_bound_for_kappa", "gate_exponent_default",
    "gated_reduce", "integer_det", "orthogonality_defect",
    # decoders
    "METHODS", "METHOD_ML", "METHOD_NAIVE", "METHOD_REG_EXACT",
    "METHOD_LR_SIC", "METHOD_LR_LINEAR", "DEFAULT_NODE_BUDGET",
    "DecodeGate", "GdfeFilters", "RegularizedProblem", "LatticeDecodeResult",
    "DecodeOutcome", "mmse_gdfe_filters", "gram_inverse_regularizer",
    "regularized_metric", "ml_decode", "sphere_decode_regularized",
    "naive_lattice_decode", "babai_nearest_plane", "lr_aided_linear",
    "approximation_ratio", "decode",
    # channels
    "ChannelSample", "NoiseModel", "ArqEpisode", "trial_rng",
    "standard_normal", "complex_gaussian", "embed_complex",
    "sample_quasi_static_rayleigh", "sample_mimo_ofdm", "sample_naf_relay",
    "fixed_channel", "arq_ack", "simulate_arq_episode", "sample_noise",
    # dmtsim
    "ChannelConfig", "SweepConfig", "ErrorRateRecord", "SlopeEstimate",
    "OutageEstimate", "SweepResult", "wilson_interval", "estimate_error_rate",
    "sweep_cell", "estimate_outage_probability", "estimate_diversity_slope",
    "run_sweep", "dmt_reference_breakpoints", "dmt_reference_value",
    # experiment / validation
    "load_experiment", "parse_experiment", "run_suites",
]
