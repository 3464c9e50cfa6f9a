"""Joint moments, cumulants and critical values of the two-stage Mann-Whitney test."""

from .cumulants import (
    CumulantSet,
    PaperAggregates,
    Shape,
    Weighting,
    Which,
    mixed_cumulants,
    paper_aggregates,
    standardized_shape,
)
from .errors import (
    BudgetExceeded,
    DegenerateError,
    DomainError,
    InfeasibleAlpha,
    InsufficientData,
    TieError,
    TwoStageError,
)
from .moments import (
    MomentSet,
    Mode,
    helper_h_expectation,
    helper_k_expectation,
    moments_general,
    moments_null,
)
from .oracle import (
    JointPmf,
    MomentEstimates,
    ValidationMode,
    ValidationReport,
    Verdict,
    exact_joint_pmf,
    pmf_cumulants,
    pmf_moments,
    simulate_joint,
    validate_formulas,
)
from .pi_model import (
    PiEstimate,
    PiVector,
    null_indicator_table,
    null_pi_vector,
    pi_monte_carlo,
    pi_plugin_from_data,
)
from .quantile import (
    CriticalValuePair,
    Method,
    cornish_fisher_quantile,
    critical_values_cf,
    critical_values_exact,
    normal_inverse_cdf,
    overall_size,
)
from .ustat import (
    Decision,
    Outcome,
    SampleDesign,
    TwoStageData,
    mann_whitney_u,
    two_stage_decision,
    two_stage_statistics,
)

__version__ = "0.1.0"
