"""Opinion dynamics under uniform communication noise on the complete graph.

Simulation, closed-form drift analysis and exact finite-chain ground truth
for the three-sample majority rule and its two-choices and undecided-state
cousins, built around the phase transition at noise probability 1/3.
"""

__version__ = "0.1.0"

from .analysis import (
    InvalidEpsilon,
    NOISE_THRESHOLD,
    TheoremThresholds,
    equilibrium_bias,
    expected_bias,
    metastable_interval,
    theorem_thresholds,
)
from .chain import (
    BiasChain,
    CapExceeded,
    DimensionMismatch,
    Dynamics,
    SingularSystem,
    build_chain,
    evolve,
    expected_hitting_time,
    one_step_mean_bias,
    point_mass,
    quasi_stationary_band_mass,
)
from .config import ParseError, parse_config, serialize_config
from .dynamics import (
    Configuration,
    NonIntegralStubbornSize,
    PullDistribution,
    RngStream,
    StubbornConfiguration,
    TernaryConfiguration,
    adopt_beta_probability_3maj,
    pull_probabilities,
    step_2choices,
    step_agentwise_3maj,
    step_aggregate_3maj,
    step_stubborn_3maj,
    step_undecided,
    ternary_pull_probabilities,
    to_stubborn_model,
)
from .harness import (
    ExperimentConfig,
    ExperimentSummary,
    NoiseSummary,
    PhasePoint,
    RecordMode,
    TrialRecord,
    ValidationError,
    detect_majority_switch,
    phase_diagram,
    run_experiment,
    run_trial,
    run_trials,
    summarize,
)

__all__ = [
    "__version__",
    "BiasChain",
    "CapExceeded",
    "Configuration",
    "DimensionMismatch",
    "Dynamics",
    "ExperimentConfig",
    "ExperimentSummary",
    "InvalidEpsilon",
    "NOISE_THRESHOLD",
    "NoiseSummary",
    "NonIntegralStubbornSize",
    "ParseError",
    "PhasePoint",
    "PullDistribution",
    "RecordMode",
    "RngStream",
    "SingularSystem",
    "StubbornConfiguration",
    "TernaryConfiguration",
    "TheoremThresholds",
    "TrialRecord",
    "ValidationError",
    "adopt_beta_probability_3maj",
    "build_chain",
    "detect_majority_switch",
    "equilibrium_bias",
    "evolve",
    "expected_bias",
    "expected_hitting_time",
    "metastable_interval",
    "one_step_mean_bias",
    "parse_config",
    "phase_diagram",
    "point_mass",
    "pull_probabilities",
    "quasi_stationary_band_mass",
    "run_experiment",
    "run_trial",
    "run_trials",
    "serialize_config",
    "step_2choices",
    "step_agentwise_3maj",
    "step_aggregate_3maj",
    "step_stubborn_3maj",
    "step_undecided",
    "summarize",
    "ternary_pull_probabilities",
    "theorem_thresholds",
    "to_stubborn_model",
]
