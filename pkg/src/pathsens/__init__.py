"""Pathwise relative-entropy and Fisher-information sensitivity analysis
for Markov chains, reaction networks and SDEs."""

__version__ = "0.1.0"

from .errors import (
    AbsoluteContinuityViolation,
    CountOverflow,
    DivisionByNearZero,
    ModelError,
    NetworkFormatError,
    NonFiniteState,
    PathSensError,
    SingularDiffusion,
    UnboundedGrowthGuard,
    ZeroPropensity,
)
from .model import (
    MassAction,
    MichaelisMenten,
    ParameterVector,
    ParametricDtmc,
    Perturbation,
    Reaction,
    ReactionNetwork,
    SdeModel,
    grad_log_propensity,
    load_network,
    fixture_path,
    ornstein_uhlenbeck,
    propensity,
    propensity_log_ratio,
    total_rate,
    two_state_chain,
)
from .simulate import (
    PathEnsemble,
    derive_seed,
    dtmc_ensemble,
    dtmc_simulate,
    em_ensemble,
    em_simulate,
    ssa_ensemble,
    ssa_simulate,
    state_at,
)
