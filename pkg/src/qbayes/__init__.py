"""Sequential quantum Bayesian inference with exchangeable and change-point priors."""
from ._backend import BACKEND
from .infer import (
    InferenceTrajectory,
    RunOptions,
    bayes_update_ensemble,
    cip_condition,
    dense_sequence_update,
    effective_sample_size,
    pcn_move,
    predictive_marginal,
    predictive_probabilities,
    resample_move,
    run_inference,
)
from .measure import (
    KrausChannel,
    Povm,
    ZeroEvidence,
    ZeroProbabilityOutcome,
    born_probabilities,
    is_informationally_complete,
    kraus_update,
    lueders_channel,
    standard_povm,
)
from .priors import (
    ChangePointPrior,
    ParticleEnsemble,
    cip_state,
    counter_inductive_prior,
    ensemble_state,
    haar_pure_ensemble,
    hs_mixed_ensemble,
    plus_product_prior,
    two_qubit_pair_ensemble,
)
from .qalg import DensityOperator, partial_trace, tensor, trace_distance, validate_density

__version__ = "0.1.0"
