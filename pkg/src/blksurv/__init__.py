"""Commutative Bayes linear kinematic inference for dynamic
piecewise-constant-hazard survival models.

Conjugate gamma updates per person-interval are translated to log-hazard
moments through a guide relationship, propagated through a temporally
correlated coefficient prior, and pooled into a single order-independent
posterior revision. A fast coefficient-space engine carries production
fits; a joint-state reference pooling and desk-scale full-Bayes oracles
back it in tests and the ``compare`` CLI path.
"""
from .bayeslin import (KinematicSource, SecondOrderSpec, adjust,
                       kinematic_block, kinematic_single, pool_naive,
                       pool_revised, pseudo_inverse)
from .dynprior import (CoefficientPrior, EvolutionSpec, StationarySpec,
                       assemble_omega, design_matrix, eta_moments,
                       propagate_cov, stationary_cov)
from .elicit import (RatioJudgement, baseline_range, moments_from_ratios,
                     partial_likelihood_to_ratio, ratio_to_partial_likelihood)
from .engine import (ObservationIncrement, PosteriorSummary, fit, increments,
                     pool_fast, predict_survival, simulate)
from .errors import (AccuracyError, BlkSurvError, ConsistencyError,
                     DomainError, InputError, PoolingValidityError)
from .guide import (DEFAULT_METHOD, GammaBelief, GuideMethod, LinkMoments,
                    forward, inverse, observe)
from .hazards import (EventStatus, IntervalGrid, IntervalObservation,
                      SurvivalRecord, decompose, decompose_all, log_grid,
                      log_likelihood, survival_function)
from .oracle import (AdjustedMoments, McmcSummary, TwoHazardScenario,
                     blk_identity_link, blk_log_link, full_bayes_quadrature,
                     full_bayes_single, mcmc_reference)
from .specfun import digamma, inverse_trigamma, trigamma

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "AdjustedMoments", "BlkSurvError", "CoefficientPrior",
    "ConsistencyError", "DEFAULT_METHOD", "DomainError", "EventStatus",
    "EvolutionSpec", "GammaBelief", "GuideMethod", "InputError",
    "IntervalGrid", "IntervalObservation", "KinematicSource", "LinkMoments",
    "McmcSummary", "ObservationIncrement", "PoolingValidityError",
    "PosteriorSummary", "RatioJudgement", "SecondOrderSpec",
    "StationarySpec", "SurvivalRecord", "TwoHazardScenario", "adjust",
    "assemble_omega", "baseline_range", "blk_identity_link", "blk_log_link",
    "decompose", "decompose_all", "design_matrix", "digamma", "eta_moments",
    "fit", "forward", "full_bayes_quadrature", "full_bayes_single",
    "increments", "inverse", "inverse_trigamma", "kinematic_block",
    "kinematic_single", "log_grid", "log_likelihood", "mcmc_reference",
    "moments_from_ratios", "observe", "partial_likelihood_to_ratio",
    "pool_fast", "pool_naive", "pool_revised", "predict_survival",
    "propagate_cov", "pseudo_inverse", "ratio_to_partial_likelihood",
    "simulate", "stationary_cov", "survival_function", "trigamma",
]
