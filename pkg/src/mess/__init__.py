"""Multiproposal elliptical slice sampling."""

from .prior import GaussianPrior, rotate_pair
from .samplers import (
    ChainResult,
    ChainState,
    MessConfig,
    SamplerSpec,
    StepStats,
    ess_step,
    mess_step,
    mh_step,
    run_chain,
    tune_mh,
    tune_mh_posterior,
)
from .transition import Distance, solve_transition_lp, uniform_matrix

__version__ = "0.1.0"
