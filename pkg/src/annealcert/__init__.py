"""Metropolis-Hastings global optimization with finite-time guarantees."""
from .domain import (Criterion, Domain, NoisyCriterion, ScaleRecord, get_problem, grid_scalars,
                     peaks_criterion, peaks_noisy, scale_criterion, step1d)
from .guarantees import (GuaranteeSpec, ScheduleCost, TargetParams, confidence_lower_bound,
                         j_bound, j_bound_value, optimal_delta)
from .oracle import GridField
from .sampler import ChainRun, CoolingSchedule, Proposal, RunSpec, run_chain, run_ensemble

__version__ = "0.1.0"
