"""Estimation of normalizing-constant ratios (free-energy differences,
marginal likelihoods) by simple, annealed, linked, and bridged importance
sampling, with analytic oracles and an experiment harness."""

from .bridges import (GeometricBridge, IteratedOptimal, OptimalBridge,
                      iterate_optimal_r, log_bridge)
from .distributions import (Canonical, DiscreteTable, GeneralizedNormal,
                            NestedUniform, PowerForm, ShiftedUniform,
                            uniform_grid_pair)
from .errors import (AccuracyError, CapabilityError, CapacityError,
                     ConfigError, DegenerateEstimateError, DomainError,
                     IterationError, ZRatioError)
from .estimators import (Cost, EstimateSummary, LadderConfig, RunRecord,
                         combine_bridged, estimate_expectation,
                         geometric_ladder, log_run_variance, reversed_config,
                         run_ais, run_bridge_pair, run_lis,
                         run_lis_independent, run_sis, stage_bridges,
                         summarize)
from .kernels import (DiscreteMatrix, Independence, KernelPair, OrderedSweep,
                      RandomWalkMetropolis, identity_kernel, metropolis_kernel)
from .logspace import NEG_INF

__version__ = "0.1.0"
