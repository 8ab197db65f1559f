"""Bridge distributions and the self-consistent ratio refinement.

A bridge between unnormalized densities p_a and p_b is itself an unnormalized
density evaluated pointwise from log p_a and log p_b.  Two forms are
supported: the geometric bridge sqrt(p_a p_b) and the asymptotically optimal
bridge p_a p_b / (r (N_a/N_b) p_a + p_b), which needs a guess for the ratio
r = Z_b/Z_a and the sample-size ratio.  All arithmetic stays in the log
domain.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEstimateError, IterationError
from .logspace import NEG_INF, log_mean


@dataclass(frozen=True)
class GeometricBridge:
    """sqrt(p_a * p_b): the exact midpoint of the two log densities."""


@dataclass(frozen=True)
class OptimalBridge:
    """p_a p_b / (r * size_ratio * p_a + p_b).

    ``r`` is the ratio guess (true value where known, 1 otherwise) and
    ``size_ratio`` is N_a/N_b for the two samples the bridge mediates.
    """

    r: float = 1.0
    size_ratio: float = 1.0

    def __post_init__(self):
        if self.r <= 0 or self.size_ratio <= 0:
            raise ValueError("r and size_ratio must be positive")


@dataclass(frozen=True)
class IteratedOptimal:
    """Top-level optimal bridge whose ratio is refined to self-consistency
    before use, rather than fixed in advance."""

    init: float = 1.0
    rel_tol: float = 1e-8
    max_iter: int = 1000


def log_bridge(spec, log_pa, log_pb):
    """Log bridge density from the two log densities at one state.

    A zero-density sentinel in either input yields the sentinel.
    """
    if log_pa == NEG_INF or log_pb == NEG_INF:
        return NEG_INF
    if isinstance(spec, GeometricBridge):
        return 0.5 * (log_pa + log_pb)
    rho = math.log(spec.r) + math.log(spec.size_ratio)
    return float(log_pa + log_pb - np.logaddexp(rho + log_pa, log_pb))


def log_bridge_vec(spec, log_pa, log_pb):
    """Vectorized ``log_bridge`` over arrays of log densities."""
    log_pa = np.asarray(log_pa, dtype=float)
    log_pb = np.asarray(log_pb, dtype=float)
    if isinstance(spec, GeometricBridge):
        return 0.5 * (log_pa + log_pb)
    rho = math.log(spec.r) + math.log(spec.size_ratio)
    dead = (log_pa == NEG_INF) | (log_pb == NEG_INF)
    safe_a = np.where(dead, 0.0, log_pa)
    safe_b = np.where(dead, 0.0, log_pb)
    out = safe_a + safe_b - np.logaddexp(rho + safe_a, safe_b)
    out[dead] = NEG_INF
    return out


def reversed_bridge(spec):
    """The same bridge seen from the swapped pair of densities.

    Inverting r and the size ratio changes the bridge only by a constant
    factor, so link probabilities and estimate factors are unchanged.
    """
    if isinstance(spec, GeometricBridge):
        return spec
    return OptimalBridge(r=1.0 / spec.r, size_ratio=1.0 / spec.size_ratio)


def _bridged_log_ratio(log_fwd, log_rev, log_r, log_kappa):
    """Log of the optimal-bridge combination of forward and reverse run
    estimates, at a fixed log ratio guess."""
    rho = log_r + log_kappa
    num_terms = log_fwd - np.logaddexp(rho, log_fwd)
    den_terms = log_rev - np.logaddexp(rho + log_rev, 0.0)
    # -inf estimates produce -inf terms (a zero contribution to the mean)
    num_terms[log_fwd == NEG_INF] = NEG_INF
    den_terms[log_rev == NEG_INF] = NEG_INF
    return log_mean(num_terms) - log_mean(den_terms)


def iterate_optimal_r(forward_log_estimates, reverse_log_estimates,
                      init=1.0, rel_tol=1e-8, max_iter=1000):
    """Fixed point of the optimal-bridge self-consistency map.

    Starting from ``init``, repeatedly re-evaluate the bridged ratio with the
    current guess until successive iterates agree within ``rel_tol`` in the
    log domain.  The fixed point is the maximum-likelihood ratio estimate.

    Raises ``IterationError`` (carrying the last iterate) on non-convergence
    and ``DegenerateEstimateError`` when either side is entirely zero.
    """
    log_fwd = np.asarray(forward_log_estimates, dtype=float)
    log_rev = np.asarray(reverse_log_estimates, dtype=float)
    if log_fwd.size == 0 or log_rev.size == 0:
        raise ValueError("both estimate lists must be nonempty")
    if np.all(log_fwd == NEG_INF) or np.all(log_rev == NEG_INF):
        raise DegenerateEstimateError("one side has no nonzero estimates")
    if init <= 0:
        raise ValueError("init must be positive")
    log_kappa = math.log(log_fwd.size / log_rev.size)
    log_r = math.log(init)
    for _ in range(max_iter):
        log_r_new = _bridged_log_ratio(log_fwd, log_rev, log_r, log_kappa)
        if abs(log_r_new - log_r) <= rel_tol:
            return math.exp(log_r_new)
        log_r = log_r_new
    raise IterationError(
        f"no fixed point within {max_iter} iterations", last=math.exp(log_r))
