"""Quick self-checks behind the ``validate`` CLI subcommand.

Each check returns (name, passed, detail).  These are the fast structural
identities: enumeration unbiasedness, mutual reversibility, forward/reverse
duality, link-averaging variance ordering, and the bridge fixed point.  The
full test suite covers far more; this is the in-the-field smoke panel.
"""

import math

import numpy as np

from .bridges import GeometricBridge, OptimalBridge, iterate_optimal_r
from .distributions import DiscreteTable
from .estimators import LadderConfig, reversed_config, run_lis
from .kernels import metropolis_kernel, identity_kernel
from .oracles import (enumerate_ais_expectation, enumerate_lis_expectation,
                      enumerate_lis_independent)


def _random_table(rng, n_states):
    while True:
        p0 = rng.integers(1, 9, n_states).tolist()
        p1 = rng.integers(1, 9, n_states).tolist()
        if p0 != p1:
            return DiscreteTable(p0, p1)


def _check_enumeration(rng):
    worst = 0.0
    for trial in range(3):
        seq = _random_table(rng, int(rng.integers(2, 5)))
        kernel = identity_kernel(seq) if trial == 0 else metropolis_kernel(seq)
        bridge = GeometricBridge() if trial % 2 == 0 else OptimalBridge(r=1.3)
        config = LadderConfig(etas=(0.0, 0.5, 1.0), chain_lengths=(1, 2, 1),
                              bridges=bridge, kernel=kernel)
        true_r = math.exp(seq.true_log_r())
        lis_mean, _ = enumerate_lis_expectation(seq, config)
        ais_mean, _ = enumerate_ais_expectation(seq, config)
        worst = max(worst, abs(lis_mean - true_r), abs(ais_mean - true_r))
    return ("enumeration unbiasedness", worst < 1e-9, f"max |bias| {worst:.2e}")


def _check_reversibility(rng):
    seq = _random_table(rng, 4)
    kernel = metropolis_kernel(seq)
    eta = 0.5
    fwd = kernel.matrix(eta)
    rev = kernel.reverse_matrix(eta)
    probs = seq.probs(eta)
    gap = np.abs(probs[:, None] * fwd - (probs[:, None] * rev).T).max()
    hold = np.abs(probs @ fwd - probs).max()
    ok = gap < 1e-12 and hold < 1e-12
    return ("mutual reversibility", ok, f"identity gap {gap:.2e}, drift {hold:.2e}")


def _check_duality(rng):
    seq = _random_table(rng, 3)
    config = LadderConfig(etas=(0.0, 0.4, 1.0), chain_lengths=(2, 1, 2),
                          bridges=GeometricBridge(),
                          kernel=metropolis_kernel(seq), direction="reverse")
    seed = int(rng.integers(0, 2**32))
    a = run_lis(config, np.random.default_rng(seed))
    b = run_lis(reversed_config(config), np.random.default_rng(seed))
    ok = a.log_estimate == b.log_estimate
    return ("forward/reverse duality", ok,
            f"{a.log_estimate!r} vs {b.log_estimate!r}")


def _check_link_averaging(rng):
    seq = _random_table(rng, 3)
    enum = enumerate_lis_independent(seq, GeometricBridge(), k0=1, k1=1)
    true_r = math.exp(seq.true_log_r())
    ok = (abs(enum.mean_unaveraged - true_r) < 1e-10
          and abs(enum.mean_averaged - true_r) < 1e-10
          and enum.var_averaged <= enum.var_unaveraged + 1e-12)
    return ("link-averaging ordering", ok,
            f"vars {enum.var_averaged:.4f} <= {enum.var_unaveraged:.4f}")


def _check_bridge_fixed_point(rng):
    fwd = np.log(rng.uniform(0.5, 2.0, 10))
    rev = np.log(rng.uniform(0.5, 2.0, 10))
    r = iterate_optimal_r(fwd, rev)
    # the fixed point reproduces itself under one more map application
    r_again = iterate_optimal_r(fwd, rev, init=r, max_iter=2)
    ok = abs(math.log(r_again) - math.log(r)) < 1e-6
    return ("bridge ratio fixed point", ok, f"r {r:.6f}")


def run_all(seed=0):
    rng = np.random.default_rng(seed)
    return [
        _check_enumeration(rng),
        _check_reversibility(rng),
        _check_duality(rng),
        _check_link_averaging(rng),
        _check_bridge_fixed_point(rng),
    ]
