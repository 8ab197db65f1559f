"""Ratio and expectation estimators.

Implements the single-sample and chained estimators for r = Z_1/Z_0:

* simple importance sampling (``run_sis``) and two-sample bridge sampling
  (``run_bridge_pair``);
* annealed runs (``run_ais``): one Markov transition per ladder stage, the
  product of pointwise density ratios is exactly unbiased for r;
* linked runs (``run_lis``): bridge-style stage estimates chained through
  randomly selected link states, also exactly unbiased;
* top-level bridged combinations of forward and reverse runs
  (``combine_bridged``);
* the no-intermediate independent-sampling variant with optional
  Rao-Blackwellized link averaging (``run_lis_independent``);
* consistent expectation estimation under the target from forward linked
  runs (``estimate_expectation``).

Every run is a pure function of its config and random stream.  Estimates are
accumulated in the log domain; a run whose stage weights are all zero yields
the estimate 0 (``NEG_INF`` log), a legitimate outcome that preserves
unbiasedness.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .bridges import (GeometricBridge, IteratedOptimal, OptimalBridge,
                      iterate_optimal_r, log_bridge_vec, reversed_bridge)
from .errors import DegenerateEstimateError, DomainError
from .kernels import KernelPair
from .logspace import NEG_INF, log_mean, log_sum


@dataclass
class Cost:
    """Elementary work counters: endpoint exact draws and kernel updates."""

    draws: int = 0
    steps: int = 0

    def total(self, draw_weight=1.0):
        return draw_weight * self.draws + self.steps

    def __add__(self, other):
        return Cost(self.draws + other.draws, self.steps + other.steps)


@dataclass(frozen=True)
class RunPath:
    """Audit record of one run: per-stage states and the index draws."""

    stage_states: tuple
    nus: tuple
    mus: tuple


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one run: log estimate (NEG_INF for a zero estimate),
    optionally the final-stage states and the full path, and the work done."""

    log_estimate: float
    cost: Cost
    final_stage_states: object = None
    path: object = None

    @property
    def estimate(self):
        return math.exp(self.log_estimate)


@dataclass(frozen=True)
class LadderConfig:
    """A tempering ladder: eta schedule, per-stage chain lengths, stage
    bridges, the kernel pair, and the run direction.

    ``etas`` normally ascends from exactly 0 to exactly 1; a descending
    (1 to 0) ladder is also accepted, which is what ``reversed_config``
    produces.  ``bridges`` is one spec per stage, or a single spec applied to
    all stages.  ``direction="reverse"`` runs the flipped ladder, giving an
    estimate of the reciprocal ratio.
    """

    etas: tuple
    chain_lengths: tuple
    bridges: tuple
    kernel: KernelPair
    direction: str = "forward"
    keep_path: bool = False
    keep_final_states: bool = False
    # optional override for the initial draw: callable (eta, rng) -> state.
    # Lets a run start from an external stationary chain when exact draws at
    # the starting endpoint are unavailable (the usual case for reverse runs
    # on real problems).  None means the family's exact sampler.
    start_sampler: object = None

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        lengths = tuple(int(k) for k in self.chain_lengths)
        if len(etas) < 2:
            raise ValueError("a ladder needs at least the two endpoints")
        if {etas[0], etas[-1]} != {0.0, 1.0}:
            raise ValueError("eta endpoints must be exactly 0 and 1")
        diffs = np.diff(etas)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("etas must be strictly monotone")
        if len(lengths) != len(etas):
            raise ValueError("chain_lengths must match etas in length")
        if any(k < 0 for k in lengths):
            raise ValueError("chain lengths must be nonnegative")
        bridges = self.bridges
        if isinstance(bridges, (GeometricBridge, OptimalBridge)):
            bridges = (bridges,) * (len(etas) - 1)
        bridges = tuple(bridges)
        if len(bridges) != len(etas) - 1:
            raise ValueError("need one stage bridge per adjacent pair")
        if self.direction not in ("forward", "reverse"):
            raise ValueError("direction must be 'forward' or 'reverse'")
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "chain_lengths", lengths)
        object.__setattr__(self, "bridges", bridges)

    @property
    def n(self):
        return len(self.etas) - 1


@dataclass
class EstimateSummary:
    """Aggregate of per-run estimates in the linear and log domains.

    ``r_hat`` is the arithmetic mean of the per-run estimates with zeros
    included, ``se_r`` its standard error (sample sd over sqrt(M)), and the
    log-domain fields follow by the delta method: se_log_r = se_r / r_hat.
    """

    r_hat: float
    se_r: float
    log_r_hat: float
    se_log_r: float
    M: int
    zero_count: int
    true_log_r: object = None


def geometric_ladder(n):
    """The evenly spaced schedule eta_j = j/n."""
    return tuple(j / n for j in range(n + 1))


def stage_bridges(kind, etas, chain_lengths, seq=None, r_guesses=None):
    """Build the per-stage bridge list for a ladder.

    ``kind`` is "geometric" or "optimal".  Optimal stage bridges use the
    size ratio (K_j+1)/(K_{j+1}+1) and a ratio guess per stage: the values in
    ``r_guesses`` if given, else the family's true per-stage ratios when
    ``seq`` is provided, else 1.
    """
    n = len(etas) - 1
    if kind == "geometric":
        return (GeometricBridge(),) * n
    if kind != "optimal":
        raise ValueError(f"unknown bridge kind: {kind!r}")
    out = []
    for j in range(n):
        if r_guesses is not None:
            r = r_guesses[j]
        elif seq is not None:
            r = math.exp(seq.stage_log_r(etas[j], etas[j + 1]))
        else:
            r = 1.0
        size_ratio = (chain_lengths[j] + 1) / (chain_lengths[j + 1] + 1)
        out.append(OptimalBridge(r=r, size_ratio=size_ratio))
    return tuple(out)


def reversed_config(config):
    """The mirror-image ladder: etas and chain lengths reversed, stage
    bridges seen from the swapped side, kernel directions exchanged.

    Running the reverse direction is by definition a forward run of this
    config."""
    return replace(
        config,
        etas=config.etas[::-1],
        chain_lengths=config.chain_lengths[::-1],
        bridges=tuple(reversed_bridge(b) for b in reversed(config.bridges)),
        kernel=config.kernel.swapped(),
        direction="forward",
    )


def _traversed(config):
    if config.direction == "reverse":
        return reversed_config(config)
    return config


def _draw_start(cfg, seq, rng, cost):
    cost.draws += 1
    if cfg.start_sampler is not None:
        return cfg.start_sampler(cfg.etas[0], rng)
    return seq.exact_sample(cfg.etas[0], rng)


def _categorical(log_weights, log_total, rng):
    probs = np.exp(log_weights - log_total)
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(idx, probs.size - 1)


def _fill_stage(kernel, eta, length, pin_index, pin_state, rng, cost):
    """Populate one stage's chain of length+1 states around the pinned state:
    forward transitions above the pin, reverse transitions below."""
    states = [None] * (length + 1)
    states[pin_index] = pin_state
    if pin_index < length:
        states[pin_index + 1:] = kernel.run_forward(
            eta, pin_state, length - pin_index, rng)
        cost.steps += kernel.cost_per_step * (length - pin_index)
    if pin_index > 0:
        down = kernel.run_reverse(eta, pin_state, pin_index, rng)
        states[:pin_index] = reversed(down)
        cost.steps += kernel.cost_per_step * pin_index
    return states


def run_ais(config, rng):
    """One annealed run over the ladder.

    Draws the start exactly at the first eta, applies one forward transition
    per subsequent stage, and accumulates the log of the pointwise density
    ratio at each stage.  A zero ratio ends the run with estimate 0.
    """
    cfg = _traversed(config)
    seq = cfg.kernel.target
    etas = cfg.etas
    n = cfg.n
    cost = Cost()
    x = _draw_start(cfg, seq, rng, cost)
    states = [x]
    log_est = 0.0
    for j in range(n):
        log_est += seq.log_p(etas[j + 1], x) - seq.log_p(etas[j], x)
        if log_est == NEG_INF:
            break
        if j + 1 < n:
            x = cfg.kernel.step_forward(etas[j + 1], x, rng)
            cost.steps += cfg.kernel.cost_per_step
            states.append(x)
    path = RunPath(stage_states=(tuple(states),), nus=(), mus=()) if cfg.keep_path else None
    return RunRecord(log_estimate=log_est, cost=cost, path=path)


def run_lis(config, rng):
    """One linked run over the ladder.

    Follows the chain-and-link construction: a uniform pin index places the
    exact draw in the first stage's chain, forward and reverse transitions
    fill the remaining slots, a link state is selected with probability
    proportional to bridge weight over stage density, and the link seeds the
    next stage at a fresh uniform pin.  The log estimate is the sum over
    stages of log mean bridge-weight ratios, current stage over next.
    """
    cfg = _traversed(config)
    seq = cfg.kernel.target
    kernel = cfg.kernel
    etas, lengths, bridges = cfg.etas, cfg.chain_lengths, cfg.bridges
    n = cfg.n
    cost = Cost()

    nu = int(rng.integers(0, lengths[0] + 1))
    start = _draw_start(cfg, seq, rng, cost)
    nus = [nu]
    mus = []
    all_states = []
    log_est = 0.0
    link = start
    for j in range(n + 1):
        if j > 0:
            nu = int(rng.integers(0, lengths[j] + 1))
            nus.append(nu)
        states = _fill_stage(kernel, etas[j], lengths[j], nu, link, rng, cost)
        if cfg.keep_path:
            all_states.append(tuple(states))
        xs = np.asarray(states)
        log_here = seq.log_p_vec(etas[j], xs)
        if j > 0:
            # denominator of the previous stage's factor
            log_prev = seq.log_p_vec(etas[j - 1], xs)
            den = log_sum(log_bridge_vec(bridges[j - 1], log_prev, log_here)
                          - log_here)
            log_est += math.log(lengths[j] + 1) - den
        if j < n:
            log_next = seq.log_p_vec(etas[j + 1], xs)
            weights = log_bridge_vec(bridges[j], log_here, log_next) - log_here
            num = log_sum(weights)
            if num == NEG_INF:
                # no state carries bridge weight: the estimate is zero and
                # the link selection is undefined, so the run ends here
                path = (RunPath(tuple(all_states), tuple(nus), tuple(mus))
                        if cfg.keep_path else None)
                return RunRecord(log_estimate=NEG_INF, cost=cost, path=path)
            log_est += num - math.log(lengths[j] + 1)
            mu = _categorical(weights, num, rng)
            mus.append(mu)
            link = states[mu]
        else:
            # uniform final index: no effect on the estimate, drawn and
            # recorded so audited paths match the full construction
            mus.append(int(rng.integers(0, lengths[n] + 1)))
    final = np.asarray(states) if cfg.keep_final_states else None
    path = (RunPath(tuple(all_states), tuple(nus), tuple(mus))
            if cfg.keep_path else None)
    return RunRecord(log_estimate=log_est, cost=cost,
                     final_stage_states=final, path=path)


def run_lis_independent(seq, bridge, k0, k1, average_link, rng):
    """Linked estimate from independent endpoint samples, no intermediates.

    Draws k0+1 points from the eta=0 distribution and k1 from eta=1.  With
    ``average_link`` false, one link is selected by bridge weight and the
    two-sum estimate is returned; with true, the estimate is averaged over
    the link choice (Rao-Blackwellized), which cannot increase the
    mean-squared error.
    """
    if k0 < 0 or k1 < 0:
        raise ValueError("sample counts must be nonnegative")
    cost = Cost()
    x0 = np.asarray(seq.exact_sample(0.0, rng, size=k0 + 1))
    x1 = np.asarray(seq.exact_sample(1.0, rng, size=k1)) if k1 > 0 else np.empty(0)
    cost.draws += k0 + 1 + k1

    l0_x0 = seq.log_p_vec(0.0, x0)
    l1_x0 = seq.log_p_vec(1.0, x0)
    bridge_x0 = log_bridge_vec(bridge, l0_x0, l1_x0)
    link_weights = bridge_x0 - l0_x0

    if k1 > 0:
        l0_x1 = seq.log_p_vec(0.0, x1)
        l1_x1 = seq.log_p_vec(1.0, x1)
        other_sum = log_sum(log_bridge_vec(bridge, l0_x1, l1_x1) - l1_x1)
    else:
        other_sum = NEG_INF

    alive = link_weights > NEG_INF
    if not alive.any():
        return RunRecord(log_estimate=NEG_INF, cost=cost)
    # bridge weight over the eta=1 density at each possible link
    link_terms = np.full(k0 + 1, NEG_INF)
    link_terms[alive] = bridge_x0[alive] - l1_x0[alive]

    scale = math.log(k1 + 1) - math.log(k0 + 1)
    if average_link:
        terms = np.full(k0 + 1, NEG_INF)
        terms[alive] = link_weights[alive] - np.logaddexp(
            link_terms[alive], other_sum)
        log_est = scale + log_sum(terms)
    else:
        total = log_sum(link_weights)
        mu = _categorical(link_weights, total, rng)
        log_est = scale + total - np.logaddexp(link_terms[mu], other_sum)
    return RunRecord(log_estimate=float(log_est), cost=cost)


def _relative_se(log_terms):
    """SE of the mean of exp(log_terms), divided by that mean (stable).

    A single term has no estimable spread; the SE is nan then.
    """
    if log_terms.size < 2:
        return math.nan
    m = log_terms.max()
    if m == NEG_INF:
        raise DegenerateEstimateError("all terms are zero")
    w = np.exp(log_terms - m)
    return w.std(ddof=1) / (w.mean() * math.sqrt(w.size))


def combine_bridged(forward, reverse, kind):
    """Top-level bridge combination of forward and reverse run records.

    ``kind`` selects the bridge: ``GeometricBridge`` divides the mean root
    of forward estimates by the mean root of reverse ones; ``OptimalBridge``
    applies the optimal form at the fixed ratio guess ``kind.r``;
    ``IteratedOptimal`` first solves the self-consistency equation for r.
    The count ratio M/Mbar always comes from the actual list lengths.  The
    log standard error is the root-sum-square of the numerator and
    denominator log standard errors.
    """
    log_fwd = np.asarray([r.log_estimate for r in forward], dtype=float)
    log_rev = np.asarray([r.log_estimate for r in reverse], dtype=float)
    if log_fwd.size == 0 or log_rev.size == 0:
        raise ValueError("need at least one run on each side")
    if np.all(log_fwd == NEG_INF) or np.all(log_rev == NEG_INF):
        raise DegenerateEstimateError("one side has no nonzero estimates")

    if isinstance(kind, GeometricBridge):
        num_terms = 0.5 * log_fwd
        den_terms = 0.5 * log_rev
    else:
        if isinstance(kind, IteratedOptimal):
            r = iterate_optimal_r(log_fwd, log_rev, init=kind.init,
                                  rel_tol=kind.rel_tol, max_iter=kind.max_iter)
        else:
            r = kind.r
        rho = math.log(r) + math.log(log_fwd.size / log_rev.size)
        num_terms = log_fwd - np.logaddexp(rho, log_fwd)
        den_terms = log_rev - np.logaddexp(rho + log_rev, 0.0)
        num_terms[log_fwd == NEG_INF] = NEG_INF
        den_terms[log_rev == NEG_INF] = NEG_INF

    log_r_hat = float(log_mean(num_terms) - log_mean(den_terms))
    se_log = float(math.hypot(_relative_se(num_terms), _relative_se(den_terms)))
    r_hat = math.exp(log_r_hat)
    zeros = int((log_fwd == NEG_INF).sum() + (log_rev == NEG_INF).sum())
    return EstimateSummary(r_hat=r_hat, se_r=se_log * r_hat,
                           log_r_hat=log_r_hat, se_log_r=se_log,
                           M=log_fwd.size + log_rev.size, zero_count=zeros)


def summarize(records, true_log_r=None):
    """Linear-domain mean and SE over per-run estimates, zeros included."""
    logs = np.asarray([r.log_estimate for r in records], dtype=float)
    return summarize_logs(logs, true_log_r)


def summarize_logs(log_estimates, true_log_r=None):
    logs = np.asarray(log_estimates, dtype=float)
    m_runs = logs.size
    if m_runs < 2:
        raise ValueError("need at least two runs to estimate a spread")
    zero_count = int((logs == NEG_INF).sum())
    peak = logs.max()
    if peak == NEG_INF:
        return EstimateSummary(r_hat=0.0, se_r=0.0, log_r_hat=NEG_INF,
                               se_log_r=NEG_INF, M=m_runs,
                               zero_count=zero_count, true_log_r=true_log_r)
    shifted = np.exp(logs - peak)
    mean_s = shifted.mean()
    se_log = float(shifted.std(ddof=1) / (mean_s * math.sqrt(m_runs)))
    log_r_hat = float(peak + math.log(mean_s))
    r_hat = math.exp(log_r_hat)
    return EstimateSummary(r_hat=r_hat, se_r=se_log * r_hat,
                           log_r_hat=log_r_hat, se_log_r=se_log, M=m_runs,
                           zero_count=zero_count, true_log_r=true_log_r)


def log_run_variance(records):
    """Sample variance of the per-run log estimates, zeros excluded.

    Returns (variance, zero_count).  A diagnostic: zero runs have no finite
    log, so they are counted, not included.
    """
    logs = np.asarray([r.log_estimate for r in records], dtype=float)
    finite = logs[logs > NEG_INF]
    zero_count = int(logs.size - finite.size)
    if finite.size < 2:
        raise DegenerateEstimateError("fewer than two nonzero runs")
    return float(finite.var(ddof=1)), zero_count


def run_sis(seq, n_samples, rng, sampler_or_chain="exact"):
    """Simple importance sampling for r from draws at eta=0.

    ``sampler_or_chain`` is "exact" for the family's sampler, a callable
    ``(rng, size) -> array`` of draws, or a ``KernelPair`` used as a
    stationary chain started from one exact draw.
    """
    if n_samples < 2:
        raise ValueError("need at least two draws")
    if sampler_or_chain == "exact":
        xs = np.asarray(seq.exact_sample(0.0, rng, size=n_samples))
    elif isinstance(sampler_or_chain, KernelPair):
        start = seq.exact_sample(0.0, rng)
        xs = np.asarray([start] + sampler_or_chain.run_forward(
            0.0, start, n_samples - 1, rng))
    else:
        xs = np.asarray(sampler_or_chain(rng, n_samples))
    l0 = seq.log_p_vec(0.0, xs)
    if np.any(l0 == NEG_INF):
        raise DomainError("a draw has zero density under the base distribution")
    return summarize_logs(seq.log_p_vec(1.0, xs) - l0)


def run_bridge_pair(seq, bridge, n0, n1, rng):
    """Two-sample bridge estimate of r from exact endpoint draws.

    The ratio of two importance-sampling averages through the bridge
    density; consistent whenever the endpoint supports overlap.  The log SE
    combines the two sides' relative errors in quadrature.
    """
    if n0 < 2 or n1 < 2:
        raise ValueError("need at least two draws per side")
    x0 = np.asarray(seq.exact_sample(0.0, rng, size=n0))
    x1 = np.asarray(seq.exact_sample(1.0, rng, size=n1))
    w0 = log_bridge_vec(bridge, seq.log_p_vec(0.0, x0),
                        seq.log_p_vec(1.0, x0)) - seq.log_p_vec(0.0, x0)
    w1 = log_bridge_vec(bridge, seq.log_p_vec(0.0, x1),
                        seq.log_p_vec(1.0, x1)) - seq.log_p_vec(1.0, x1)
    log_den = log_mean(w1)
    if log_den == NEG_INF:
        raise DegenerateEstimateError("no overlap mass in the denominator sample")
    log_num = log_mean(w0)
    if log_num == NEG_INF:
        return EstimateSummary(r_hat=0.0, se_r=0.0, log_r_hat=NEG_INF,
                               se_log_r=NEG_INF, M=n0 + n1,
                               zero_count=n0)
    se_log = math.hypot(_relative_se(w0), _relative_se(w1))
    log_r_hat = float(log_num - log_den)
    r_hat = math.exp(log_r_hat)
    return EstimateSummary(r_hat=r_hat, se_r=se_log * r_hat,
                           log_r_hat=log_r_hat, se_log_r=se_log,
                           M=n0 + n1, zero_count=0)


def estimate_expectation(records, a):
    """Importance-weighted expectation of ``a`` under the eta=1 distribution.

    Uses forward linked runs that retained their final-stage states: each
    run contributes its estimate times the average of ``a`` over the final
    chain, normalized by the sum of estimates.  Consistent as the number of
    runs grows, without requiring kernel convergence.
    """
    logs = np.asarray([r.log_estimate for r in records], dtype=float)
    peak = logs.max()
    if peak == NEG_INF:
        raise DegenerateEstimateError("every run produced a zero estimate")
    num = 0.0
    den = 0.0
    for rec, log_w in zip(records, logs):
        if log_w == NEG_INF:
            continue
        if rec.final_stage_states is None:
            raise ValueError("records must retain final-stage states")
        w = math.exp(log_w - peak)
        values = np.asarray([a(x) for x in rec.final_stage_states], dtype=float)
        num += w * values.mean()
        den += w
    return num / den
