"""Linked dragging of fast variables through an energy interpolation.

A state splits into fast variables x and slow variables y, with joint density
proportional to exp(-U(x, y)) where re-evaluating U after a change to x alone
is cheap once a slow preparation for y exists.  A dragging update proposes a
slow move y0 -> y1 and walks the fast variables through the ladder of
interpolated densities

    p_eta(x) = exp(-((1 - eta) U(x, y0) + eta U(x, y1)))

using the chain-and-link construction; the cumulative stage weight-ratio
product becomes a Metropolis acceptance probability for the joint proposal.
The composed update leaves the joint density invariant.
"""

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .bridges import GeometricBridge, OptimalBridge, log_bridge_vec
from .distributions import DistributionSequence, _check_eta
from .errors import CapacityError
from .estimators import _categorical, _fill_stage, Cost
from .kernels import metropolis_kernel
from .logspace import NEG_INF, log_mean, log_sum


class CachedEnergy:
    """Energy split into a slow per-y preparation and a fast per-x evaluation.

    ``prepare(y)`` does the expensive work once per slow value (cached);
    ``evaluate(x, ctx)`` is the cheap part.  ``slow_count`` instruments the
    fast/slow cost asymmetry.
    """

    def __init__(self, prepare, evaluate, cache_size=8):
        self._prepare = prepare
        self._evaluate = evaluate
        self._cache = OrderedDict()
        self._cache_size = cache_size
        self.slow_count = 0
        self.fast_count = 0

    def context(self, y):
        ctx = self._cache.get(y)
        if ctx is None:
            ctx = self._prepare(y)
            self.slow_count += 1
            self._cache[y] = ctx
            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(y)
        return ctx

    def u(self, x, y):
        ctx = self.context(y)
        self.fast_count += 1
        return self._evaluate(x, ctx)


class DragTable(DistributionSequence):
    """Interpolated fast-variable distribution for one (y0, y1) pair over a
    finite fast lattice.  The two energy columns are fetched once at
    construction; every stage evaluation reuses them."""

    def __init__(self, energy, y0, y1, n_fast):
        ctx0 = energy.context(y0)
        ctx1 = energy.context(y1)
        self.u0 = np.asarray([energy._evaluate(x, ctx0) for x in range(n_fast)],
                             dtype=float)
        self.u1 = np.asarray([energy._evaluate(x, ctx1) for x in range(n_fast)],
                             dtype=float)
        self.n_states = n_fast
        self._cache = {}
        self._list_cache = {}

    def log_weights(self, eta):
        _check_eta(eta)
        got = self._cache.get(eta)
        if got is None:
            got = -((1.0 - eta) * self.u0 + eta * self.u1)
            self._cache[eta] = got
        return got

    def log_weights_list(self, eta):
        got = self._list_cache.get(eta)
        if got is None:
            got = self.log_weights(eta).tolist()
            self._list_cache[eta] = got
        return got

    def weights(self, eta):
        return np.exp(self.log_weights(eta))

    def probs(self, eta):
        w = self.weights(eta)
        return w / w.sum()

    def exact_weights(self, eta):
        from fractions import Fraction
        return [Fraction(w) for w in self.weights(eta)]

    def log_p_vec(self, eta, xs):
        return self.log_weights(eta)[np.asarray(xs, dtype=int)]

    def log_p(self, eta, x):
        return float(self.log_weights(eta)[int(x)])

    def log_p_at(self, eta):
        lw = self.log_weights(eta)
        return lambda x: lw[int(x)]


@dataclass
class DragModel:
    """Everything a linked dragging update needs.

    ``energy`` is a ``CachedEnergy``; ``slow_proposal(y, rng)`` draws a
    symmetric proposal (``slow_proposal_probs(y)`` gives its distribution for
    enumeration); ``fast_kernel_builder(seq)`` turns an interpolated density
    into a kernel pair; ``etas``/``chain_lengths`` define the ladder; the
    stage bridge is geometric by default, with optimal-at-r-one behind the
    ``bridge`` flag since good ratio guesses are rarely available here.
    """

    energy: object
    slow_proposal: object
    slow_proposal_probs: object
    fast_kernel_builder: object
    n_fast: int
    etas: tuple = (0.0, 1.0)
    chain_lengths: tuple = (1, 1)
    bridge: str = "geometric"
    _pair_cache: dict = field(default_factory=dict, repr=False)

    def stage_bridge_specs(self):
        n = len(self.etas) - 1
        if self.bridge == "geometric":
            return (GeometricBridge(),) * n
        if self.bridge == "optimal_ones":
            return tuple(
                OptimalBridge(r=1.0, size_ratio=(self.chain_lengths[j] + 1)
                              / (self.chain_lengths[j + 1] + 1))
                for j in range(n))
        raise ValueError(f"unknown bridge flag: {self.bridge!r}")

    def ladder_pieces(self, y0, y1):
        """Interpolated density, kernel, and bridges for one slow pair.

        Table models cache per pair (the tables depend only on the pair);
        continuous slow spaces never repeat a pair, so nothing is kept.
        """
        if self.n_fast <= 0:
            seq = DragDensity(self.energy, y0, y1)
            return seq, self.fast_kernel_builder(seq), self.stage_bridge_specs()
        got = self._pair_cache.get((y0, y1))
        if got is None:
            seq = DragTable(self.energy, y0, y1, self.n_fast)
            got = (seq, self.fast_kernel_builder(seq), self.stage_bridge_specs())
            self._pair_cache[(y0, y1)] = got
        return got


def interp_log_p(model, y0, y1, eta, x):
    """Log of the interpolated density: -((1-eta) U(x,y0) + eta U(x,y1))."""
    _check_eta(eta)
    return -((1.0 - eta) * model.energy.u(x, y0) + eta * model.energy.u(x, y1))


def _ratio_over_first(bridge):
    """Scalar log(bridge(p_a, p_b) / p_a): the numerator and link weight."""
    if isinstance(bridge, GeometricBridge):
        def ratio(a, b):
            return 0.5 * (b - a) if b > NEG_INF else NEG_INF
    else:
        rho = math.log(bridge.r) + math.log(bridge.size_ratio)

        def ratio(a, b):
            if a == NEG_INF or b == NEG_INF:
                return NEG_INF
            hi = max(rho + a, b)
            return b - hi - math.log(math.exp(rho + a - hi) + math.exp(b - hi))
    return ratio


def _ratio_over_second(bridge):
    """Scalar log(bridge(p_a, p_b) / p_b): the denominator weight."""
    if isinstance(bridge, GeometricBridge):
        def ratio(a, b):
            return 0.5 * (a - b) if a > NEG_INF else NEG_INF
    else:
        rho = math.log(bridge.r) + math.log(bridge.size_ratio)

        def ratio(a, b):
            if a == NEG_INF or b == NEG_INF:
                return NEG_INF
            hi = max(rho + a, b)
            return a - hi - math.log(math.exp(rho + a - hi) + math.exp(b - hi))
    return ratio


def _logsum_list(values):
    hi = max(values)
    if hi == NEG_INF:
        return NEG_INF
    return hi + math.log(sum(math.exp(v - hi) for v in values))


def _pick(weights, total, rng):
    u = rng.random()
    acc = 0.0
    for i, w in enumerate(weights):
        acc += math.exp(w - total)
        if u < acc:
            return i
    return len(weights) - 1


def _drag_ladder_pass(seq, kernel, etas, lengths, bridges, x0, rng, cost):
    """The chain-and-link sweep with the current fast state pinned into the
    first stage.  Returns (log weight-ratio product, final-stage states).

    Dispatches to a scalar fast path for table-backed interpolations (the
    update is the inner loop of long joint chains) and a vectorized generic
    path otherwise.
    """
    if hasattr(seq, "log_weights_list"):
        return _pass_table(seq, kernel, etas, lengths, bridges, x0, rng, cost)
    return _pass_generic(seq, kernel, etas, lengths, bridges, x0, rng, cost)


def _pass_table(seq, kernel, etas, lengths, bridges, x0, rng, cost):
    n = len(etas) - 1
    tables = [seq.log_weights_list(eta) for eta in etas]
    num_ratio = [_ratio_over_first(b) for b in bridges]
    den_ratio = [_ratio_over_second(b) for b in bridges]
    link = x0
    log_prod = 0.0
    states = None
    for j in range(n + 1):
        nu = int(rng.integers(0, lengths[j] + 1))
        states = _fill_stage(kernel, etas[j], lengths[j], nu, link, rng, cost)
        here = tables[j]
        if j > 0:
            prev = tables[j - 1]
            ratio = den_ratio[j - 1]
            den = _logsum_list([ratio(prev[x], here[x]) for x in states])
            log_prod += math.log(lengths[j] + 1) - den
        if j < n:
            nxt = tables[j + 1]
            ratio = num_ratio[j]
            weights = [ratio(here[x], nxt[x]) for x in states]
            total = _logsum_list(weights)
            if total == NEG_INF:
                return NEG_INF, states
            log_prod += total - math.log(lengths[j] + 1)
            link = states[_pick(weights, total, rng)]
    return log_prod, states


def _pass_generic(seq, kernel, etas, lengths, bridges, x0, rng, cost):
    n = len(etas) - 1
    link = x0
    log_prod = 0.0
    states = None
    for j in range(n + 1):
        nu = int(rng.integers(0, lengths[j] + 1))
        states = _fill_stage(kernel, etas[j], lengths[j], nu, link, rng, cost)
        xs = np.asarray(states)
        log_here = seq.log_p_vec(etas[j], xs)
        if j > 0:
            log_prev = seq.log_p_vec(etas[j - 1], xs)
            den = log_sum(log_bridge_vec(bridges[j - 1], log_prev, log_here)
                          - log_here)
            log_prod += math.log(lengths[j] + 1) - den
        if j < n:
            log_next = seq.log_p_vec(etas[j + 1], xs)
            weights = log_bridge_vec(bridges[j], log_here, log_next) - log_here
            num = log_sum(weights)
            if num == NEG_INF:
                return NEG_INF, states
            log_prod += num - math.log(lengths[j] + 1)
            link = states[_categorical(weights, num, rng)]
    return log_prod, states


def linked_drag_update(model, state, rng):
    """One linked dragging update of the joint state (fast, slow).

    Proposes a slow value, drags the fast variables through the
    interpolation ladder, selects the candidate fast value uniformly from
    the last stage, and accepts the joint proposal with probability
    min(1, weight-ratio product).  Returns (new_state, accepted,
    log_acceptance).
    """
    x0, y0 = state
    y1 = model.slow_proposal(y0, rng)
    seq, kernel, bridges = model.ladder_pieces(y0, y1)
    cost = Cost()
    log_prod, final_states = _drag_ladder_pass(
        seq, kernel, model.etas, model.chain_lengths, bridges, x0, rng, cost)
    candidate = final_states[int(rng.integers(0, model.chain_lengths[-1] + 1))]
    log_acc = min(0.0, log_prod)
    if log_acc == NEG_INF:
        return (x0, y0), False, log_acc
    accepted = log_acc == 0.0 or math.log(rng.random()) < log_acc
    if accepted:
        return (candidate, y1), True, log_acc
    return (x0, y0), False, log_acc


def acceptance_n1_geometric(model, chain0, chain1, y0, y1):
    """The simplified no-intermediate acceptance probability with a
    geometric bridge: ratio of the two mean half-energy-gap exponentials,
    capped at one.  Computed in the log domain."""
    u = model.energy.u
    terms0 = np.asarray([-(u(x, y1) - u(x, y0)) / 2.0 for x in chain0])
    terms1 = np.asarray([-(u(x, y0) - u(x, y1)) / 2.0 for x in chain1])
    log_ratio = log_mean(terms0) - log_mean(terms1)
    return min(1.0, math.exp(log_ratio))


# ---------------------------------------------------------------------------
# demo models

def toy_drag_model(n_fast=6, n_slow=4, chain_lengths=(1, 1), etas=(0.0, 1.0),
                   bridge="geometric"):
    """Discrete demo: fast 1-D lattice, small slow label set, quadratic-style
    energy table.  Small enough for exact enumeration of the composed
    update's transition kernel."""
    table = np.empty((n_fast, n_slow))
    for y in range(n_slow):
        center = 1.0 + 0.9 * y
        table[:, y] = 0.55 * (np.arange(n_fast) - center) ** 2 + 0.3 * y

    energy = CachedEnergy(prepare=lambda y: table[:, y],
                          evaluate=lambda x, col: col[int(x)])

    def slow_proposal(y, rng):
        step = 1 if rng.random() < 0.5 else -1
        return (y + step) % n_slow

    def slow_proposal_probs(y):
        probs = {}
        for step in (-1, 1):
            y1 = (y + step) % n_slow
            probs[y1] = probs.get(y1, 0.0) + 0.5
        return probs

    return DragModel(energy=energy, slow_proposal=slow_proposal,
                     slow_proposal_probs=slow_proposal_probs,
                     fast_kernel_builder=metropolis_kernel,
                     n_fast=n_fast, etas=tuple(etas),
                     chain_lengths=tuple(chain_lengths), bridge=bridge)


def toy_joint_probs(model, n_slow):
    """Exact stationary distribution of a table-energy toy, shape
    (n_fast, n_slow)."""
    u = np.empty((model.n_fast, n_slow))
    for y in range(n_slow):
        for x in range(model.n_fast):
            u[x, y] = model.energy.u(x, y)
    w = np.exp(-u)
    return w / w.sum()


class DragDensity(DistributionSequence):
    """Continuous interpolated fast-variable density for one (y0, y1) pair."""

    def __init__(self, energy, y0, y1, proposal_scale=1.0):
        self._ctx0 = energy.context(y0)
        self._ctx1 = energy.context(y1)
        self._evaluate = energy._evaluate
        self._scale = proposal_scale

    def log_p_vec(self, eta, xs):
        _check_eta(eta)
        xs = np.asarray(xs, dtype=float)
        u0 = np.asarray([self._evaluate(x, self._ctx0) for x in xs])
        u1 = np.asarray([self._evaluate(x, self._ctx1) for x in xs])
        return -((1.0 - eta) * u0 + eta * u1)

    def log_p_at(self, eta):
        _check_eta(eta)
        ev, c0, c1 = self._evaluate, self._ctx0, self._ctx1

        def logp(x):
            return -((1.0 - eta) * ev(x, c0) + eta * ev(x, c1))

        return logp

    def proposal_scale(self, eta):
        return self._scale


def gaussian_drag_model(slow_step=0.8, chain_lengths=(2, 2), etas=(0.0, 1.0)):
    """Continuous smoke-test model: Gaussian fast conditional centered at the
    slow value, quadratic slow marginal, random-walk Metropolis fast kernel."""
    energy = CachedEnergy(prepare=lambda y: y,
                          evaluate=lambda x, y: 0.5 * (x - y) ** 2 + 0.05 * y * y)

    def slow_proposal(y, rng):
        return y + slow_step * rng.standard_normal()

    from .kernels import RandomWalkMetropolis

    return DragModel(energy=energy, slow_proposal=slow_proposal,
                     slow_proposal_probs=None,
                     fast_kernel_builder=RandomWalkMetropolis,
                     n_fast=0, etas=tuple(etas),
                     chain_lengths=tuple(chain_lengths))


# ---------------------------------------------------------------------------
# exact enumeration of the composed update

def _enumerate_passes(seq, kernel, etas, lengths, bridges, x0):
    """Yield (probability, weight-ratio product, final-stage states) over
    every realization of the dragging ladder from ``x0``.  Float
    arithmetic: the acceptance cap is nonlinear, so paths cannot be merged
    and each is enumerated in full."""
    n = len(etas) - 1
    fwd = [np.asarray(kernel.matrix(eta)) for eta in etas]
    rev = [np.asarray(kernel.reverse_matrix(eta)) for eta in etas]
    tables = [seq.weights(eta) for eta in etas]
    bridge_tables = []
    for j in range(n):
        bt = np.zeros(seq.n_states)
        for x in range(seq.n_states):
            wa, wb = tables[j][x], tables[j + 1][x]
            if wa > 0 and wb > 0:
                if isinstance(bridges[j], GeometricBridge):
                    bt[x] = math.sqrt(wa * wb)
                else:
                    rho = bridges[j].r * bridges[j].size_ratio
                    bt[x] = wa * wb / (rho * wa + wb)
        bridge_tables.append(bt)

    def chains(matrix, start, steps):
        if steps == 0:
            yield (), 1.0
            return
        for nxt in range(seq.n_states):
            p = matrix[start, nxt]
            if p > 0:
                for rest, q in chains(matrix, nxt, steps - 1):
                    yield (nxt,) + rest, p * q

    def stage(j, pin):
        pin_prob = 1.0 / (lengths[j] + 1)
        for nu in range(lengths[j] + 1):
            for up, p_up in chains(fwd[j], pin, lengths[j] - nu):
                for down, p_down in chains(rev[j], pin, nu):
                    yield (tuple(reversed(down)) + (pin,) + up,
                           pin_prob * p_up * p_down)

    def sweep(j, pin, prob, product):
        for states, p_stage in stage(j, pin):
            p = prob * p_stage
            g = product
            if j > 0:
                den = sum(bridge_tables[j - 1][x] / tables[j][x]
                          for x in states)
                g = g * (lengths[j] + 1) / den
            if j < n:
                weights = [bridge_tables[j][x] / tables[j][x] for x in states]
                num = sum(weights)
                if num == 0:
                    yield p, 0.0, states
                    continue
                g = g * num / (lengths[j] + 1)
                for x, w in zip(states, weights):
                    if w > 0:
                        yield from sweep(j + 1, x, p * w / num, g)
            else:
                yield p, g, states

    yield from sweep(0, x0, 1.0, 1.0)


def drag_transition_matrix(model, n_slow, budget=2_000_000):
    """The composed dragging update's exact transition matrix over the joint
    (fast, slow) space, by enumerating slow proposals, every ladder
    realization, the uniform candidate choice, and the accept/reject split."""
    n_fast = model.n_fast
    paths = n_fast ** sum(model.chain_lengths)
    for k in model.chain_lengths:
        paths *= (k + 1) ** 2
    if paths * n_fast * n_slow * 2 > budget:
        raise CapacityError("dragging enumeration exceeds budget")

    size = n_fast * n_slow
    transition = np.zeros((size, size))

    def idx(x, y):
        return int(x) + n_fast * int(y)

    k_last = model.chain_lengths[-1]
    for y0 in range(n_slow):
        for y1, sp in model.slow_proposal_probs(y0).items():
            seq, kernel, bridges = model.ladder_pieces(y0, y1)
            for x0 in range(n_fast):
                here = idx(x0, y0)
                for p, product, finals in _enumerate_passes(
                        seq, kernel, model.etas, model.chain_lengths,
                        bridges, x0):
                    alpha = min(1.0, product)
                    base = sp * p / (k_last + 1)
                    for cand in finals:
                        transition[here, idx(cand, y1)] += base * alpha
                        transition[here, here] += base * (1.0 - alpha)
    return transition
