"""Mutually reversible Markov transition pairs.

A kernel pair bundles forward and reverse transitions (T, T-underbar) that
satisfy pi(x) T(x, x') = pi(x') Tbar(x', x) for the target density at each
eta, so both directions leave the target invariant.  Reversible kernels
(Metropolis, independence sampling) are their own reverse; an ordered sweep
reverses by applying its components in the opposite order.

Chain fills go through ``run_forward``/``run_reverse``, which batch the
random draws for speed; ``step_forward`` is the single-transition case.
"""

from bisect import bisect_right
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .logspace import NEG_INF


class KernelPair:
    """Base class.  ``cost_per_step`` counts elementary updates per transition."""

    cost_per_step = 1

    def run_forward(self, eta, x, count, rng):
        """Chain of ``count`` forward transitions from ``x`` (list of states)."""
        raise NotImplementedError

    def run_reverse(self, eta, x, count, rng):
        raise NotImplementedError

    def step_forward(self, eta, x, rng):
        return self.run_forward(eta, x, 1, rng)[0]

    def step_reverse(self, eta, x, rng):
        return self.run_reverse(eta, x, 1, rng)[0]

    def swapped(self):
        """The pair with forward and reverse roles exchanged."""
        return _Swapped(self)


class _Swapped(KernelPair):
    def __init__(self, base):
        self.base = base
        self.cost_per_step = base.cost_per_step
        self.target = base.target

    def run_forward(self, eta, x, count, rng):
        return self.base.run_reverse(eta, x, count, rng)

    def run_reverse(self, eta, x, count, rng):
        return self.base.run_forward(eta, x, count, rng)

    def swapped(self):
        return self.base


class RandomWalkMetropolis(KernelPair):
    """Gaussian random-walk Metropolis targeting ``target`` at each eta.

    The proposal standard deviation comes from ``scale_rule(eta)``; by default
    the target family's own rule (s^eta for the scaling families).  Metropolis
    updates satisfy detailed balance, so the reverse transition is the same
    function.
    """

    def __init__(self, target, scale_rule=None):
        self.target = target
        self.scale_rule = scale_rule if scale_rule is not None else target.proposal_scale

    def run_forward(self, eta, x, count, rng):
        logp = self.target.log_p_at(eta)
        cur_lp = logp(x)
        if cur_lp == NEG_INF:
            raise DomainError("Metropolis started from a zero-density state")
        scale = self.scale_rule(eta)
        steps = rng.standard_normal(count) * scale
        log_us = np.log(rng.random(count))
        out = []
        cur = x
        for i in range(count):
            prop = cur + steps[i]
            lp = logp(prop)
            if log_us[i] < lp - cur_lp:
                cur = prop
                cur_lp = lp
            out.append(cur)
        return out

    run_reverse = run_forward

    def swapped(self):
        return self


class Independence(KernelPair):
    """Transitions that ignore the current state and draw exactly from the
    target.  pi(x) T(x, x') = pi(x) pi(x') is symmetric, so the kernel is its
    own reverse."""

    def __init__(self, target):
        self.target = target

    def run_forward(self, eta, x, count, rng):
        draws = self.target.exact_sample(eta, rng, size=count)
        return list(draws)

    run_reverse = run_forward

    def swapped(self):
        return self


class OrderedSweep(KernelPair):
    """Component kernels applied in a fixed order; the reverse applies the
    components' reverses in the opposite order."""

    def __init__(self, components):
        if not components:
            raise ValueError("OrderedSweep needs at least one component")
        self.components = tuple(components)
        self.cost_per_step = sum(c.cost_per_step for c in components)
        self.target = self.components[0].target

    def run_forward(self, eta, x, count, rng):
        out = []
        for _ in range(count):
            for comp in self.components:
                x = comp.step_forward(eta, x, rng)
            out.append(x)
        return out

    def run_reverse(self, eta, x, count, rng):
        out = []
        for _ in range(count):
            for comp in reversed(self.components):
                x = comp.step_reverse(eta, x, rng)
            out.append(x)
        return out

    def swapped(self):
        return OrderedSweep([c.swapped() for c in reversed(self.components)])


class DiscreteMatrix(KernelPair):
    """Explicit row-stochastic transition matrix per eta over a finite space.

    The forward matrix must leave the target invariant (checked on first use
    at each eta); the reverse matrix is constructed from the mutual
    reversibility identity Tbar(x', x) = pi(x) T(x, x') / pi(x').  Rows for
    zero-probability states are unreachable and set to identity.

    ``exact_builder`` optionally supplies the same matrix as exact rationals,
    which lets the enumeration oracles run in exact arithmetic.
    """

    def __init__(self, target, matrix_builder, exact_builder=None):
        self.target = target
        self.matrix_builder = matrix_builder
        self.exact_builder = exact_builder
        self._cache = {}

    def _entries(self, eta):
        got = self._cache.get(eta)
        if got is not None:
            return got
        fwd = np.asarray(self.matrix_builder(eta), dtype=float)
        probs = self.target.probs(eta)
        n = fwd.shape[0]
        if fwd.shape != (n, n) or n != probs.size:
            raise ValueError("matrix shape does not match the state space")
        alive = probs > 0
        if not np.allclose(fwd[alive].sum(axis=1), 1.0, atol=1e-10):
            raise ValueError("forward matrix rows must sum to 1")
        if not np.allclose(probs @ fwd, probs, atol=1e-10):
            raise ValueError("forward matrix must leave the target invariant")
        rev = np.eye(n)
        rev[alive] = (probs[:, None] * fwd).T[alive] / probs[alive][:, None]
        # plain lists: bisect on them beats array searchsorted for scalar steps
        fcum = [row.tolist() for row in np.cumsum(fwd, axis=1)]
        rcum = [row.tolist() for row in np.cumsum(rev, axis=1)]
        entry = (fwd, rev, fcum, rcum, probs)
        self._cache[eta] = entry
        return entry

    def matrix(self, eta):
        return self._entries(eta)[0]

    def reverse_matrix(self, eta):
        return self._entries(eta)[1]

    def exact_matrix(self, eta):
        """Forward matrix as ``Fraction`` entries (exact if a builder was given)."""
        if self.exact_builder is not None:
            return self.exact_builder(eta)
        return [[Fraction(v) for v in row] for row in self.matrix(eta)]

    def _run(self, eta, x, count, rng, cum_index):
        entry = self._entries(eta)
        if entry[4][int(x)] == 0:
            raise DomainError("chain started from a zero-probability state")
        cum = entry[cum_index]
        top = len(cum) - 1
        us = rng.random(count)
        out = []
        cur = int(x)
        for u in us:
            cur = min(bisect_right(cum[cur], u), top)
            out.append(cur)
        return out

    def run_forward(self, eta, x, count, rng):
        return self._run(eta, x, count, rng, 2)

    def run_reverse(self, eta, x, count, rng):
        return self._run(eta, x, count, rng, 3)


def neighbor_proposal(n_states):
    """Propose a move of +/-1 with probability 1/2 each; off-lattice mass
    stays put.  Off-diagonal entries are symmetric."""
    prop = np.zeros((n_states, n_states))
    for i in range(n_states):
        for j in (i - 1, i + 1):
            if 0 <= j < n_states:
                prop[i, j] = 0.5
            else:
                prop[i, i] += 0.5
    return prop


def uniform_proposal(n_states):
    return np.full((n_states, n_states), 1.0 / n_states)


def metropolis_matrix(weights, proposal):
    """Metropolis-Hastings transition matrix for target ``weights`` under a
    row-stochastic ``proposal`` matrix."""
    w = np.asarray(weights, dtype=float)
    q = np.asarray(proposal, dtype=float)
    n = w.size
    t = np.zeros((n, n))
    for a in range(n):
        if w[a] == 0:
            t[a, a] = 1.0
            continue
        for b in range(n):
            if b == a or q[a, b] == 0:
                continue
            ratio = (w[b] * q[b, a]) / (w[a] * q[a, b])
            t[a, b] = q[a, b] * min(1.0, ratio)
        t[a, a] = 1.0 - t[a].sum()
    return t


def _metropolis_matrix_exact(weights, proposal):
    """Fraction-arithmetic twin of ``metropolis_matrix``; exactly reversible
    and exactly invariant for the given rational weights."""
    n = len(weights)
    t = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        if weights[a] == 0:
            t[a][a] = Fraction(1)
            continue
        for b in range(n):
            if b == a or proposal[a][b] == 0:
                continue
            ratio = (weights[b] * proposal[b][a]) / (weights[a] * proposal[a][b])
            t[a][b] = proposal[a][b] * min(Fraction(1), ratio)
        t[a][a] = Fraction(1) - sum(t[a])
    return t


def metropolis_kernel(seq, proposal=None, lazy=0.0):
    """Discrete Metropolis kernel pair targeting ``seq`` at each eta.

    ``lazy`` mixes in that much probability of holding still, which slows
    mixing without touching invariance (useful for deliberately
    non-converged kernels).
    """
    n = seq.n_states
    prop = neighbor_proposal(n) if proposal is None else np.asarray(proposal, float)
    prop_exact = [[Fraction(v) for v in row] for row in prop]
    lazy_f = Fraction(lazy)

    def build(eta):
        t = metropolis_matrix(seq.weights(eta), prop)
        if lazy:
            t = lazy * np.eye(n) + (1.0 - lazy) * t
        return t

    def build_exact(eta):
        t = _metropolis_matrix_exact(seq.exact_weights(eta), prop_exact)
        if lazy:
            eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
            t = [[lazy_f * eye[i][j] + (1 - lazy_f) * t[i][j] for j in range(n)]
                 for i in range(n)]
        return t

    return DiscreteMatrix(seq, build, build_exact)


def identity_kernel(seq):
    """The do-nothing kernel: trivially invariant and maximally non-converged."""
    n = seq.n_states

    def build(eta):
        return np.eye(n)

    def build_exact(eta):
        return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    return DiscreteMatrix(seq, build, build_exact)
