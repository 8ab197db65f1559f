"""Parametric families interpolating between two endpoint distributions.

Each family defines an unnormalized log density ``log_p(eta, x)`` for every
``eta`` in [0, 1], an exact sampler where one exists, and the true log ratio
of endpoint normalizing constants ``log(Z_1/Z_0)`` where it has a closed form.
Zero density is the ``NEG_INF`` sentinel from :mod:`zratio.logspace`.

Families are immutable after construction; all randomness enters through the
caller's ``numpy.random.Generator``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapabilityError, DomainError
from .logspace import NEG_INF

_DENSITY_CUTOFF = 45.0  # exp(-45) is below 1e-16 of a unit peak


def _check_eta(eta):
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")


def _remap_boundary(xs, boundary_value, interior_value):
    """Move draws landing exactly on an open-support boundary inside.

    A measure-zero remap: keeps samplers exact while guaranteeing that no
    draw ever has zero density.
    """
    xs[xs == boundary_value] = interior_value
    return xs


@dataclass(frozen=True)
class PowerView:
    """Power-form reading of a family: log p_eta(x) = log_base(x) - lam(eta) u(x).

    Used by thermodynamic integration.  ``domain`` gives the x-integration
    window per eta for continuous families; ``states`` lists the support for
    discrete ones.
    """

    u: object
    lam: object
    dlam: object
    log_base: object = None
    domain: object = None
    states: object = None


class DistributionSequence:
    """Base class; subclasses implement the family-specific pieces."""

    def log_p(self, eta, x):
        """Unnormalized log density at a single state (NEG_INF for zero)."""
        _check_eta(eta)
        return float(self.log_p_vec(eta, np.asarray([x], dtype=float))[0])

    def log_p_vec(self, eta, xs):
        raise NotImplementedError

    def log_p_at(self, eta):
        """Return a fast scalar ``x -> log_p(eta, x)`` closure.

        Used in Markov chain inner loops; subclasses override with
        specialized closures.
        """
        _check_eta(eta)
        return lambda x: self.log_p(eta, x)

    def exact_sample(self, eta, rng, size=None):
        """Draw exactly from the normalized density at ``eta``.

        Returns a scalar when ``size`` is None, else an array of draws.
        """
        raise CapabilityError(f"{type(self).__name__} has no exact sampler")

    def true_log_r(self):
        """log(Z_1/Z_0) in closed form (machine precision)."""
        raise CapabilityError(f"{type(self).__name__} has no closed-form ratio")

    def stage_log_r(self, eta_a, eta_b):
        """log(Z_{eta_b}/Z_{eta_a}) where known; used as optimal-bridge guesses."""
        raise CapabilityError(f"{type(self).__name__} has no per-stage ratio")

    def proposal_scale(self, eta):
        """Default random-walk Metropolis proposal scale at ``eta``."""
        return 1.0

    def power_view(self):
        raise CapabilityError(f"{type(self).__name__} has no power-form view")


class GeneralizedNormal(DistributionSequence):
    """log p_eta(x) = -|(x - eta*t)/s^eta|^q.

    As eta moves from 0 to 1 the center shifts by ``t`` and the width scales
    by ``s``; ``q`` sets the tail weight (q=2 is Gaussian, large q approaches
    a uniform over an interval).  Z_eta is proportional to s^eta, so
    r = Z_1/Z_0 = s regardless of t and q.
    """

    def __init__(self, s, t, q):
        if s <= 0:
            raise ValueError("scale factor s must be positive")
        if q < 1:
            raise ValueError("tail power q must be >= 1")
        self.s = float(s)
        self.t = float(t)
        self.q = float(q)

    def __repr__(self):
        return f"GeneralizedNormal(s={self.s}, t={self.t}, q={self.q})"

    def log_p_vec(self, eta, xs):
        _check_eta(eta)
        xs = np.asarray(xs, dtype=float)
        return -np.abs((xs - eta * self.t) / self.s**eta) ** self.q

    def log_p_at(self, eta):
        _check_eta(eta)
        center = eta * self.t
        inv_scale = self.s**-eta
        q = self.q
        if q == 2.0:
            def logp(x):
                u = (x - center) * inv_scale
                return -u * u
        else:
            def logp(x):
                return -abs((x - center) * inv_scale) ** q
        return logp

    def exact_sample(self, eta, rng, size=None):
        # Gamma-power transform: |Y|^q ~ Gamma(1/q, 1) gives density
        # proportional to exp(-|y|^q); then scale and shift.  Exact, with a
        # fixed two-draw stream cost per batch (no rejection loop).
        _check_eta(eta)
        n = 1 if size is None else int(size)
        g = rng.standard_gamma(1.0 / self.q, n)
        signs = rng.integers(0, 2, n) * 2 - 1
        xs = signs * g ** (1.0 / self.q) * self.s**eta + eta * self.t
        return float(xs[0]) if size is None else xs

    def true_log_r(self):
        return math.log(self.s)

    def stage_log_r(self, eta_a, eta_b):
        return (eta_b - eta_a) * math.log(self.s)

    def proposal_scale(self, eta):
        return self.s**eta

    def power_view(self):
        if self.t != 0.0:
            raise CapabilityError("power-form view requires t = 0")
        s, q = self.s, self.q

        def lam(eta):
            return s ** (-eta * q)

        def dlam(eta):
            return -q * math.log(s) * s ** (-eta * q)

        def domain(eta):
            half = (_DENSITY_CUTOFF / lam(eta)) ** (1.0 / q)
            return (-half, half)

        return PowerView(u=lambda x: np.abs(x) ** q, lam=lam, dlam=dlam,
                         domain=domain)


class NestedUniform(DistributionSequence):
    """Uniform with density 1 on the shrinking support (-s^eta, s^eta).

    Z_eta = 2 s^eta, so r = s.  The supports are nested as eta grows.
    """

    def __init__(self, s):
        if not 0.0 < s < 1.0:
            raise ValueError("shrink factor s must lie in (0, 1)")
        self.s = float(s)

    def __repr__(self):
        return f"NestedUniform(s={self.s})"

    def half_width(self, eta):
        return self.s**eta

    def log_p_vec(self, eta, xs):
        _check_eta(eta)
        xs = np.asarray(xs, dtype=float)
        w = self.half_width(eta)
        return np.where(np.abs(xs) < w, 0.0, NEG_INF)

    def log_p_at(self, eta):
        _check_eta(eta)
        w = self.half_width(eta)

        def logp(x):
            return 0.0 if -w < x < w else NEG_INF

        return logp

    def exact_sample(self, eta, rng, size=None):
        _check_eta(eta)
        n = 1 if size is None else int(size)
        w = self.half_width(eta)
        xs = rng.uniform(-w, w, n)
        xs = _remap_boundary(xs, -w, 0.0)
        return float(xs[0]) if size is None else xs

    def true_log_r(self):
        return math.log(self.s)

    def stage_log_r(self, eta_a, eta_b):
        return (eta_b - eta_a) * math.log(self.s)

    def proposal_scale(self, eta):
        return self.s**eta


class ShiftedUniform(DistributionSequence):
    """Uniform with density 1 on the translating support (eta*t - 1, eta*t + 1).

    Z_eta = 2 for every eta, so r = 1.
    """

    def __init__(self, t):
        if t < 0:
            raise ValueError("total shift t must be >= 0")
        self.t = float(t)

    def __repr__(self):
        return f"ShiftedUniform(t={self.t})"

    def log_p_vec(self, eta, xs):
        _check_eta(eta)
        xs = np.asarray(xs, dtype=float)
        return np.where(np.abs(xs - eta * self.t) < 1.0, 0.0, NEG_INF)

    def log_p_at(self, eta):
        _check_eta(eta)
        c = eta * self.t

        def logp(x):
            return 0.0 if c - 1.0 < x < c + 1.0 else NEG_INF

        return logp

    def exact_sample(self, eta, rng, size=None):
        _check_eta(eta)
        n = 1 if size is None else int(size)
        c = eta * self.t
        xs = rng.uniform(c - 1.0, c + 1.0, n)
        xs = _remap_boundary(xs, c - 1.0, c)
        return float(xs[0]) if size is None else xs

    def true_log_r(self):
        return 0.0

    def stage_log_r(self, eta_a, eta_b):
        return 0.0


class PowerForm(DistributionSequence):
    """log p_eta(x) = log_base(x) - eta * u(x) for caller-supplied handles.

    ``log_base`` and ``u`` must accept numpy arrays.  An exact sampler and a
    known log ratio are optional; operations needing an absent one raise
    ``CapabilityError``.  ``domain`` bounds the x-integration window used by
    thermodynamic integration, either a pair or a callable of eta.
    """

    def __init__(self, log_base, u, domain=None, sampler=None, log_r=None):
        self._log_base = log_base
        self._u = u
        self._domain = domain
        self._sampler = sampler
        self._log_r = log_r

    def log_p_vec(self, eta, xs):
        _check_eta(eta)
        xs = np.asarray(xs, dtype=float)
        return np.asarray(self._log_base(xs), dtype=float) - eta * np.asarray(
            self._u(xs), dtype=float)

    def exact_sample(self, eta, rng, size=None):
        _check_eta(eta)
        if self._sampler is None:
            raise CapabilityError("PowerForm constructed without a sampler")
        return self._sampler(eta, rng, size)

    def true_log_r(self):
        if self._log_r is None:
            raise CapabilityError("PowerForm constructed without a known ratio")
        return self._log_r

    def power_view(self):
        if self._domain is None:
            raise CapabilityError("PowerForm needs a domain for integration")
        domain = self._domain if callable(self._domain) else (lambda eta: self._domain)
        return PowerView(u=self._u, lam=lambda eta: eta, dlam=lambda eta: 1.0,
                         log_base=self._log_base, domain=domain)


class Canonical(DistributionSequence):
    """Inverse-temperature path between exp(-beta_0 U(x, lam_0)) and
    exp(-beta_1 U(x, lam_1)), interpolating both parameters linearly in eta."""

    def __init__(self, energy, beta0, beta1, lam0=0.0, lam1=1.0,
                 domain=None, sampler=None, log_r=None):
        self._energy = energy
        self.beta0 = float(beta0)
        self.beta1 = float(beta1)
        self.lam0 = lam0
        self.lam1 = lam1
        self._domain = domain
        self._sampler = sampler
        self._log_r = log_r

    def _beta(self, eta):
        return (1.0 - eta) * self.beta0 + eta * self.beta1

    def _lam(self, eta):
        return (1.0 - eta) * self.lam0 + eta * self.lam1

    def log_p_vec(self, eta, xs):
        _check_eta(eta)
        xs = np.asarray(xs, dtype=float)
        return -self._beta(eta) * np.asarray(self._energy(xs, self._lam(eta)),
                                             dtype=float)

    def exact_sample(self, eta, rng, size=None):
        _check_eta(eta)
        if self._sampler is None:
            raise CapabilityError("Canonical constructed without a sampler")
        return self._sampler(eta, rng, size)

    def true_log_r(self):
        if self._log_r is None:
            raise CapabilityError("Canonical constructed without a known ratio")
        return self._log_r

    def power_view(self):
        if self.lam0 != self.lam1:
            raise CapabilityError("power-form view requires a fixed lam")
        if self._domain is None:
            raise CapabilityError("Canonical needs a domain for integration")
        domain = self._domain if callable(self._domain) else (lambda eta: self._domain)
        lam = self.lam0
        return PowerView(u=lambda x: self._energy(x, lam),
                         lam=self._beta,
                         dlam=lambda eta: self.beta1 - self.beta0,
                         domain=domain)


class DiscreteTable(DistributionSequence):
    """Two nonnegative weight vectors over {0, ..., S-1}, interpolated
    geometrically: p_eta(i) = p0(i)^(1-eta) * p1(i)^eta.

    States where either endpoint weight is zero get weight zero for
    eta in (0, 1), which keeps the support monotone along the path.  The
    true ratio comes from direct summation.  This is the family used by the
    exact enumeration oracles; ``exact_weights`` exposes the stage tables as
    rationals so enumeration can run in exact arithmetic.
    """

    def __init__(self, p0, p1):
        p0 = list(p0)
        p1 = list(p1)
        if len(p0) != len(p1) or not p0:
            raise ValueError("weight vectors must be nonempty and equal length")
        if any(w < 0 for w in p0) or any(w < 0 for w in p1):
            raise ValueError("weights must be nonnegative")
        if sum(p0) == 0 or sum(p1) == 0:
            raise ValueError("each endpoint needs positive total weight")
        self.p0_raw = tuple(p0)
        self.p1_raw = tuple(p1)
        self.n_states = len(p0)
        self._logw_cache = {}

    def __repr__(self):
        return f"DiscreteTable(p0={self.p0_raw}, p1={self.p1_raw})"

    def log_weights(self, eta):
        """Log weight table at ``eta`` (cached)."""
        _check_eta(eta)
        got = self._logw_cache.get(eta)
        if got is not None:
            return got
        with np.errstate(divide="ignore"):
            l0 = np.log(np.asarray(self.p0_raw, dtype=float))
            l1 = np.log(np.asarray(self.p1_raw, dtype=float))
        if eta == 0.0:
            lw = l0
        elif eta == 1.0:
            lw = l1
        else:
            lw = (1.0 - eta) * l0 + eta * l1
            lw[np.isnan(lw)] = NEG_INF  # 0 * inf from a zero endpoint weight
        self._logw_cache[eta] = lw
        return lw

    def weights(self, eta):
        return np.exp(self.log_weights(eta))

    def probs(self, eta):
        w = self.weights(eta)
        return w / w.sum()

    def exact_weights(self, eta):
        """Stage weights as exact ``Fraction`` values.

        Endpoint tables convert the raw inputs directly; interior tables
        convert the float table entrywise (each float is itself an exact
        binary rational), which is all the enumeration identity needs.
        """
        if eta == 0.0:
            return [Fraction(w) for w in self.p0_raw]
        if eta == 1.0:
            return [Fraction(w) for w in self.p1_raw]
        return [Fraction(w) for w in self.weights(eta)]

    def log_p_vec(self, eta, xs):
        lw = self.log_weights(eta)
        idx = np.asarray(xs)
        return lw[idx.astype(int)]

    def log_p(self, eta, x):
        return float(self.log_weights(eta)[int(x)])

    def log_p_at(self, eta):
        lw = self.log_weights(eta)

        def logp(x):
            return lw[int(x)]

        return logp

    def exact_sample(self, eta, rng, size=None):
        probs = self.probs(eta)
        n = 1 if size is None else int(size)
        xs = rng.choice(self.n_states, size=n, p=probs)
        return int(xs[0]) if size is None else xs

    def true_log_r(self):
        return math.log(math.fsum(self.p1_raw)) - math.log(math.fsum(self.p0_raw))

    def stage_log_r(self, eta_a, eta_b):
        wa = self.weights(eta_a)
        wb = self.weights(eta_b)
        return math.log(wb.sum()) - math.log(wa.sum())

    def power_view(self):
        if any(w <= 0 for w in self.p0_raw) or any(w <= 0 for w in self.p1_raw):
            raise CapabilityError("power-form view needs strictly positive tables")
        l0 = np.log(np.asarray(self.p0_raw, dtype=float))
        l1 = np.log(np.asarray(self.p1_raw, dtype=float))
        return PowerView(u=lambda i: (l0 - l1)[np.asarray(i, dtype=int)],
                         lam=lambda eta: eta, dlam=lambda eta: 1.0,
                         log_base=lambda i: l0[np.asarray(i, dtype=int)],
                         states=np.arange(self.n_states))


def uniform_grid_pair(a0, b0, a1, b1, cells=1200, lo=None, hi=None):
    """Discretize a pair of interval uniforms onto a shared grid.

    Returns a ``DiscreteTable`` whose endpoint distributions are uniform over
    the cells covered by (a0, b0) and (a1, b1).  Handy for interval pairs,
    like I(0,3) versus I(2,4), that none of the continuous families cover.
    """
    lo = min(a0, a1) if lo is None else lo
    hi = max(b0, b1) if hi is None else hi
    edges = np.linspace(lo, hi, cells + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    p0 = ((mids > a0) & (mids < b0)).astype(int)
    p1 = ((mids > a1) & (mids < b1)).astype(int)
    return DiscreteTable(p0.tolist(), p1.tolist())
