"""Ground-truth machinery: closed-form variance laws for the uniform
families, brute-force path enumeration of the run procedures on finite
instances, and a thermodynamic-integration cross-check.

The enumeration routines compute expectations of the run estimators exactly,
by summing over every combination of pin index, state draw, kernel
transition, and link choice, weighted by its probability.  All enumeration
arithmetic uses ``fractions.Fraction``: weight tables and transition
matrices are converted entrywise to exact rationals (floats convert
exactly), after which the unbiasedness identity holds to working precision
rather than drowning in roundoff.
"""

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import AccuracyError, CapabilityError, CapacityError, DomainError
from .estimators import _traversed
from .bridges import GeometricBridge
from .kernels import DiscreteMatrix, OrderedSweep, _Swapped


@dataclass(frozen=True)
class AnalyticPrediction:
    """A closed-form predicted quantity, with its validity conditions."""

    quantity: str  # LogVarLIS | ZeroProbAIS | MeanAIS | OptimalN
    value: float
    regime_note: str


# ---------------------------------------------------------------------------
# closed forms for the uniform families

def nested_lis_logvar(n, m, s):
    """Variance of the log linked estimate on the nested-uniform family:
    n (s^(-1/n) - 1) / (m + 1).

    Valid for large m with near-independent transitions; requires the
    probability that a whole stage misses the next support,
    (1 - s^(1/n))^(m+1), to be negligible (warned otherwise).
    """
    if not 0.0 < s < 1.0:
        raise DomainError("s must lie in (0, 1)")
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    miss = (1.0 - s ** (1.0 / n)) ** (m + 1)
    if miss > 1e-3:
        warnings.warn(
            f"all-miss probability {miss:.2g} is not negligible; "
            "the variance formula is unreliable here", stacklevel=2)
    return n * (s ** (-1.0 / n) - 1.0) / (m + 1)


def nested_budget_logvar(n, s, budget):
    """The nested-family log variance at fixed total budget, m = C/(n+1):
    n (n+1) (s^(-1/n) - 1) / C."""
    return n * (n + 1) * (s ** (-1.0 / n) - 1.0) / budget


def nested_optimal_n(s, n_max=1000):
    """The stage count minimizing the fixed-budget variance on the
    nested-uniform family; depends only on s."""
    if not 0.0 < s < 1.0:
        raise DomainError("s must lie in (0, 1)")
    values = [n * (n + 1) * (s ** (-1.0 / n) - 1.0) for n in range(1, n_max + 1)]
    return 1 + int(np.argmin(values))


def nonnested_lis_logvar(n, m, t):
    """Variance of the log linked estimate on the shifted-uniform family.

    Two branches joined continuously at n = t, reflecting how strongly
    consecutive stage terms correlate through the shared chain.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    if n <= t / 2.0:
        raise DomainError("need n > t/2 for the supports to overlap")
    ratio = 2.0 * n / t - 1.0
    if n <= t:
        inner = n + (n - 1.0) * ratio
    else:
        inner = n + (n - 1.0) / ratio
    return 2.0 * inner / (ratio * (m + 1))


def nonnested_budget_logvar(n, t, budget):
    """Shifted-uniform log variance at fixed budget, m = C/(n+1)."""
    if t <= 0:
        raise DomainError("t must be positive")
    if n <= t / 2.0:
        raise DomainError("need n > t/2 for the supports to overlap")
    ratio = 2.0 * n / t - 1.0
    if n <= t:
        inner = n + (n - 1.0) * ratio
    else:
        inner = n + (n - 1.0) / ratio
    return 2.0 * (n + 1) * inner / (budget * ratio)


def ais_nested_zero_prob(s):
    """P(annealed estimate = 0) on the nested-uniform family: 1 - s.

    Structurally independent of the stage count n."""
    if not 0.0 < s < 1.0:
        raise DomainError("s must lie in (0, 1)")
    return 1.0 - s


def ais_nonnested_mean(n, t):
    """Mean annealed estimate on the shifted-uniform family with independent
    stage sampling: (1 - t/2n)^n, approaching exp(-t/2).  The true ratio is
    1, so this quantifies the method's failure to converge here."""
    if t <= 0:
        raise DomainError("t must be positive")
    if n <= t / 2.0:
        raise DomainError("need n > t/2 for the supports to overlap")
    return (1.0 - t / (2.0 * n)) ** n


# ---------------------------------------------------------------------------
# exact enumeration of the run procedures on finite instances

def _frac_probs(table):
    total = sum(table)
    return [w / total for w in table]


def _frac_reverse(fwd, probs):
    """Reverse matrix from the mutual-reversibility identity, in exact
    arithmetic.  Rows of zero-probability states are unreachable."""
    n = len(fwd)
    out = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(n):
        if probs[i] == 0:
            continue
        out[i] = [probs[j] * fwd[j][i] / probs[i] for j in range(n)]
    return out


def _frac_matmul(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)]


def _exact_pair(kernel, eta, probs):
    """(forward, reverse) transition matrices as Fractions."""
    if isinstance(kernel, _Swapped):
        fwd, rev = _exact_pair(kernel.base, eta, probs)
        return rev, fwd
    if isinstance(kernel, OrderedSweep):
        fwd = None
        for comp in kernel.components:
            part = _exact_pair(comp, eta, probs)[0]
            fwd = part if fwd is None else _frac_matmul(fwd, part)
        return fwd, _frac_reverse(fwd, probs)
    if isinstance(kernel, DiscreteMatrix):
        fwd = [[Fraction(v) for v in row] for row in kernel.exact_matrix(eta)]
        return fwd, _frac_reverse(fwd, probs)
    raise CapabilityError("enumeration requires discrete matrix kernels")


def _frac_bridge_table(bridge, table_a, table_b):
    """Bridge weights per state as Fractions.

    The optimal bridge is rational in the tables; the geometric bridge's
    square root is irrational, so its float value converts exactly instead.
    Any consistent table keeps the enumeration identity exact.
    """
    out = []
    for wa, wb in zip(table_a, table_b):
        if wa == 0 or wb == 0:
            out.append(Fraction(0))
        elif isinstance(bridge, GeometricBridge):
            out.append(Fraction(math.sqrt(float(wa * wb))))
        else:
            rho = Fraction(bridge.r) * Fraction(bridge.size_ratio)
            out.append(wa * wb / (rho * wa + wb))
    return out


def _chain_outcomes(matrix, start, steps):
    """All (state-sequence, probability) outcomes of a fixed-length chain."""
    outcomes = [((), Fraction(1))]
    for _ in range(steps):
        grown = []
        for seq_states, prob in outcomes:
            cur = seq_states[-1] if seq_states else start
            row = matrix[cur]
            for nxt, p in enumerate(row):
                if p > 0:
                    grown.append((seq_states + (nxt,), prob * p))
        outcomes = grown
    return outcomes


def _stage_outcomes(fwd, rev, length, pin):
    """All ((states, prob)) stage fills around a pinned state: each pin
    index is uniform, up-fills use the forward matrix, down-fills the
    reverse."""
    pin_prob = Fraction(1, length + 1)
    for nu in range(length + 1):
        for up, p_up in _chain_outcomes(fwd, pin, length - nu):
            for down, p_down in _chain_outcomes(rev, pin, nu):
                states = tuple(reversed(down)) + (pin,) + up
                yield states, pin_prob * p_up * p_down


def _lis_path_count(n_states, config):
    lengths = config.chain_lengths
    count = n_states  # initial draw
    for j, k in enumerate(lengths):
        count *= (k + 1) * n_states**k  # pin index and fills
        if j < len(lengths) - 1:
            count *= k + 1  # link choice
    return count


def enumerate_lis_expectation(seq, config, budget=1_000_000):
    """Exact mean and variance of the linked-run estimate under the full
    construction, by dynamic programming over stages.

    The cross-stage dependence flows only through the link state, so the
    enumeration carries, per link state, the accumulated probability-weighted
    estimate (and its square) and sweeps the stages in order.  The mean
    equals Z_1/Z_0 for any chain lengths, stage bridges, and invariant
    kernels; that identity is what the acceptance gate checks.
    """
    cfg = _traversed(config)
    if _lis_path_count(seq.n_states, cfg) > budget:
        raise CapacityError(
            f"path count {_lis_path_count(seq.n_states, cfg)} exceeds "
            f"budget {budget}")
    etas, lengths, bridges = cfg.etas, cfg.chain_lengths, cfg.bridges
    n = cfg.n
    tables = [seq.exact_weights(eta) for eta in etas]
    probs = [_frac_probs(t) for t in tables]
    pairs = [_exact_pair(cfg.kernel, eta, probs[j]) for j, eta in enumerate(etas)]
    bridge_tables = [
        _frac_bridge_table(bridges[j], tables[j], tables[j + 1])
        for j in range(n)
    ]

    # acc maps link state -> (sum of prob * product, sum of prob * product^2)
    acc = {}
    for state, pi in enumerate(probs[0]):
        if pi > 0:
            cur = acc.get(state, (Fraction(0), Fraction(0)))
            acc[state] = (cur[0] + pi, cur[1] + pi)

    mean = Fraction(0)
    second = Fraction(0)
    for j in range(n + 1):
        fwd, rev = pairs[j]
        table = tables[j]
        nxt = {}
        for pin, (a1, a2) in acc.items():
            for states, prob in _stage_outcomes(fwd, rev, lengths[j], pin):
                # per-stage factor: this stage's sums appear once as a
                # numerator (its own bridge) and once as a denominator
                # (the previous stage's bridge), the count factors cancel
                g = Fraction(1)
                if j > 0:
                    den = sum(bridge_tables[j - 1][x] / table[x] for x in states)
                    g = Fraction(lengths[j] + 1) / den
                if j < n:
                    weights = [bridge_tables[j][x] / table[x] for x in states]
                    num = sum(weights)
                    if num == 0:
                        continue  # a zero estimate: contributes nothing
                    g = g * num / (lengths[j] + 1)
                    base1 = a1 * prob * g
                    base2 = a2 * prob * g * g
                    for x, w in zip(states, weights):
                        if w > 0:
                            link_p = w / num
                            c1, c2 = nxt.get(x, (Fraction(0), Fraction(0)))
                            nxt[x] = (c1 + base1 * link_p, c2 + base2 * link_p)
                else:
                    mean += a1 * prob * g
                    second += a2 * prob * g * g
        acc = nxt
    variance = second - mean * mean
    return float(mean), float(variance)


def enumerate_ais_expectation(seq, config, budget=1_000_000):
    """Exact mean and variance of the annealed-run estimate by dynamic
    programming over the single chain of states."""
    cfg = _traversed(config)
    n = cfg.n
    if seq.n_states ** max(n - 1, 1) > budget:
        raise CapacityError("state-path count exceeds budget")
    etas = cfg.etas
    tables = [seq.exact_weights(eta) for eta in etas]
    probs = [_frac_probs(t) for t in tables]

    def ratio(j, x):
        return tables[j + 1][x] / tables[j][x]

    acc = {x: (pi * ratio(0, x), pi * ratio(0, x) ** 2)
           for x, pi in enumerate(probs[0]) if pi > 0}
    for j in range(1, n):
        fwd = _exact_pair(cfg.kernel, etas[j], probs[j])[0]
        nxt = {}
        for x, (a1, a2) in acc.items():
            for y, p in enumerate(fwd[x]):
                if p > 0:
                    rr = ratio(j, y)
                    c1, c2 = nxt.get(y, (Fraction(0), Fraction(0)))
                    nxt[y] = (c1 + a1 * p * rr, c2 + a2 * p * rr * rr)
        acc = nxt
    mean = sum(a1 for a1, _ in acc.values())
    second = sum(a2 for _, a2 in acc.values())
    return float(mean), float(second - mean * mean)


@dataclass(frozen=True)
class IndependentEnumeration:
    """Exact moments of the independent-sample linked estimate, with and
    without averaging over the link choice."""

    mean_unaveraged: float
    var_unaveraged: float
    mean_averaged: float
    var_averaged: float


def enumerate_lis_independent(seq, bridge, k0, k1, budget=1_000_000):
    """Enumerate the joint law of the independent endpoint samples and the
    link choice, yielding exact moments of both estimate forms."""
    t0 = seq.exact_weights(0.0)
    t1 = seq.exact_weights(1.0)
    p0 = _frac_probs(t0)
    p1 = _frac_probs(t1)
    alive0 = [x for x, p in enumerate(p0) if p > 0]
    alive1 = [x for x, p in enumerate(p1) if p > 0]
    if len(alive0) ** (k0 + 1) * max(len(alive1), 1) ** k1 > budget:
        raise CapacityError("sample-combination count exceeds budget")
    btab = _frac_bridge_table(bridge, t0, t1)

    m_un = v_un = m_av = v_av = Fraction(0)
    scale = Fraction(k1 + 1, k0 + 1)
    for xs0 in itertools.product(alive0, repeat=k0 + 1):
        prob0 = math.prod((p0[x] for x in xs0), start=Fraction(1))
        link_w = [btab[x] / t0[x] for x in xs0]
        s0 = sum(link_w)
        for xs1 in itertools.product(alive1, repeat=k1):
            prob = prob0 * math.prod((p1[x] for x in xs1), start=Fraction(1))
            s1 = sum(btab[x] / t1[x] for x in xs1)
            if s0 == 0:
                continue  # both forms give a zero estimate
            avg = Fraction(0)
            for x, w in zip(xs0, link_w):
                if w == 0:
                    continue
                denom = btab[x] / t1[x] + s1
                est = (s0 / (k0 + 1)) / (denom / (k1 + 1))
                link_p = w / s0
                m_un += prob * link_p * est
                v_un += prob * link_p * est * est
                avg += w / denom
            est_av = scale * avg
            m_av += prob * est_av
            v_av += prob * est_av * est_av
    return IndependentEnumeration(
        mean_unaveraged=float(m_un), var_unaveraged=float(v_un - m_un * m_un),
        mean_averaged=float(m_av), var_averaged=float(v_av - m_av * m_av))


def enumerate_lis_observable(seq, config, a, budget=1_000_000):
    """Exact expectation of (estimate * mean of ``a`` over the final stage)
    and of the estimate itself, under the forward construction.

    The first equals E[a] under the eta=1 target times Z_1/Z_0; the pair
    backs the expectation-estimation identity.
    """
    cfg = _traversed(config)
    if _lis_path_count(seq.n_states, cfg) > budget:
        raise CapacityError("path count exceeds budget")
    etas, lengths, bridges = cfg.etas, cfg.chain_lengths, cfg.bridges
    n = cfg.n
    tables = [seq.exact_weights(eta) for eta in etas]
    probs = [_frac_probs(t) for t in tables]
    pairs = [_exact_pair(cfg.kernel, eta, probs[j]) for j, eta in enumerate(etas)]
    bridge_tables = [
        _frac_bridge_table(bridges[j], tables[j], tables[j + 1])
        for j in range(n)
    ]

    acc = {x: pi for x, pi in enumerate(probs[0]) if pi > 0}
    numerator = Fraction(0)
    mean_r = Fraction(0)
    for j in range(n + 1):
        fwd, rev = pairs[j]
        table = tables[j]
        nxt = {}
        for pin, a1 in acc.items():
            for states, prob in _stage_outcomes(fwd, rev, lengths[j], pin):
                g = Fraction(1)
                if j > 0:
                    den = sum(bridge_tables[j - 1][x] / table[x] for x in states)
                    g = Fraction(lengths[j] + 1) / den
                if j < n:
                    weights = [bridge_tables[j][x] / table[x] for x in states]
                    num = sum(weights)
                    if num == 0:
                        continue
                    base = a1 * prob * g * num / (lengths[j] + 1)
                    for x, w in zip(states, weights):
                        if w > 0:
                            nxt[x] = nxt.get(x, Fraction(0)) + base * w / num
                else:
                    value = a1 * prob * g
                    mean_r += value
                    obs = sum(Fraction(a(x)) for x in states)
                    numerator += value * obs / (lengths[n] + 1)
        acc = nxt
    return float(numerator), float(mean_r)


# ---------------------------------------------------------------------------
# thermodynamic integration

def thermo_log_r(seq, quadrature_points=200):
    """log(Z_1/Z_0) by integrating the expected energy along the ladder.

    For families of power form (log p = log base - lam(eta) u), the log
    ratio equals minus the integral over eta of dlam/deta times the expected
    energy under the eta distribution.  The outer eta integral is adaptive;
    the inner expectation integrates over x (or sums, for discrete support).

    Raises ``AccuracyError`` carrying the achieved value when the quadrature
    cannot reach tolerance.
    """
    view = seq.power_view()

    if view.states is not None:
        states = np.asarray(view.states)
        u_vals = np.asarray(view.u(states), dtype=float)
        base = (np.asarray(view.log_base(states), dtype=float)
                if view.log_base is not None else 0.0)

        def expected_u(eta):
            logw = base - view.lam(eta) * u_vals
            w = np.exp(logw - logw.max())
            return float((u_vals * w).sum() / w.sum())
    else:
        def expected_u(eta):
            lo, hi = view.domain(eta)
            lam = view.lam(eta)

            def dens(x):
                lb = view.log_base(x) if view.log_base is not None else 0.0
                return math.exp(lb - lam * view.u(x))

            den, den_err = integrate.quad(dens, lo, hi, limit=200)
            num, num_err = integrate.quad(lambda x: view.u(x) * dens(x),
                                          lo, hi, limit=200)
            if den <= 0:
                raise AccuracyError("vanishing normalizer in inner quadrature",
                                    estimate=float("nan"))
            return num / den

    limit = max(int(quadrature_points), 50)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(
                lambda eta: view.dlam(eta) * expected_u(eta), 0.0, 1.0,
                limit=limit, epsabs=1e-10, epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            rough = integrate.quad(
                lambda eta: view.dlam(eta) * expected_u(eta), 0.0, 1.0,
                limit=limit)[0]
            raise AccuracyError(str(exc), estimate=-rough) from exc
    if abserr > 1e-7:
        raise AccuracyError(f"quadrature error {abserr:.2g} above tolerance",
                            estimate=-value)
    return -value
