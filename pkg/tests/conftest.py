"""Shared oracles for the test suite.

These deliberately re-derive expected values by routes independent of the
library code under test: quadrature for densities, bisection for fixed
points, and direct summation for discrete expectations.
"""

import math

import numpy as np
import pytest
from scipy import integrate


@pytest.fixture
def rng():
    return np.random.default_rng(20251108)


def quad_log_z(s, t, q, eta):
    """Normalizer of exp(-|(x - eta t)/s^eta|^q) by quadrature."""
    center = eta * t
    width = s**eta

    def dens(x):
        return math.exp(-abs((x - center) / width) ** q)

    half = width * 45.0 ** (1.0 / q)  # density below e^-45 beyond this
    value, _ = integrate.quad(dens, center - half, center + half, limit=200)
    return math.log(value)


def quad_moments(s, t, q, eta):
    """(mean, sd) of the generalized-normal family member by quadrature."""
    center = eta * t
    width = s**eta

    def dens(u):
        return math.exp(-abs(u / width) ** q)

    half = width * 45.0 ** (1.0 / q)
    z, _ = integrate.quad(dens, -half, half, limit=200)
    var, _ = integrate.quad(lambda u: u * u * dens(u), -half, half, limit=200)
    return center, math.sqrt(var / z)


def quad_cdf(q, n_grid=40_001, half=8.0):
    """Callable CDF of the density proportional to exp(-|x|^q), built from
    cumulative quadrature on a fine grid."""
    xs = np.linspace(-half, half, n_grid)
    dens = np.exp(-np.abs(xs) ** q)
    cum = integrate.cumulative_trapezoid(dens, xs, initial=0.0)
    cum /= cum[-1]

    def cdf(values):
        return np.interp(values, xs, cum)

    return cdf


def bisect_bridge_ratio(log_fwd, log_rev, lo=1e-8, hi=1e8, tol=1e-12):
    """Solve the optimal-bridge self-consistency equation r = f(r) by
    bisection on log f(r) - log r, independently of the iteration code."""
    log_fwd = np.asarray(log_fwd, dtype=float)
    log_rev = np.asarray(log_rev, dtype=float)
    kappa = log_fwd.size / log_rev.size

    def log_map(r):
        rho = math.log(r) + math.log(kappa)
        num = np.logaddexp.reduce(log_fwd - np.logaddexp(rho, log_fwd))
        den = np.logaddexp.reduce(log_rev - np.logaddexp(rho + log_rev, 0.0))
        return (num - math.log(log_fwd.size)) - (den - math.log(log_rev.size))

    def gap(log_r):
        return log_map(math.exp(log_r)) - log_r

    a, b = math.log(lo), math.log(hi)
    ga, gb = gap(a), gap(b)
    assert ga * gb <= 0, "no sign change on the bracket"
    while b - a > tol:
        mid = 0.5 * (a + b)
        if ga * gap(mid) <= 0:
            b = mid
        else:
            a, ga = mid, gap(mid)
    return math.exp(0.5 * (a + b))
