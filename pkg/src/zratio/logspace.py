"""Log-domain arithmetic with an absorbing zero-density sentinel.

Unnormalized densities are handled as logs throughout the package.  A density
of exactly zero is represented by ``NEG_INF``, which behaves as an absorbing
element under addition of logs (i.e. under multiplication of densities) and as
an identity under ``log_add`` (addition of densities).
"""

import math

import numpy as np

NEG_INF = float("-inf")


def is_zero(log_value):
    """True when a log-domain value denotes an exactly-zero density."""
    return log_value == NEG_INF


def log_add(a, b):
    """log(exp(a) + exp(b)), stable, with -inf as additive identity."""
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def log_sum(values):
    """log of the sum of exponentials of an array; -inf for an empty
    or all-zero-density input."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return NEG_INF
    m = arr.max()
    if m == NEG_INF:
        return NEG_INF
    return float(m + np.log(np.exp(arr - m).sum()))


def log_mean(values):
    """log of the mean of exponentials of an array."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("log_mean of empty input")
    return log_sum(arr) - math.log(arr.size)
