"""Probability weighted moment (PWM) estimation of GEV parameters.

For an ascending sample ``y'_1 <= ... <= y'_N``::

    b0 = mean(y')
    b1 = (1/N) sum (j-1)/(N-1) y'_j
    b2 = (1/N) sum (j-1)(j-2)/((N-1)(N-2)) y'_j
    c  = (2 b1 - b0) / (3 b2 - b0) - log 2 / log 3

    xi    = -7.8590 c - 2.9554 c**2
    sigma = (b0 - 2 b1) xi / (Gamma(1 - xi) (1 - 2**xi))
    mu    = b0 - sigma (Gamma(1 - xi) - 1) / xi

The tree search needs these estimates for thousands of candidate partitions at
once, so :func:`params_from_sums` works on arrays of rank-weighted sums and
reports admissibility as a mask instead of raising.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DegenerateSample, InvalidScale, ShapeOutOfRange, TooFewSamples
from .gev import EPS_XI, EULER_GAMMA, GevParams

_LOG2 = math.log(2.0)
_LOG2_OVER_LOG3 = math.log(2.0) / math.log(3.0)


@dataclass(frozen=True)
class PwmMoments:
    b0: float
    b1: float
    b2: float
    c: float
    n: int


def compute_moments(sample):
    """Sample probability weighted moments ``b0, b1, b2`` and the ratio ``c``."""
    y = np.sort(np.asarray(sample, dtype=float), kind="stable")
    n = y.size
    if n < 3:
        raise TooFewSamples(f"PWM needs at least 3 observations, got {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("sample contains non-finite values")
    r = np.arange(n, dtype=float)
    b0 = y.mean()
    b1 = np.dot(r, y) / (n * (n - 1))
    b2 = np.dot(r * (r - 1), y) / (n * (n - 1) * (n - 2))
    den = 3.0 * b2 - b0
    if y[0] == y[-1] or not den > 0.0 or not 2.0 * b1 - b0 > 0.0:
        raise DegenerateSample("sample has no spread")
    c = (2.0 * b1 - b0) / den - _LOG2_OVER_LOG3
    return PwmMoments(b0=b0, b1=b1, b2=b2, c=c, n=n)


def params_from_moments(b0, b1, b2, eps_xi=EPS_XI):
    """Vectorized PWM estimate.

    Returns ``(mu, sigma, xi, ok)`` where ``ok`` flags estimates that describe
    a valid distribution (positive spread, ``sigma > 0``, ``xi > -1``, all
    finite). Entries where ``ok`` is False hold arbitrary values.
    """
    b0, b1, b2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (b0, b1, b2)))
    l2 = 2.0 * b1 - b0
    den = 3.0 * b2 - b0
    ok = (den > 0.0) & (l2 > 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = l2 / np.where(ok, den, 1.0) - _LOG2_OVER_LOG3
        xi = -7.8590 * c - 2.9554 * c * c
        ok &= np.isfinite(xi) & (xi > -1.0)
        gumbel = np.abs(xi) <= eps_xi
        safe_xi = np.where(gumbel | ~ok, 0.5, xi)
        g = special.gamma(1.0 - safe_xi)
        sigma = np.where(gumbel, l2 / _LOG2,
                         -l2 * safe_xi / (g * -np.expm1(safe_xi * _LOG2)))
        mu = np.where(gumbel, b0 - sigma * EULER_GAMMA, b0 - sigma * (g - 1.0) / safe_xi)
    ok &= np.isfinite(sigma) & (sigma > 0.0) & np.isfinite(mu)
    return mu, sigma, xi, ok


def estimate(sample, eps_xi=EPS_XI):
    """Fit a GEV to ``sample`` by probability weighted moments."""
    m = compute_moments(sample)
    mu, sigma, xi, _ = params_from_moments(m.b0, m.b1, m.b2, eps_xi)
    mu, sigma, xi = float(mu), float(sigma), float(xi)
    if not math.isfinite(xi) or xi <= -1.0:
        raise ShapeOutOfRange(f"estimated shape {xi:.4g} <= -1")
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise InvalidScale(f"estimated scale {sigma:.4g} is not positive")
    return GevParams(mu, sigma, xi)
