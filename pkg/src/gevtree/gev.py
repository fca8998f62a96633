"""Closed-form mathematics of the generalized extreme value (GEV) distribution.

Parameterization: location ``mu``, scale ``sigma > 0`` and shape ``xi`` with

    tau(y) = (1 + xi (y - mu) / sigma) ** (-1 / xi)     xi != 0
    tau(y) = exp(-(y - mu) / sigma)                     xi == 0

so that ``F(y) = exp(-tau)`` and ``f(y) = tau ** (1 + xi) * exp(-tau) / sigma``.
A shape with ``|xi| <= eps_xi`` selects the Gumbel branch of every piecewise
formula.

All functions broadcast over numpy arrays: ``y`` (or ``alpha``) may be an
array and the fields of :class:`GevParams` may be arrays of a compatible shape.
"""

import math
from dataclasses import dataclass
from typing import Union

import mpmath
import numpy as np
from scipy import special

from .errors import (
    DomainError,
    HeavyTail,
    IllConditioned,
    NumericalError,
    RegularityError,
    SupportViolation,
)

ArrayLike = Union[float, np.ndarray]

EPS_XI = 1e-9
"""Shapes with ``|xi| <= EPS_XI`` use the Gumbel branch."""

LOG_SCORE_PENALTY = 1e12
"""Log score assigned to observations outside the support."""

EULER_GAMMA = np.euler_gamma

# Below this |xi| the Fisher closed form loses digits to cancellation and is
# evaluated in extended precision instead.
_FISHER_EXTENDED_BAND = 1e-2
_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class GevParams:
    """Location, scale and shape of a GEV distribution."""

    mu: ArrayLike
    sigma: ArrayLike
    xi: ArrayLike

    def __post_init__(self):
        mu, sigma, xi = (np.asarray(v, dtype=float) for v in (self.mu, self.sigma, self.xi))
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(xi))):
            raise DomainError("mu and xi must be finite")
        if not (np.all(np.isfinite(sigma)) and np.all(sigma > 0)):
            raise DomainError("sigma must be positive and finite")

    def astuple(self):
        return (self.mu, self.sigma, self.xi)

    def __iter__(self):
        return iter(self.astuple())


def _arrays(p):
    return (np.asarray(p.mu, dtype=float), np.asarray(p.sigma, dtype=float),
            np.asarray(p.xi, dtype=float))


def _scalar(a):
    a = np.asarray(a)
    return a.item() if a.ndim == 0 else a


def _standardize(y, p, eps_xi):
    """Return ``(z, xi, gumbel, inside, log_tau)`` with safe placeholder values
    outside the support so that no warnings are emitted."""
    mu, sigma, xi = _arrays(p)
    z, xi = np.broadcast_arrays((np.asarray(y, dtype=float) - mu) / sigma, xi)
    gumbel = np.abs(xi) <= eps_xi
    safe_xi = np.where(gumbel, 1.0, xi)
    arg = safe_xi * z
    inside = gumbel | (arg > -1.0)
    log_tau = np.where(gumbel, -z, -np.log1p(np.where(inside & ~gumbel, arg, 0.0)) / safe_xi)
    return z, xi, gumbel, inside, log_tau


def tau(y, p, eps_xi=EPS_XI):
    """Auxiliary quantity ``tau(y)``; ``cdf = exp(-tau)``."""
    _, _, _, inside, log_tau = _standardize(y, p, eps_xi)
    if not np.all(inside):
        raise SupportViolation("observation outside the GEV support")
    with np.errstate(over="ignore"):
        return _scalar(np.exp(log_tau))


def pdf(y, p, eps_xi=EPS_XI):
    """Density; zero outside the support."""
    _, xi, _, inside, log_tau = _standardize(y, p, eps_xi)
    sigma = np.asarray(p.sigma, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        log_f = -np.log(sigma) + (1.0 + xi) * log_tau - np.exp(log_tau)
        out = np.where(inside, np.exp(log_f), 0.0)
    return _scalar(np.nan_to_num(out, nan=0.0))


def cdf(y, p, eps_xi=EPS_XI):
    """Distribution function.

    Below the lower endpoint (xi > 0) this is 0; above the upper endpoint
    (xi < 0) it is 1.
    """
    _, xi, _, inside, log_tau = _standardize(y, p, eps_xi)
    with np.errstate(over="ignore"):
        f = np.exp(-np.exp(log_tau))
    out = np.where(inside, f, np.where(xi > 0, 0.0, 1.0))
    return _scalar(out)


def _check_alpha(alpha):
    alpha = np.asarray(alpha, dtype=float)
    if not np.all((alpha > 0.0) & (alpha < 1.0)):
        raise DomainError("probability must lie strictly between 0 and 1")
    return alpha


def inverse_cdf(alpha, p, eps_xi=EPS_XI):
    """Quantile function (inverse CDF)."""
    alpha = _check_alpha(alpha)
    mu, sigma, xi = _arrays(p)
    loglog = np.log(-np.log(alpha))
    gumbel = np.abs(xi) <= eps_xi
    safe_xi = np.where(gumbel, 1.0, xi)
    with np.errstate(over="ignore"):
        frechet = mu + sigma * np.expm1(-safe_xi * loglog) / safe_xi
    return _scalar(np.where(gumbel, mu - sigma * loglog, frechet))


def var(alpha, p, eps_xi=EPS_XI):
    """Value-at-risk: the ``alpha`` quantile."""
    return inverse_cdf(alpha, p, eps_xi)


def log_score(y, p, eps_xi=EPS_XI, penalty=LOG_SCORE_PENALTY):
    """Negative log-likelihood ``log(sigma) - (1 + xi) log(tau) + tau``.

    Observations outside the support score ``penalty`` so that callers
    comparing candidate fits always get a finite number.
    """
    _, xi, _, inside, log_tau = _standardize(y, p, eps_xi)
    sigma = np.asarray(p.sigma, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        ls = np.log(sigma) - (1.0 + xi) * log_tau + np.exp(log_tau)
    ls = np.where(inside & np.isfinite(ls), ls, penalty)
    return _scalar(np.minimum(ls, penalty))


def gradient(y, p, eps_xi=EPS_XI):
    """Gradient of :func:`log_score` with respect to ``(mu, sigma, xi)``.

    Returns an array whose first axis indexes the parameter.
    """
    z, xi, gumbel, inside, log_tau = _standardize(y, p, eps_xi)
    if not np.all(inside):
        raise SupportViolation("observation outside the GEV support")
    sigma = np.asarray(p.sigma, dtype=float)
    nu = np.exp(log_tau)
    safe_xi = np.where(gumbel, 1.0, xi)
    log_omega = np.where(gumbel, 0.0, -safe_xi * log_tau)
    omega = np.exp(log_omega)

    core = (1.0 + xi - nu) / omega
    d_mu = -core / sigma
    d_sigma = (1.0 - core * z) / sigma
    d_xi = -(1.0 - nu) * log_omega / safe_xi**2 + z * core / safe_xi

    # xi -> 0 limits
    e = np.exp(-z)
    d_mu = np.where(gumbel, (e - 1.0) / sigma, d_mu)
    d_sigma = np.where(gumbel, (1.0 - z + z * e) / sigma, d_sigma)
    d_xi = np.where(gumbel, z + 0.5 * z * z * (e - 1.0), d_xi)
    return np.stack(np.broadcast_arrays(d_mu, d_sigma, d_xi))


def _gumbel_fisher(sigma):
    g = EULER_GAMMA
    pi2 = math.pi**2
    z3 = special.zeta(3.0)
    mm = 1.0
    ms = g - 1.0
    mx = pi2 / 12.0 + g * g / 2.0 - g
    ss = (1.0 - g) ** 2 + pi2 / 6.0
    sx = g * pi2 / 4.0 + z3 + g + g**3 / 2.0 - 1.5 * g * g - pi2 / 4.0
    xx = (pi2 / 6.0 - g * pi2 / 2.0 - 2.0 * z3 - g**3 + g**4 / 4.0 + g * g
          + g * g * pi2 / 4.0 + 2.0 * g * z3 + 3.0 * math.pi**4 / 80.0)
    return mm / sigma**2, ms / sigma**2, mx / sigma, ss / sigma**2, sx / sigma, xx


def _closed_form_fisher(sigma, xi, gamma, digamma, pi, euler):
    # The mu-xi and sigma-xi entries carry the opposite sign of the commonly
    # printed form, which is written for the reversed shape convention.
    p = (1 + xi) ** 2 * gamma(1 + 2 * xi)
    g2 = gamma(2 + xi)
    q = g2 * (digamma(1 + xi) + (1 + xi) / xi)
    mm = p / sigma**2
    ms = -(p - g2) / (sigma**2 * xi)
    mx = -(q - p / xi) / (sigma * xi)
    ss = (1 - 2 * g2 + p) / (sigma**2 * xi**2)
    sx = -((1 - g2 + p) / xi + 1 - euler - q) / (sigma * xi**2)
    xx = (pi**2 / 6 + (1 - euler + 1 / xi) ** 2 - 2 * q / xi + p / xi**2) / xi**2
    return mm, ms, mx, ss, sx, xx


def fisher_information(p, eps_xi=EPS_XI):
    """Per-observation Fisher information of ``(mu, sigma, xi)`` as a 3x3 array."""
    sigma = float(p.sigma)
    xi = float(p.xi)
    if xi <= -0.5:
        raise RegularityError(f"Fisher information requires xi > -0.5, got {xi}")
    if abs(xi) <= eps_xi:
        entries = _gumbel_fisher(sigma)
    elif abs(xi) < _FISHER_EXTENDED_BAND:
        digits = 30 + int(4 * math.ceil(-math.log10(abs(xi))))
        with mpmath.workdps(digits):
            entries = _closed_form_fisher(
                mpmath.mpf(sigma), mpmath.mpf(xi), mpmath.gamma, mpmath.digamma,
                mpmath.pi, mpmath.euler)
            entries = tuple(float(v) for v in entries)
    else:
        with np.errstate(all="ignore"):
            entries = _closed_form_fisher(sigma, xi, special.gamma, special.digamma,
                                          math.pi, EULER_GAMMA)
    mm, ms, mx, ss, sx, xx = entries
    info = np.array([[mm, ms, mx], [ms, ss, sx], [mx, sx, xx]], dtype=float)
    if not np.all(np.isfinite(info)):
        raise NumericalError(f"non-finite Fisher information at xi={xi}")
    return info


def natural_gradient(y, p, eps_xi=EPS_XI, max_condition=_MAX_CONDITION):
    """Inverse Fisher information applied to :func:`gradient`."""
    info = fisher_information(p, eps_xi)
    cond = np.linalg.cond(info)
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditioned(f"Fisher information condition number {cond:.3g}")
    return np.linalg.solve(info, gradient(y, p, eps_xi))


def mean(p, eps_xi=EPS_XI):
    """Expectation; ``inf`` when ``xi >= 1``."""
    mu, sigma, xi = _arrays(p)
    gumbel = np.abs(xi) <= eps_xi
    heavy = xi >= 1.0
    safe_xi = np.where(gumbel | heavy, 0.5, xi)
    general = mu + sigma * (special.gamma(1.0 - safe_xi) - 1.0) / safe_xi
    out = np.where(gumbel, mu + sigma * EULER_GAMMA, general)
    return _scalar(np.where(heavy, np.inf, out))


def _check_light_tail(xi):
    if np.any(xi >= 1.0):
        raise HeavyTail("shape xi >= 1 has no finite mean")


def _lower_gamma(s, x):
    """Lower incomplete gamma function (not regularized)."""
    return special.gammainc(s, x) * special.gamma(s)


def cvar(alpha, p, eps_xi=EPS_XI):
    """Conditional value-at-risk: mean of the distribution beyond its ``alpha`` quantile."""
    alpha = _check_alpha(alpha)
    mu, sigma, xi = _arrays(p)
    _check_light_tail(xi)
    gumbel = np.abs(xi) <= eps_xi
    safe_xi = np.where(gumbel, 0.5, xi)
    tail = 1.0 - alpha
    neg_log = -np.log(alpha)
    general = mu + sigma / (tail * safe_xi) * (_lower_gamma(1.0 - safe_xi, neg_log) - tail)
    li = special.expi(np.log(alpha))
    limit = mu + sigma / tail * (EULER_GAMMA - li + alpha * np.log(neg_log))
    return _scalar(np.where(gumbel, limit, general))


def crps(y, p, eps_xi=EPS_XI):
    """Continuous ranked probability score of observation ``y``; lower is better."""
    _, xi, gumbel, inside, log_tau = _standardize(y, p, eps_xi)
    mu, sigma, _ = _arrays(p)
    _check_light_tail(xi)
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore"):
        t = np.exp(log_tau)
    # outside the support tau is +inf below a lower endpoint and 0 above an upper one
    t = np.where(inside, t, np.where(xi > 0, np.inf, 0.0))
    F = np.exp(-t)
    safe_xi = np.where(gumbel, 0.5, xi)
    g1 = special.gamma(1.0 - safe_xi)
    low = np.where(np.isinf(t), g1, _lower_gamma(1.0 - safe_xi, np.where(np.isinf(t), 1.0, t)))
    general = ((mu - y - sigma / safe_xi) * (1.0 - 2.0 * F)
               - sigma / safe_xi * (2.0**safe_xi * g1 - 2.0 * low))
    limit = mu - y + sigma * (EULER_GAMMA - math.log(2.0)) - 2.0 * sigma * special.expi(-t)
    return _scalar(np.where(gumbel, limit, general))


def sample(p, size=None, rng=None, eps_xi=EPS_XI):
    """Draw variates by inverse-transform sampling.

    ``rng`` may be a seed or a ``numpy.random.Generator``.
    """
    rng = np.random.default_rng(rng)
    u = rng.uniform(size=size if size is not None else np.shape(np.asarray(p.mu)))
    # uniform() may return exactly 0
    u = np.where(u > 0.0, u, np.nextafter(0.0, 1.0))
    return inverse_cdf(u, p, eps_xi)
