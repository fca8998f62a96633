"""Risk-sensitive scheduling quantities from predicted daily-peak distributions.

Under the worst-case assumption that every hour may host the daily peak, the
minimal capacity meeting a daily loss-of-load probability ``eta`` is the
value-at-risk at ``alpha = 1 - eta``, and the expected unserved energy of a
day is ``(1 - alpha) * sum_h (CVaR_h - VaR_h)``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import gev
from .dataset import local_days
from .ensemble import predict_arrays
from .errors import DomainError, IncompleteDay
from .gev import GevParams


def nerc_daily_lolp():
    """One event in ten years expressed per day: 0.1 / 365."""
    return 0.1 / 365.0


@dataclass(frozen=True)
class RiskPolicy:
    daily_lolp: float = field(default_factory=nerc_daily_lolp)

    def __post_init__(self):
        if not 0.0 < self.daily_lolp < 1.0:
            raise DomainError("daily LOLP must lie strictly between 0 and 1")

    @property
    def confidence(self):
        return 1.0 - self.daily_lolp


def _stack(params):
    if isinstance(params, GevParams):
        return params
    params = list(params)
    return GevParams(np.array([p.mu for p in params], dtype=float),
                     np.array([p.sigma for p in params], dtype=float),
                     np.array([p.xi for p in params], dtype=float))


def capacity_requirement(params, policy: RiskPolicy = RiskPolicy()):
    """Smallest capacity whose exceedance probability is at most ``daily_lolp``."""
    return gev.var(policy.confidence, params)


def daily_eue(hourly_params, policy: RiskPolicy = RiskPolicy()):
    """Expected unserved energy of one day from its hourly peak distributions."""
    p = _stack(hourly_params)
    alpha = policy.confidence
    gap = np.asarray(gev.cvar(alpha, p)) - np.asarray(gev.var(alpha, p))
    return float((1.0 - alpha) * np.sum(gap))


def _iso(t):
    return str(np.datetime64(t, "s")) + "Z"


@dataclass
class RiskReport:
    instants: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    xi: np.ndarray
    var: np.ndarray
    cvar: np.ndarray
    capacity: np.ndarray
    days: np.ndarray
    daily_eue: np.ndarray
    policy: RiskPolicy

    @property
    def annual_eue(self):
        return float(np.sum(self.daily_eue))

    @property
    def annual_capacity_sum(self):
        return float(np.sum(self.capacity))

    def records(self):
        for i in range(self.instants.size):
            yield {
                "instant": self.instants[i],
                "params": GevParams(self.mu[i], self.sigma[i], self.xi[i]),
                "var": self.var[i],
                "cvar": self.cvar[i],
                "capacity": self.capacity[i],
            }

    def summary(self):
        return {
            "daily_lolp": self.policy.daily_lolp,
            "confidence": self.policy.confidence,
            "days": [str(d) for d in self.days],
            "daily_eue": [float(v) for v in self.daily_eue],
            "annual_eue": self.annual_eue,
            "annual_capacity_sum": self.annual_capacity_sum,
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["instant", "mu", "sigma", "xi", "var", "cvar", "capacity"])
            for i in range(self.instants.size):
                w.writerow([_iso(self.instants[i])] + [
                    repr(float(a[i])) for a in
                    (self.mu, self.sigma, self.xi, self.var, self.cvar, self.capacity)])

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def report_from_params(params: GevParams, instants, policy: RiskPolicy = RiskPolicy(),
                       tz="UTC", hours_per_day=24) -> RiskReport:
    """Per-hour VaR/CVaR/capacity and per-day EUE for predicted parameters."""
    instants = np.asarray(instants, dtype="datetime64[s]")
    mu, sigma, xi = (np.asarray(a, dtype=float) for a in params.astuple())
    if instants.size != mu.size:
        raise ValueError("one instant is required per parameter row")
    alpha = policy.confidence
    p = GevParams(mu, sigma, xi)
    var = np.atleast_1d(gev.var(alpha, p))
    cvar = np.atleast_1d(gev.cvar(alpha, p))

    day_of = local_days(instants, tz)
    days, inverse, counts = np.unique(day_of, return_inverse=True, return_counts=True)
    bad = counts != hours_per_day
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise IncompleteDay(f"day {days[first]} has {counts[first]} rows, "
                            f"expected {hours_per_day}")
    eue = (1.0 - alpha) * np.bincount(inverse, weights=cvar - var, minlength=days.size)
    return RiskReport(instants, mu, sigma, xi, var, cvar, var.copy(), days, eue, policy)


def annual_report(model, xs, instants, policy: RiskPolicy = RiskPolicy(), tz="UTC",
                  hours_per_day=24) -> RiskReport:
    """Risk report for an hourly covariate matrix grouped into complete days."""
    params = GevParams(*predict_arrays(model, xs))
    return report_from_params(params, instants, policy, tz, hours_per_day)
